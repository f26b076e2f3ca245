// Least-squares fits used by the experiment verdicts: straight line, log-log
// power-law slope, and exponential decay rate.
#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "cogflow/errors.hpp"

namespace cogflow {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 1.0;
};

inline LineFit fit_linear(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw ContractError("fit given mismatched series lengths");
    const std::size_t n = xs.size();
    if (n < 2) throw DegenerateFitError("fit needs at least 2 points");
    bool distinct = false;
    for (std::size_t i = 1; i < n && !distinct; ++i) distinct = xs[i] != xs[0];
    if (!distinct) throw DegenerateFitError("fit needs at least 2 distinct x values");

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }

    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    // r2 = 1 for a perfectly flat series: the line explains everything there is.
    fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

// Power-law exponent estimate: regress log(y) on log(x). Nonpositive inputs
// have no logarithm, so they are a caller error, not a data point to skip.
inline LineFit fit_loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys,
                                const std::string& series_name = "series") {
    if (xs.size() != ys.size()) throw ContractError("fit given mismatched series lengths");
    std::vector<double> lx, ly;
    lx.reserve(xs.size());
    ly.reserve(ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
            throw DomainError("log-log fit of '" + series_name +
                              "' requires strictly positive data (offending index " +
                              std::to_string(i) + ")");
        lx.push_back(std::log(xs[i]));
        ly.push_back(std::log(ys[i]));
    }
    return fit_linear(lx, ly);
}

struct ExpRateFit {
    double rate = std::numeric_limits<double>::quiet_NaN();  // decay rate k in D ~ e^{-k t}
    double r2 = std::numeric_limits<double>::quiet_NaN();
    std::size_t points_used = 0;
    bool window_shortened = false;  // data hit the floor before the window ended
};

// Fits log D(t) = log D0 - k t over [t_lo, t_hi]. Points with D <= floor are
// dropped (they are numerically indistinguishable from the manifold); if that
// shortens the usable window the flag is set. Fewer than 2 usable points
// leaves the rate NaN rather than inventing one.
inline ExpRateFit fit_exp_rate(const std::vector<std::pair<double, double>>& series, double t_lo,
                               double t_hi, double floor = 1e-10) {
    if (!(t_hi > t_lo)) throw ConfigError("exponential fit window must have t_hi > t_lo");
    std::vector<double> ts, logs;
    bool saw_floored = false;
    for (const auto& [t, d] : series) {
        if (t < t_lo || t > t_hi) continue;
        if (d <= floor) {
            saw_floored = true;
            continue;
        }
        ts.push_back(t);
        logs.push_back(std::log(d));
    }

    ExpRateFit fit;
    fit.points_used = ts.size();
    fit.window_shortened = saw_floored;
    if (ts.size() < 2) return fit;
    bool distinct = false;
    for (std::size_t i = 1; i < ts.size() && !distinct; ++i) distinct = ts[i] != ts[0];
    if (!distinct) return fit;

    const LineFit line = fit_linear(ts, logs);
    fit.rate = -line.slope;
    fit.r2 = line.r2;
    return fit;
}

}  // namespace cogflow
