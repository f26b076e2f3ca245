// Objective functions driving the flow: the cubic fast-slow benchmark, the
// tilted double-well decision landscape, and a weighted-sum container for
// composing labeled terms. Evaluation is checked: non-finite results throw
// with the offending state attached.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cogflow/errors.hpp"
#include "cogflow/geometry.hpp"

namespace cogflow {

struct Potential {
    std::function<double(const State&)> value_fn;
    std::function<Eigen::VectorXd(const State&)> gradient_fn;
    // Analytic m x m fast-block Hessian; empty means "fall back to finite
    // differences of the gradient".
    std::function<Eigen::MatrixXd(const State&)> hessian_fast_fn;
    bool time_varying = false;
    int dim = 2;
    Partition partition{1, 1};

    double value(const State& s) const {
        check_input(s);
        const double j = value_fn(s);
        if (!std::isfinite(j))
            throw EvaluationError("potential value non-finite at " +
                                      detail::describe_vector(s.coords),
                                  s.coords);
        return j;
    }

    Eigen::VectorXd gradient(const State& s) const {
        check_input(s);
        Eigen::VectorXd g = gradient_fn(s);
        if (g.size() != dim)
            throw ContractError("gradient length " + std::to_string(g.size()) +
                                " does not match potential dimension " + std::to_string(dim));
        if (!g.allFinite())
            throw EvaluationError("potential gradient non-finite at " +
                                      detail::describe_vector(s.coords),
                                  s.coords);
        return g;
    }

    Eigen::MatrixXd hessian_fast(const State& s) const;

    bool has_analytic_hessian() const { return static_cast<bool>(hessian_fast_fn); }

private:
    void check_input(const State& s) const {
        if (s.coords.size() != dim)
            throw ConfigError("state dimension " + std::to_string(s.coords.size()) +
                              " does not match potential dimension " + std::to_string(dim));
        if (!s.coords.allFinite())
            throw EvaluationError("state has non-finite coordinates", s.coords);
    }
};

// Central differences of the value; O(step^2) truncation error.
inline Eigen::VectorXd finite_difference_gradient(const Potential& p, const State& s,
                                                  double step = 1e-5) {
    if (!(step > 0.0)) throw ConfigError("finite-difference step must be positive");
    Eigen::VectorXd g(s.coords.size());
    State probe = s;
    for (Eigen::Index i = 0; i < s.coords.size(); ++i) {
        probe.coords = s.coords;
        probe.coords[i] = s.coords[i] + step;
        const double hi = p.value(probe);
        probe.coords[i] = s.coords[i] - step;
        const double lo = p.value(probe);
        g[i] = (hi - lo) / (2.0 * step);
    }
    return g;
}

struct FdHessianResult {
    Eigen::MatrixXd matrix;     // symmetrized
    double asymmetry = 0.0;     // max |H_ij - H_ji| before symmetrizing
    bool asymmetry_warning = false;  // asymmetry beyond 1e-8
};

// Fast-block Hessian from central differences of the analytic gradient.
inline FdHessianResult finite_difference_hessian_fast(const Potential& p, const State& s,
                                                      double step = 1e-5) {
    if (!(step > 0.0)) throw ConfigError("finite-difference step must be positive");
    const int m = p.partition.fast_dim;
    Eigen::MatrixXd h(m, m);
    State probe = s;
    for (int j = 0; j < m; ++j) {
        probe.coords = s.coords;
        probe.coords[j] = s.coords[j] + step;
        Eigen::VectorXd hi = p.gradient(probe).head(m);
        probe.coords[j] = s.coords[j] - step;
        Eigen::VectorXd lo = p.gradient(probe).head(m);
        h.col(j) = (hi - lo) / (2.0 * step);
    }
    FdHessianResult r;
    r.asymmetry = (h - h.transpose()).cwiseAbs().maxCoeff();
    r.asymmetry_warning = r.asymmetry > 1e-8;
    r.matrix = 0.5 * (h + h.transpose());
    return r;
}

inline Eigen::MatrixXd Potential::hessian_fast(const State& s) const {
    check_input(s);
    if (hessian_fast_fn) {
        Eigen::MatrixXd h = hessian_fast_fn(s);
        const int m = partition.fast_dim;
        if (h.rows() != m || h.cols() != m)
            throw ContractError("fast Hessian must be " + std::to_string(m) + "x" +
                                std::to_string(m));
        return h;
    }
    return finite_difference_hessian_fast(*this, s).matrix;
}

// J(h,c) = (h - c^3)^2 / 2 + c^2 / 2. Fast minimiser h*(c) = c^3, fast-block
// curvature identically 1, so the contraction margin is 1 everywhere.
inline Potential cubic_benchmark() {
    Potential p;
    p.dim = 2;
    p.partition = {1, 1};
    p.time_varying = false;
    p.value_fn = [](const State& s) {
        const double h = s.coords[0], c = s.coords[1];
        const double r = h - c * c * c;
        return 0.5 * r * r + 0.5 * c * c;
    };
    p.gradient_fn = [](const State& s) {
        const double h = s.coords[0], c = s.coords[1];
        const double r = h - c * c * c;
        Eigen::VectorXd g(2);
        g << r, r * (-3.0 * c * c) + c;
        return g;
    };
    p.hessian_fast_fn = [](const State&) {
        return Eigen::MatrixXd::Identity(1, 1);
    };
    return p;
}

struct DecisionParams {
    double beta = 2.0;        // steepness of the fast response g(c) = tanh(beta c)
    double ramp_start = 0.0;  // bias b(t): 0 before start,
    double ramp_end = 40.0;   // linear up to ramp_level at end, constant after
    double ramp_level = 0.5;

    double bias(double t) const {
        if (ramp_end <= ramp_start) return t >= ramp_start ? ramp_level : 0.0;
        const double u = (t - ramp_start) / (ramp_end - ramp_start);
        return ramp_level * std::clamp(u, 0.0, 1.0);
    }

    double response(double c) const { return std::tanh(beta * c); }
    double response_slope(double c) const {
        const double g = std::tanh(beta * c);
        return beta * (1.0 - g * g);
    }
};

// J(h,c,t) = (h - g(c))^2 / 2 + c^4/4 - c^2/2 + b(t) c. Two wells near
// c = +-1 that the growing tilt b(t) merges into one; h chases g(c).
inline Potential decision_potential(DecisionParams params = {}) {
    if (!(params.beta > 0.0)) throw ConfigError("beta must be positive");
    Potential p;
    p.dim = 2;
    p.partition = {1, 1};
    p.time_varying = true;
    p.value_fn = [params](const State& s) {
        const double h = s.coords[0], c = s.coords[1];
        const double r = h - params.response(c);
        return 0.5 * r * r + 0.25 * c * c * c * c - 0.5 * c * c + params.bias(s.time) * c;
    };
    p.gradient_fn = [params](const State& s) {
        const double h = s.coords[0], c = s.coords[1];
        const double r = h - params.response(c);
        Eigen::VectorXd g(2);
        g << r, r * (-params.response_slope(c)) + c * c * c - c + params.bias(s.time);
        return g;
    };
    p.hessian_fast_fn = [](const State&) {
        return Eigen::MatrixXd::Identity(1, 1);
    };
    return p;
}

struct CompositeTerm {
    std::string label;
    double weight = 1.0;
    Potential potential;
};

// Weighted sum of same-shaped potentials. The analytic fast Hessian is the
// weighted sum when every term provides one, otherwise the FD fallback kicks in.
inline Potential composite(std::vector<CompositeTerm> terms) {
    if (terms.empty()) throw ConfigError("composite potential needs at least one term");
    const int dim = terms.front().potential.dim;
    const Partition part = terms.front().potential.partition;
    bool any_time_varying = false;
    bool all_analytic_hessian = true;
    for (const auto& t : terms) {
        if (t.weight < 0.0) throw ConfigError("composite weight for '" + t.label +
                                              "' must be nonnegative");
        if (t.potential.dim != dim)
            throw ConfigError("composite terms disagree on dimension");
        any_time_varying = any_time_varying || t.potential.time_varying;
        all_analytic_hessian = all_analytic_hessian && t.potential.has_analytic_hessian();
    }
    auto shared = std::make_shared<std::vector<CompositeTerm>>(std::move(terms));
    Potential p;
    p.dim = dim;
    p.partition = part;
    p.time_varying = any_time_varying;
    p.value_fn = [shared](const State& s) {
        double v = 0.0;
        for (const auto& t : *shared) v += t.weight * t.potential.value(s);
        return v;
    };
    p.gradient_fn = [shared, dim](const State& s) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
        for (const auto& t : *shared) g += t.weight * t.potential.gradient(s);
        return g;
    };
    if (all_analytic_hessian) {
        const int m = part.fast_dim;
        p.hessian_fast_fn = [shared, m](const State& s) {
            Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, m);
            for (const auto& t : *shared) h += t.weight * t.potential.hessian_fast(s);
            return h;
        };
    }
    return p;
}

}  // namespace cogflow
