// Fast-slow machinery: the fast-equilibrium map h*(c), its stability margin,
// manifold sampling, the reduced slow flow, and the distance/error measures
// the recovery and reduction experiments are built on.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "cogflow/errors.hpp"
#include "cogflow/geometry.hpp"
#include "cogflow/integrator.hpp"
#include "cogflow/potentials.hpp"

namespace cogflow {

struct FastEquilibrium {
    Eigen::VectorXd slow;    // the c this equilibrium belongs to
    Eigen::VectorXd h_star;  // minimiser of J(., c)
    double stability_margin = 0.0;  // lambda_min of the fast-block Hessian there
    double residual = 0.0;          // |grad_h J| at the solution
    int iterations = 0;
    // Margin <= 0 means we landed on a stationary point that is not a strict
    // minimum (flagged, not thrown: the caller decides what that means).
    bool stability_violation = false;
};

namespace detail {

inline State assemble(const Partition& p, const Eigen::VectorXd& h, const Eigen::VectorXd& c,
                      double t) {
    State s;
    s.coords.resize(p.total());
    s.coords.head(p.fast_dim) = h;
    s.coords.tail(p.slow_dim) = c;
    s.time = t;
    return s;
}

}  // namespace detail

// Newton iteration on grad_h J(., c) = 0 with residual backtracking; falls
// back to a gradient-descent direction whenever the Hessian solve fails or
// the Newton direction cannot reduce the residual. Warm starts make this
// 1-2 iterations along any continuous path.
inline FastEquilibrium solve_fast_equilibrium(const Potential& potential,
                                              const Eigen::VectorXd& c,
                                              const Eigen::VectorXd& h_init, double t = 0.0,
                                              double tol = 1e-10, int max_iter = 100) {
    const Partition& part = potential.partition;
    if (c.size() != part.slow_dim || h_init.size() != part.fast_dim)
        throw ConfigError("equilibrium solve called with mismatched block dimensions");

    Eigen::VectorXd h = h_init;
    auto fast_grad = [&](const Eigen::VectorXd& hh) {
        return potential.gradient(detail::assemble(part, hh, c, t)).head(part.fast_dim).eval();
    };

    Eigen::VectorXd g = fast_grad(h);
    double res = g.norm();
    Eigen::VectorXd best_h = h;
    double best_res = res;
    int iter = 0;
    for (; iter < max_iter && res > tol; ++iter) {
        const Eigen::MatrixXd hess =
            potential.hessian_fast(detail::assemble(part, h, c, t));
        Eigen::VectorXd direction;
        Eigen::LLT<Eigen::MatrixXd> llt(hess);
        bool have_newton = llt.info() == Eigen::Success;
        if (have_newton) direction = -llt.solve(g);

        auto try_direction = [&](const Eigen::VectorXd& d) -> bool {
            double lambda = 1.0;
            for (int bt = 0; bt < 50; ++bt) {
                Eigen::VectorXd candidate = h + lambda * d;
                Eigen::VectorXd gc = fast_grad(candidate);
                const double rc = gc.norm();
                if (rc <= res) {  // residual never allowed to grow
                    h = candidate;
                    g = gc;
                    res = rc;
                    return true;
                }
                lambda *= 0.5;
            }
            return false;
        };

        bool moved = have_newton && try_direction(direction);
        if (!moved) moved = try_direction(-g);
        if (!moved) break;  // no descent direction left; report best found
        if (res < best_res) {
            best_res = res;
            best_h = h;
        }
    }

    if (res > tol)
        throw NonConvergenceError("fast equilibrium solve stalled at residual " +
                                      std::to_string(best_res),
                                  best_h, best_res);

    FastEquilibrium eq;
    eq.slow = c;
    eq.h_star = h;
    eq.residual = res;
    eq.iterations = iter;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        potential.hessian_fast(detail::assemble(part, h, c, t)), Eigen::EigenvaluesOnly);
    eq.stability_margin = es.eigenvalues().minCoeff();
    eq.stability_violation = eq.stability_margin <= 0.0;
    return eq;
}

struct CriticalManifoldSample {
    std::vector<FastEquilibrium> points;
    double min_margin = std::numeric_limits<double>::infinity();
};

// Solves h*(c) over a grid (strictly increasing in each slow coordinate),
// warm-starting each solve from the previous solution. Returns all samples
// plus the certified minimum stability margin.
inline CriticalManifoldSample stability_margin_over_grid(
    const Potential& potential, const std::vector<Eigen::VectorXd>& c_grid,
    const Eigen::VectorXd& h_init, double t = 0.0, double tol = 1e-10) {
    if (c_grid.empty()) throw ContractError("manifold sampling needs a nonempty grid");
    for (std::size_t i = 0; i + 1 < c_grid.size(); ++i)
        for (Eigen::Index d = 0; d < c_grid[i].size(); ++d)
            if (!(c_grid[i + 1][d] > c_grid[i][d]))
                throw ContractError("manifold grid must be strictly increasing per coordinate");

    CriticalManifoldSample sample;
    Eigen::VectorXd warm = h_init;
    for (const auto& c : c_grid) {
        FastEquilibrium eq = solve_fast_equilibrium(potential, c, warm, t, tol);
        warm = eq.h_star;
        sample.min_margin = std::min(sample.min_margin, eq.stability_margin);
        sample.points.push_back(std::move(eq));
    }
    return sample;
}

// The slow flow restricted to the manifold: -eps^2 * grad_c J(h*(c), c).
inline Eigen::VectorXd reduced_velocity(const Potential& potential, double epsilon,
                                        const Eigen::VectorXd& c, const Eigen::VectorXd& h_star,
                                        double t = 0.0) {
    const Partition& part = potential.partition;
    const State s = detail::assemble(part, h_star, c, t);
    return (-(epsilon * epsilon) *
            potential.gradient(s).tail(part.slow_dim))
        .eval();
}

// RK4 on the reduced field; every stage re-solves the fast equilibrium to
// tolerance, warm-started along the path. The returned trajectory carries the
// slow coordinates as states and J(h*(c), c) as the potential values. Solver
// failure mid-run yields a partial trajectory with the diverged flag set.
inline Trajectory integrate_reduced(const Potential& potential, double epsilon,
                                    const Eigen::VectorXd& c0, const IntegratorConfig& config,
                                    const std::optional<Eigen::VectorXd>& fast_init = std::nullopt,
                                    double t_start = 0.0) {
    config.validate();
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0,1)");
    require_finite(c0, "initial slow state");
    const Partition& part = potential.partition;

    Trajectory traj;
    traj.autonomous = !potential.time_varying;
    Eigen::VectorXd warm =
        fast_init.value_or(Eigen::VectorXd::Zero(part.fast_dim));

    auto field_at = [&](const Eigen::VectorXd& c, double t) {
        FastEquilibrium eq = solve_fast_equilibrium(potential, c, warm, t);
        warm = eq.h_star;
        return reduced_velocity(potential, epsilon, c, eq.h_star, t);
    };

    const double span = config.t_end - t_start;
    const long n_steps = static_cast<long>(std::ceil(span / config.dt - 1e-9));
    Eigen::VectorXd c = c0;
    double t = t_start;
    try {
        for (long i = 0; i <= n_steps; ++i) {
            if (i % config.record_stride == 0 || i == n_steps) {
                FastEquilibrium eq = solve_fast_equilibrium(potential, c, warm, t);
                warm = eq.h_star;
                traj.times.push_back(t);
                traj.states.push_back(c);
                traj.potential_values.push_back(
                    potential.value(detail::assemble(part, eq.h_star, c, t)));
                traj.velocities.push_back(reduced_velocity(potential, epsilon, c, eq.h_star, t));
            }
            if (i < n_steps) {
                const double dt = config.dt;
                const Eigen::VectorXd k1 = field_at(c, t);
                const Eigen::VectorXd k2 = field_at(c + 0.5 * dt * k1, t + 0.5 * dt);
                const Eigen::VectorXd k3 = field_at(c + 0.5 * dt * k2, t + 0.5 * dt);
                const Eigen::VectorXd k4 = field_at(c + dt * k3, t + dt);
                c += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                t += dt;
                if (!c.allFinite())
                    throw DivergenceError("reduced state non-finite", t, c);
            }
        }
    } catch (const NonConvergenceError& e) {
        traj.diverged = true;
        traj.divergence_message = e.what();
    } catch (const DivergenceError& e) {
        traj.diverged = true;
        traj.divergence_message = e.what();
    } catch (const EvaluationError& e) {
        traj.diverged = true;
        traj.divergence_message = e.what();
    }
    return traj;
}

// D(t) = |h(t) - h*(c(t))|, the quantity the recovery experiment regresses.
inline std::vector<std::pair<double, double>> manifold_distance_series(
    const Trajectory& traj, const Potential& potential, const Partition& partition,
    double tol = 1e-10) {
    if (traj.size() == 0) throw ContractError("distance series of an empty trajectory");
    std::vector<std::pair<double, double>> series;
    series.reserve(traj.size());
    Eigen::VectorXd warm = traj.states.front().head(partition.fast_dim);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const Eigen::VectorXd h = traj.states[i].head(partition.fast_dim);
        const Eigen::VectorXd c = traj.states[i].tail(partition.slow_dim);
        FastEquilibrium eq = solve_fast_equilibrium(potential, c, warm, traj.times[i], tol);
        warm = eq.h_star;
        series.emplace_back(traj.times[i], (h - eq.h_star).norm());
    }
    return series;
}

struct ReductionReport {
    double epsilon = std::numeric_limits<double>::quiet_NaN();
    double max_error = 0.0;  // max over the shared grid of |c_full - c_reduced|
    double transient_cutoff = 0.0;
};

namespace detail {

// Linear interpolation of a sampled vector series at query time t.
inline Eigen::VectorXd interp_series(const std::vector<double>& ts,
                                     const std::vector<Eigen::VectorXd>& vs, double t) {
    const auto it = std::lower_bound(ts.begin(), ts.end(), t);
    if (it == ts.begin()) return vs.front();
    if (it == ts.end()) return vs.back();
    const std::size_t hi = static_cast<std::size_t>(it - ts.begin());
    const std::size_t lo = hi - 1;
    const double span = ts[hi] - ts[lo];
    if (span <= 0.0) return vs[hi];
    const double w = (t - ts[lo]) / span;
    return (1.0 - w) * vs[lo] + w * vs[hi];
}

}  // namespace detail

// Max-in-time slow-coordinate gap between a full trajectory and a reduced
// one, after the transient. Both series are linearly interpolated onto the
// union of their time grids restricted to the overlap and t >= cutoff.
inline ReductionReport reduction_error(const Trajectory& full, const Trajectory& reduced,
                                       const Partition& partition, double transient_cutoff,
                                       double epsilon = std::numeric_limits<double>::quiet_NaN()) {
    if (full.size() == 0 || reduced.size() == 0)
        throw ContractError("reduction error needs nonempty trajectories");
    if (transient_cutoff < 0.0) throw ConfigError("transient cutoff must be >= 0");

    std::vector<Eigen::VectorXd> full_slow;
    full_slow.reserve(full.size());
    for (const auto& s : full.states) full_slow.push_back(s.tail(partition.slow_dim));

    const double lo = std::max({full.times.front(), reduced.times.front(), transient_cutoff});
    const double hi = std::min(full.times.back(), reduced.times.back());
    // Accumulated step times drift by ulps, so window membership gets slack;
    // otherwise a sample sitting on the cutoff can fall out of the grid.
    const double slack = 1e-9;
    if (hi < lo - slack)
        throw ContractError("trajectories do not overlap past the transient cutoff");

    std::vector<double> grid;
    grid.reserve(full.size() + reduced.size());
    for (double t : full.times)
        if (t >= lo - slack && t <= hi + slack) grid.push_back(t);
    for (double t : reduced.times)
        if (t >= lo - slack && t <= hi + slack) grid.push_back(t);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-12; }),
               grid.end());

    ReductionReport report;
    report.epsilon = epsilon;
    report.transient_cutoff = transient_cutoff;
    for (double t : grid) {
        const Eigen::VectorXd a = detail::interp_series(full.times, full_slow, t);
        const Eigen::VectorXd b = detail::interp_series(reduced.times, reduced.states, t);
        report.max_error = std::max(report.max_error, (a - b).norm());
    }
    return report;
}

}  // namespace cogflow
