// Experiment drivers: timescale scaling, perturbation recovery, slow-manifold
// reduction accuracy, and the decision simulation, plus the descent and
// derivative sweeps the acceptance gate runs. Each driver returns a plain
// result record; verdicts are pure functions of those records.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cogflow/errors.hpp"
#include "cogflow/fastslow.hpp"
#include "cogflow/fitting.hpp"
#include "cogflow/format.hpp"
#include "cogflow/geometry.hpp"
#include "cogflow/integrator.hpp"
#include "cogflow/potentials.hpp"
#include "cogflow/rng.hpp"

namespace cogflow {

namespace detail {

// Index-pool parallel map. Results land in caller-owned slots by index, so
// assembly order never depends on scheduling; the first failure (by index,
// not by time of occurrence) is rethrown.
inline void parallel_for_indexed(std::size_t n, unsigned thread_cap,
                                 const std::function<void(std::size_t)>& body) {
    if (n == 0) return;
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(n, thread_cap == 0 ? hw : thread_cap));

    std::vector<std::exception_ptr> failures(n);
    std::atomic<std::size_t> next{0};
    auto drain = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };

    if (workers <= 1) {
        drain();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(drain);
        for (auto& t : pool) t.join();
    }
    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);
}

inline void throw_if_diverged(const Trajectory& traj, const std::string& context) {
    if (!traj.diverged) return;
    const double t = traj.times.empty() ? 0.0 : traj.times.back();
    const Eigen::VectorXd last =
        traj.states.empty() ? Eigen::VectorXd() : traj.states.back();
    throw DivergenceError(context + ": " + traj.divergence_message, t, last);
}

// Linear interpolation of D(t) style series at a query time.
inline double interp_scalar(const std::vector<std::pair<double, double>>& series, double t) {
    if (series.empty()) throw ContractError("interpolation of an empty series");
    auto cmp = [](const std::pair<double, double>& a, double b) { return a.first < b; };
    const auto it = std::lower_bound(series.begin(), series.end(), t, cmp);
    if (it == series.begin()) return it->second;
    if (it == series.end()) return series.back().second;
    const auto lo = it - 1;
    const double span = it->first - lo->first;
    if (span <= 0.0) return it->second;
    const double w = (t - lo->first) / span;
    return (1.0 - w) * lo->second + w * it->second;
}

}  // namespace detail

struct VerdictRow {
    std::string criterion;
    double observed = std::numeric_limits<double>::quiet_NaN();
    std::string bound;
    bool pass = false;
};

struct Verdict {
    std::vector<VerdictRow> rows;
    bool pass() const {
        for (const auto& r : rows)
            if (!r.pass) return false;
        return true;
    }
};

struct SlopeBounds {
    double lo;
    double hi;
};

// ---------------------------------------------------------------------------
// Timescale scaling
// ---------------------------------------------------------------------------

struct ScalingParams {
    std::vector<double> epsilons{0.4, 0.2, 0.1, 0.05};
    Eigen::VectorXd eta0 = (Eigen::VectorXd(2) << 1.5, -1.0).finished();
    double t_end = 20.0;
    double dt = 0.01;
    // Phase-portrait starts: a ring around the origin. The portrait runs at
    // the middle epsilon of the descending-sorted grid.
    int ring_count = 6;
    double ring_radius = 1.5;
    int ring_stride = 10;
    unsigned threads = 0;
};

struct ScalingRow {
    double epsilon;
    double mean_fast_speed;
    double mean_slow_speed;
};

struct ScalingResult {
    std::vector<ScalingRow> rows;  // strictly decreasing epsilon
    double fast_slope = 0.0;
    double slow_slope = 0.0;
    double r_squared_fast = 0.0;
    double r_squared_slow = 0.0;
    double ring_epsilon = 0.0;
    std::vector<Trajectory> ring_trajectories;
};

inline ScalingResult run_timescale_scaling(const ScalingParams& params = {}) {
    if (params.epsilons.size() < 3)
        throw ConfigError("scaling needs at least 3 epsilon values");
    for (double e : params.epsilons)
        if (!(e > 0.0 && e < 1.0)) throw ConfigError("epsilon must lie in (0,1)");

    std::vector<double> eps = params.epsilons;
    std::sort(eps.begin(), eps.end(), std::greater<>());

    const Potential potential = cubic_benchmark();
    const Partition part = potential.partition;
    IntegratorConfig config;
    config.dt = params.dt;
    config.t_end = params.t_end;

    ScalingResult result;
    result.rows.resize(eps.size());
    detail::parallel_for_indexed(eps.size(), params.threads, [&](std::size_t i) {
        FlowSystem system{potential, BlockAnisotropicMetric{eps[i], part}};
        State s0;
        s0.coords = params.eta0;
        Trajectory traj = integrate(system, s0, config);
        detail::throw_if_diverged(traj, "scaling run at epsilon=" + std::to_string(eps[i]));
        const BlockSpeeds speeds = mean_speed_by_block(traj, part);
        result.rows[i] = ScalingRow{eps[i], speeds.mean_fast, speeds.mean_slow};
    });

    std::vector<double> fast, slow;
    for (const auto& r : result.rows) {
        fast.push_back(r.mean_fast_speed);
        slow.push_back(r.mean_slow_speed);
    }
    const LineFit slow_fit = fit_loglog_slope(eps, slow, "mean slow speed");
    const LineFit fast_fit = fit_loglog_slope(eps, fast, "mean fast speed");
    result.slow_slope = slow_fit.slope;
    result.r_squared_slow = slow_fit.r2;
    result.fast_slope = fast_fit.slope;
    result.r_squared_fast = fast_fit.r2;

    result.ring_epsilon = eps[eps.size() / 2];
    IntegratorConfig ring_config = config;
    ring_config.record_stride = params.ring_stride;
    result.ring_trajectories.resize(static_cast<std::size_t>(params.ring_count));
    detail::parallel_for_indexed(
        result.ring_trajectories.size(), params.threads, [&](std::size_t j) {
            const double theta = 2.0 * std::numbers::pi * static_cast<double>(j) /
                                 static_cast<double>(params.ring_count);
            State s0;
            s0.coords = (Eigen::VectorXd(2) << params.ring_radius * std::cos(theta),
                         params.ring_radius * std::sin(theta))
                            .finished();
            FlowSystem system{potential, BlockAnisotropicMetric{result.ring_epsilon, part}};
            Trajectory traj = integrate(system, s0, ring_config);
            detail::throw_if_diverged(traj, "phase-portrait run " + std::to_string(j));
            result.ring_trajectories[j] = std::move(traj);
        });

    return result;
}

inline Verdict scaling_verdict(const ScalingResult& result,
                               const SlopeBounds& slow_bounds = {1.8, 2.2}) {
    Verdict v;
    v.rows.push_back({"slow_speed_slope", result.slow_slope,
                      format_double(slow_bounds.lo) + ".." + format_double(slow_bounds.hi),
                      result.slow_slope >= slow_bounds.lo && result.slow_slope <= slow_bounds.hi});
    v.rows.push_back({"slow_fit_r_squared", result.r_squared_slow, ">=0.99",
                      result.r_squared_slow >= 0.99});
    v.rows.push_back({"fast_speed_slope", result.fast_slope, "-0.2..0.2",
                      result.fast_slope >= -0.2 && result.fast_slope <= 0.2});
    return v;
}

// ---------------------------------------------------------------------------
// Perturbation recovery
// ---------------------------------------------------------------------------

struct RecoveryParams {
    double epsilon = 0.2;
    Eigen::VectorXd eta0 = (Eigen::VectorXd(2) << 1.5, -1.0).finished();
    double t_kick = 8.0;
    Eigen::VectorXd delta = (Eigen::VectorXd(1) << 1.0).finished();
    Perturbation::Target target = Perturbation::Target::Fast;
    double t_end = 25.0;
    double dt = 0.01;
};

struct RecoveryResult {
    Trajectory trajectory;
    std::vector<std::pair<double, double>> distance_series;
    double kick_time = 0.0;  // requested kick time, anchor of the fit windows
    double pre_kick_rate = std::numeric_limits<double>::quiet_NaN();
    double post_kick_rate = std::numeric_limits<double>::quiet_NaN();
    double pre_r2 = std::numeric_limits<double>::quiet_NaN();
    double post_r2 = std::numeric_limits<double>::quiet_NaN();
    bool pre_window_shortened = false;
    bool post_window_shortened = false;
    double delta_norm = 0.0;
    double settled_distance = std::numeric_limits<double>::quiet_NaN();  // D(t_kick + 5)
};

inline RecoveryResult run_perturbation_recovery(const RecoveryParams& params = {}) {
    const Potential potential = cubic_benchmark();
    const Partition part = potential.partition;
    IntegratorConfig config;
    config.dt = params.dt;
    config.t_end = params.t_end;

    Perturbation kick;
    kick.t_kick = params.t_kick;
    kick.delta = params.delta;
    kick.target = params.target;

    FlowSystem system{potential, BlockAnisotropicMetric{params.epsilon, part}};
    State s0;
    s0.coords = params.eta0;
    Trajectory traj = integrate(system, s0, config, kick);
    detail::throw_if_diverged(traj, "recovery run");

    RecoveryResult result;
    result.distance_series = manifold_distance_series(traj, potential, part);
    result.trajectory = std::move(traj);
    result.kick_time = params.t_kick;
    result.delta_norm = kick.full_delta(part).norm();

    // Window endpoints carry a small slack so grid times accumulated in
    // floating point land on the intended side: [1, t_kick) before the kick,
    // (t_kick + 0.5, t_kick + 5] after it.
    const double slack = 1e-6;
    const ExpRateFit pre =
        fit_exp_rate(result.distance_series, 1.0 - slack, params.t_kick - slack);
    const ExpRateFit post = fit_exp_rate(result.distance_series, params.t_kick + 0.5 + slack,
                                         params.t_kick + 5.0 + slack);
    result.pre_kick_rate = pre.rate;
    result.pre_r2 = pre.r2;
    result.pre_window_shortened = pre.window_shortened;
    result.post_kick_rate = post.rate;
    result.post_r2 = post.r2;
    result.post_window_shortened = post.window_shortened;
    result.settled_distance = detail::interp_scalar(result.distance_series, params.t_kick + 5.0);
    return result;
}

inline Verdict recovery_verdict(const RecoveryResult& result) {
    Verdict v;
    v.rows.push_back({"post_kick_rate", result.post_kick_rate, "0.9..1.1",
                      result.post_kick_rate >= 0.9 && result.post_kick_rate <= 1.1});
    const double bound = 0.01 * result.delta_norm;
    v.rows.push_back({"settled_distance", result.settled_distance,
                      "<=" + format_double(bound), result.settled_distance <= bound});
    return v;
}

// ---------------------------------------------------------------------------
// Reduction validation
// ---------------------------------------------------------------------------

struct ReductionParams {
    std::vector<double> epsilons{0.4, 0.3, 0.2, 0.15, 0.1};
    Eigen::VectorXd c0 = (Eigen::VectorXd(1) << 1.0).finished();
    // Full runs start off-manifold, displaced from h*(c0) by this much.
    double fast_offset = 0.5;
    bool t_end_scaled = true;  // t_end = 10/eps^2 per run; else fixed below
    double t_end_fixed = 50.0;
    double transient_cutoff = 5.0;
    double dt = 0.01;
    unsigned threads = 0;
};

struct ReductionOutcome {
    std::vector<ReductionReport> reports;  // descending epsilon
    double slope = std::numeric_limits<double>::quiet_NaN();
    double r_squared = std::numeric_limits<double>::quiet_NaN();
    bool slope_defined = false;
    std::string slope_error;
};

inline ReductionOutcome run_reduction_validation(const ReductionParams& params = {}) {
    if (params.epsilons.empty()) throw ConfigError("reduction needs at least one epsilon");
    for (double e : params.epsilons)
        if (!(e > 0.0 && e < 1.0)) throw ConfigError("epsilon must lie in (0,1)");

    std::vector<double> eps = params.epsilons;
    std::sort(eps.begin(), eps.end(), std::greater<>());

    const Potential potential = cubic_benchmark();
    const Partition part = potential.partition;

    ReductionOutcome outcome;
    outcome.reports.resize(eps.size());
    detail::parallel_for_indexed(eps.size(), params.threads, [&](std::size_t i) {
        const double e = eps[i];
        IntegratorConfig config;
        config.dt = params.dt;
        config.t_end = params.t_end_scaled ? 10.0 / (e * e) : params.t_end_fixed;

        FastEquilibrium eq = solve_fast_equilibrium(
            potential, params.c0, Eigen::VectorXd::Zero(part.fast_dim));
        State s0;
        s0.coords.resize(part.total());
        s0.coords.head(part.fast_dim) =
            eq.h_star + Eigen::VectorXd::Constant(part.fast_dim, params.fast_offset);
        s0.coords.tail(part.slow_dim) = params.c0;

        FlowSystem system{potential, BlockAnisotropicMetric{e, part}};
        Trajectory full = integrate(system, s0, config);
        detail::throw_if_diverged(full, "full run at epsilon=" + std::to_string(e));

        Trajectory reduced = integrate_reduced(potential, e, params.c0, config, eq.h_star);
        detail::throw_if_diverged(reduced, "reduced run at epsilon=" + std::to_string(e));

        outcome.reports[i] =
            reduction_error(full, reduced, part, params.transient_cutoff, e);
    });

    std::vector<double> errors;
    for (const auto& r : outcome.reports) errors.push_back(r.max_error);
    try {
        const LineFit fit = fit_loglog_slope(eps, errors, "reduction error");
        outcome.slope = fit.slope;
        outcome.r_squared = fit.r2;
        outcome.slope_defined = true;
    } catch (const Error& e) {
        outcome.slope_error = e.what();
    }
    return outcome;
}

inline Verdict reduction_verdict(const ReductionOutcome& outcome,
                                 const SlopeBounds& slope_bounds = {1.7, 2.3}) {
    Verdict v;
    // Worst consecutive error ratio; < 1 means strictly decreasing with epsilon.
    double worst_ratio = 0.0;
    for (std::size_t i = 0; i + 1 < outcome.reports.size(); ++i) {
        const double prev = outcome.reports[i].max_error;
        const double ratio =
            prev > 0.0 ? outcome.reports[i + 1].max_error / prev
                       : std::numeric_limits<double>::infinity();
        worst_ratio = std::max(worst_ratio, ratio);
    }
    v.rows.push_back({"error_monotonicity", worst_ratio, "<1",
                      outcome.reports.size() >= 2 && worst_ratio < 1.0});
    v.rows.push_back({"error_slope", outcome.slope,
                      format_double(slope_bounds.lo) + ".." + format_double(slope_bounds.hi),
                      outcome.slope_defined && outcome.slope >= slope_bounds.lo &&
                          outcome.slope <= slope_bounds.hi});
    return v;
}

// ---------------------------------------------------------------------------
// Decision simulation
// ---------------------------------------------------------------------------

struct DecisionRunParams {
    DecisionParams model;
    double epsilon = 0.3;
    double c0 = 1.0;  // start on-manifold: h0 = tanh(beta * c0)
    double t_end = 60.0;
    double dt = 0.01;
};

struct DecisionResult {
    Trajectory trajectory;
    std::optional<double> switch_time;  // first t with c < 0 after ramp start
    int crossing_count = 0;             // sign changes of c over the whole run
    double bias_at_switch = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::pair<double, double>> tracking_series;  // (t, |h - g(c)|)
    DecisionRunParams params;
};

inline DecisionResult run_decision_simulation(const DecisionRunParams& params = {}) {
    const Potential potential = decision_potential(params.model);
    const Partition part = potential.partition;
    IntegratorConfig config;
    config.dt = params.dt;
    config.t_end = params.t_end;

    State s0;
    s0.coords = (Eigen::VectorXd(2) << params.model.response(params.c0), params.c0).finished();
    FlowSystem system{potential, BlockAnisotropicMetric{params.epsilon, part}};
    Trajectory traj = integrate(system, s0, config);
    detail::throw_if_diverged(traj, "decision run");

    DecisionResult result;
    result.params = params;
    result.tracking_series.reserve(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double h = traj.states[i][0];
        const double c = traj.states[i][1];
        result.tracking_series.emplace_back(traj.times[i],
                                            std::abs(h - params.model.response(c)));
        if (i > 0) {
            const double prev = traj.states[i - 1][1];
            if ((prev >= 0.0) != (c >= 0.0)) ++result.crossing_count;
        }
        if (!result.switch_time && c < 0.0 && traj.times[i] >= params.model.ramp_start)
            result.switch_time = traj.times[i];
    }
    if (result.switch_time) result.bias_at_switch = params.model.bias(*result.switch_time);
    result.trajectory = std::move(traj);
    return result;
}

struct DecisionExperiment {
    DecisionResult main;
    DecisionResult control;  // sub-threshold ramp, must not switch
};

// The control run always caps the ramp at 0.2 (below the saddle-node level),
// keeping every other parameter from the main run.
inline DecisionExperiment run_decision_experiment(const DecisionRunParams& params = {}) {
    DecisionExperiment exp;
    exp.main = run_decision_simulation(params);
    DecisionRunParams control = params;
    control.model.ramp_level = 0.2;
    exp.control = run_decision_simulation(control);
    return exp;
}

// Max tracking error outside the blackout window (switch-1, switch+3); with
// no switch the whole run counts.
inline double max_tracking_outside_window(const DecisionResult& result) {
    double worst = 0.0;
    for (const auto& [t, err] : result.tracking_series) {
        if (result.switch_time && t > *result.switch_time - 1.0 &&
            t < *result.switch_time + 3.0)
            continue;
        worst = std::max(worst, err);
    }
    return worst;
}

inline Verdict decision_verdict(const DecisionExperiment& exp) {
    Verdict v;
    v.rows.push_back({"switch_count", static_cast<double>(exp.main.crossing_count), "==1",
                      exp.main.crossing_count == 1 && exp.main.switch_time.has_value()});
    v.rows.push_back({"bias_at_switch", exp.main.bias_at_switch, ">=0.335",
                      exp.main.switch_time.has_value() && exp.main.bias_at_switch >= 0.335});
    const double tracking = max_tracking_outside_window(exp.main);
    v.rows.push_back({"tracking_error", tracking, "<=0.05", tracking <= 0.05});
    v.rows.push_back({"control_no_switch", static_cast<double>(exp.control.crossing_count),
                      "==0", !exp.control.switch_time.has_value()});
    return v;
}

// ---------------------------------------------------------------------------
// Descent property sweep
// ---------------------------------------------------------------------------

struct DescentParams {
    int n_starts = 50;
    double box_lo = -2.0;
    double box_hi = 2.0;
    std::vector<double> epsilons{0.4, 0.1};
    double t_end = 10.0;
    double dt = 0.01;
    std::uint64_t seed = 12345;
    unsigned threads = 0;
};

struct DescentResult {
    int runs = 0;
    double worst_increase = 0.0;  // max over runs of report.max_increase
    double worst_slack = 0.0;     // slack of the run with the worst increase
    bool pass = true;
};

inline DescentResult run_descent_check(const DescentParams& params = {}) {
    const Potential potential = cubic_benchmark();
    const Partition part = potential.partition;
    IntegratorConfig config;
    config.dt = params.dt;
    config.t_end = params.t_end;

    Rng rng(params.seed);
    std::vector<State> starts;
    for (int i = 0; i < params.n_starts; ++i) {
        State s;
        s.coords = (Eigen::VectorXd(2) << rng.uniform(params.box_lo, params.box_hi),
                    rng.uniform(params.box_lo, params.box_hi))
                       .finished();
        starts.push_back(std::move(s));
    }

    const std::size_t total = starts.size() * params.epsilons.size();
    std::vector<MonotonicityReport> reports(total);
    detail::parallel_for_indexed(total, params.threads, [&](std::size_t idx) {
        const std::size_t si = idx % starts.size();
        const double e = params.epsilons[idx / starts.size()];
        FlowSystem system{potential, BlockAnisotropicMetric{e, part}};
        Trajectory traj = integrate(system, starts[si], config);
        detail::throw_if_diverged(traj, "descent run at epsilon=" + std::to_string(e));
        reports[idx] = monotonicity_report(traj);
    });

    DescentResult result;
    result.runs = static_cast<int>(total);
    for (const auto& r : reports) {
        if (r.max_increase > result.worst_increase) {
            result.worst_increase = r.max_increase;
            result.worst_slack = r.slack;
        }
        result.pass = result.pass && r.pass;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Derivative oracle sweep
// ---------------------------------------------------------------------------

struct GradcheckParams {
    int n_states = 200;
    double box_lo = -2.0;
    double box_hi = 2.0;
    double t_lo = 0.0;
    double t_hi = 60.0;  // time samples matter only for time-varying potentials
    double fd_step = 1e-5;
    std::uint64_t seed = 67890;
};

struct GradcheckResult {
    double max_gradient_error = 0.0;  // relative, against central differences
    double max_hessian_error = 0.0;
    int states_checked = 0;
};

inline GradcheckResult run_gradient_check(const Potential& potential,
                                          const GradcheckParams& params = {}) {
    Rng rng(params.seed);
    GradcheckResult result;
    for (int i = 0; i < params.n_states; ++i) {
        State s;
        s.coords.resize(potential.dim);
        for (int d = 0; d < potential.dim; ++d)
            s.coords[d] = rng.uniform(params.box_lo, params.box_hi);
        s.time = potential.time_varying ? rng.uniform(params.t_lo, params.t_hi) : 0.0;

        const Eigen::VectorXd analytic = potential.gradient(s);
        const Eigen::VectorXd numeric =
            finite_difference_gradient(potential, s, params.fd_step);
        const double gerr =
            (analytic - numeric).norm() / std::max(1.0, analytic.norm());
        result.max_gradient_error = std::max(result.max_gradient_error, gerr);

        if (potential.has_analytic_hessian()) {
            const Eigen::MatrixXd ha = potential.hessian_fast(s);
            const FdHessianResult hn =
                finite_difference_hessian_fast(potential, s, params.fd_step);
            const double herr =
                (ha - hn.matrix).norm() / std::max(1.0, ha.norm());
            result.max_hessian_error = std::max(result.max_hessian_error, herr);
        }
        ++result.states_checked;
    }
    return result;
}

}  // namespace cogflow
