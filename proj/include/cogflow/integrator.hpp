// Fixed-step RK4 integration of the flow d(eta)/dt = -G(eta)^{-1} grad J,
// with trajectory recording, an optional instantaneous kick, a descent
// monitor, and per-block speed averages. Fixed steps keep every artifact
// bit-reproducible; the stiffness ratio in all experiments is mild enough
// that adaptivity buys nothing.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cogflow/errors.hpp"
#include "cogflow/geometry.hpp"
#include "cogflow/potentials.hpp"

namespace cogflow {

struct IntegratorConfig {
    double dt = 0.01;
    double t_end = 20.0;
    int record_stride = 1;  // record every k-th step; endpoints always kept

    void validate() const {
        if (!(dt > 0.0)) throw ConfigError("dt must be positive");
        if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
        if (dt > t_end) throw ConfigError("dt must not exceed t_end");
        if (record_stride < 1) throw ConfigError("record_stride must be >= 1");
    }
};

struct Perturbation {
    enum class Target { Fast, Slow, Full };
    double t_kick = 0.0;
    Eigen::VectorXd delta;  // length must match the targeted block
    Target target = Target::Fast;

    // Expands the block-targeted delta to full state dimension.
    Eigen::VectorXd full_delta(const Partition& p) const {
        const int n = p.total();
        const int want = target == Target::Fast   ? p.fast_dim
                         : target == Target::Slow ? p.slow_dim
                                                  : n;
        if (delta.size() != want)
            throw ConfigError("kick delta has length " + std::to_string(delta.size()) +
                              " but the targeted block has dimension " + std::to_string(want));
        Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
        if (target == Target::Fast)
            d.head(p.fast_dim) = delta;
        else if (target == Target::Slow)
            d.tail(p.slow_dim) = delta;
        else
            d = delta;
        return d;
    }
};

struct FlowSystem {
    Potential potential;
    Metric metric;

    Eigen::VectorXd field(const State& s) const {
        return -riemannian_gradient(potential, metric, s);
    }
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    std::vector<double> potential_values;
    std::vector<Eigen::VectorXd> velocities;  // exact field at each record
    bool autonomous = true;
    bool kicked = false;
    std::optional<double> kick_time;
    std::optional<std::size_t> kick_index;
    bool diverged = false;
    std::string divergence_message;
    bool stability_warning = false;  // dt exceeded 0.2 / lambda_max estimate

    std::size_t size() const { return times.size(); }
};

// One classical RK4 step; stages that go non-finite abort with the time and
// the state the step started from.
inline State step_rk4(const FlowSystem& system, const State& state, double dt) {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    auto eval = [&](const Eigen::VectorXd& coords, double t) {
        State probe{coords, t};
        Eigen::VectorXd v = system.field(probe);
        if (!v.allFinite())
            throw DivergenceError("flow field non-finite during RK4 stage at t=" +
                                      std::to_string(t),
                                  state.time, state.coords);
        return v;
    };
    const double t = state.time;
    const Eigen::VectorXd k1 = eval(state.coords, t);
    const Eigen::VectorXd k2 = eval(state.coords + 0.5 * dt * k1, t + 0.5 * dt);
    const Eigen::VectorXd k3 = eval(state.coords + 0.5 * dt * k2, t + 0.5 * dt);
    const Eigen::VectorXd k4 = eval(state.coords + dt * k3, t + dt);
    State next;
    next.coords = state.coords + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    next.time = t + dt;
    if (!next.coords.allFinite())
        throw DivergenceError("state non-finite after RK4 step at t=" + std::to_string(t),
                              t, state.coords);
    return next;
}

// Integrates from initial.time to t_end. A kick, when present, is applied at
// the first step boundary >= t_kick (never mid-step, so RK4 stages stay
// consistent); that boundary and the final point are always recorded.
// Divergence does not throw: the partial trajectory is returned with the
// flag and message set.
inline Trajectory integrate(const FlowSystem& system, const State& initial,
                            const IntegratorConfig& config,
                            const std::optional<Perturbation>& perturbation = std::nullopt) {
    config.validate();
    require_finite(initial.coords, "initial state");
    if (perturbation) {
        if (perturbation->t_kick < initial.time || perturbation->t_kick >= config.t_end)
            throw ConfigError("t_kick must lie within [t_start, t_end)");
        perturbation->full_delta(system.potential.partition);  // validate length early
    }

    Trajectory traj;
    traj.autonomous = !system.potential.time_varying;

    // Stability estimate from the fast-block curvature at the start.
    try {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
            system.potential.hessian_fast(initial), Eigen::EigenvaluesOnly);
        const double lambda_max = es.eigenvalues().maxCoeff();
        if (lambda_max > 0.0 && config.dt > 0.2 / lambda_max) traj.stability_warning = true;
    } catch (const Error&) {
        // curvature probe is advisory only
    }

    const double span = config.t_end - initial.time;
    const long n_steps = static_cast<long>(std::ceil(span / config.dt - 1e-9));

    State current = initial;
    try {
        for (long i = 0; i <= n_steps; ++i) {
            bool forced_record = (i == n_steps);
            if (perturbation && !traj.kicked && current.time >= perturbation->t_kick - 1e-9) {
                current.coords += perturbation->full_delta(system.potential.partition);
                traj.kicked = true;
                traj.kick_time = current.time;
                traj.kick_index = traj.times.size();
                forced_record = true;
            }
            if (i % config.record_stride == 0 || forced_record) {
                traj.times.push_back(current.time);
                traj.states.push_back(current.coords);
                traj.potential_values.push_back(system.potential.value(current));
                traj.velocities.push_back(system.field(current));
            }
            if (i < n_steps) current = step_rk4(system, current, config.dt);
        }
    } catch (const DivergenceError& e) {
        traj.diverged = true;
        traj.divergence_message = e.what();
    } catch (const EvaluationError& e) {
        traj.diverged = true;
        traj.divergence_message = e.what();
    }
    return traj;
}

struct MonotonicityReport {
    double max_increase = 0.0;  // largest J(i+1) - J(i) over recorded pairs
    std::optional<std::size_t> violating_index;
    double slack = 0.0;  // 1e-9 * (1 + max |J|)
    bool pass = true;
};

// Descent monitor. Only meaningful for autonomous potentials without kicks;
// calling it otherwise is a caller bug.
inline MonotonicityReport monotonicity_report(const Trajectory& traj) {
    if (!traj.autonomous)
        throw ContractError("descent monotonicity applies to autonomous potentials only");
    if (traj.kicked)
        throw ContractError("descent monotonicity is void across a kick");
    if (traj.size() < 2) return {};
    MonotonicityReport report;
    double max_abs_j = 0.0;
    for (double j : traj.potential_values) max_abs_j = std::max(max_abs_j, std::abs(j));
    report.slack = 1e-9 * (1.0 + max_abs_j);
    report.max_increase = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < traj.potential_values.size(); ++i) {
        const double inc = traj.potential_values[i + 1] - traj.potential_values[i];
        if (inc > report.max_increase) report.max_increase = inc;
        if (inc > report.slack && !report.violating_index) report.violating_index = i;
    }
    report.pass = !report.violating_index.has_value();
    return report;
}

struct BlockSpeeds {
    double mean_fast = 0.0;
    double mean_slow = 0.0;
};

// Arithmetic mean of the recorded velocity-block norms. Records are uniformly
// spaced at stride 1 (which every experiment uses), making this the plain
// time average.
inline BlockSpeeds mean_speed_by_block(const Trajectory& traj, const Partition& partition) {
    if (traj.size() == 0) throw ContractError("mean speed of an empty trajectory");
    partition.validate(static_cast<int>(traj.states.front().size()));
    BlockSpeeds speeds;
    for (const auto& v : traj.velocities) {
        speeds.mean_fast += v.head(partition.fast_dim).norm();
        speeds.mean_slow += v.tail(partition.slow_dim).norm();
    }
    speeds.mean_fast /= static_cast<double>(traj.size());
    speeds.mean_slow /= static_cast<double>(traj.size());
    return speeds;
}

}  // namespace cogflow
