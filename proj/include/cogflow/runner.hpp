// Experiment dispatch and artifact emission behind the CLI. Exit contract:
// 0 all dispatched verdicts pass, 1 criterion failure, 2 configuration
// error, 3 numerical failure. Nonzero exits after the output directory is
// usable leave a FAILED marker beside the partial artifacts.
#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "cogflow/config.hpp"
#include "cogflow/csv.hpp"
#include "cogflow/errors.hpp"
#include "cogflow/experiments.hpp"
#include "cogflow/fastslow.hpp"
#include "cogflow/svg.hpp"

namespace cogflow {

// COGFLOW_THREADS caps the per-epsilon sweep parallelism; unset or empty
// means all available cores (0 for the pool helper).
inline unsigned resolve_thread_cap() {
    const char* raw = std::getenv("COGFLOW_THREADS");
    if (raw == nullptr || *raw == '\0') return 0;
    char* end = nullptr;
    const long v = std::strtol(raw, &end, 10);
    if (*end != '\0' || v < 1)
        throw ConfigError("COGFLOW_THREADS must be a positive integer, got '" +
                          std::string(raw) + "'");
    return static_cast<unsigned>(v);
}

namespace detail {

inline bool dispatches(const RunConfig& c, const std::string& name) {
    return c.experiment == name || c.experiment == "all";
}

inline Perturbation::Target parse_kick_target(const std::string& name) {
    if (name == "fast") return Perturbation::Target::Fast;
    if (name == "slow") return Perturbation::Target::Slow;
    return Perturbation::Target::Full;
}

inline DecisionParams decision_model(const RunConfig& c) {
    DecisionParams model;
    model.beta = c.beta;
    model.ramp_start = c.ramp_start;
    model.ramp_end = c.ramp_end;
    model.ramp_level = c.ramp_level;
    return model;
}

// Every numeric precondition of the dispatched operations, checked before
// any integration starts.
inline void validate_for_dispatch(const RunConfig& c) {
    if (dispatches(c, "scaling") && c.epsilons.size() < 3)
        throw ConfigError("scaling needs at least 3 epsilon values");
    if (dispatches(c, "recovery")) {
        const double t_end = c.t_end.value_or(25.0);
        if (!(c.t_kick < t_end))
            throw ConfigError("t_kick must be smaller than the recovery t_end");
        const Eigen::Index expected = c.kick_target == "full" ? 2 : 1;
        if (c.kick_delta.size() != expected)
            throw ConfigError("kick_delta needs " + std::to_string(expected) +
                              " component(s) for target '" + c.kick_target + "'");
    }
    if (dispatches(c, "decision") && !(c.ramp_end > c.ramp_start))
        throw ConfigError("ramp_end must be greater than ramp_start");
}

inline void write_verdict_csv(const std::filesystem::path& path, const Verdict& verdict) {
    CsvBuilder csv({"criterion", "observed", "bound", "pass"});
    for (const auto& r : verdict.rows)
        csv.row({r.criterion, format_double(r.observed), r.bound, r.pass ? "true" : "false"});
    write_text_file(path, csv.text());
}

inline void write_scaling(const RunConfig& c, const std::filesystem::path& dir,
                          unsigned threads, bool& all_pass) {
    ScalingParams params;
    params.epsilons = c.epsilons;
    params.eta0 = c.initial_state;
    params.t_end = c.t_end.value_or(20.0);
    params.dt = c.dt;
    params.threads = threads;
    const ScalingResult result = run_timescale_scaling(params);
    const Verdict verdict = scaling_verdict(result, c.slope_bounds.value_or(SlopeBounds{1.8, 2.2}));
    all_pass = all_pass && verdict.pass();

    CsvBuilder data({"epsilon", "mean_fast_speed", "mean_slow_speed"});
    for (const auto& r : result.rows)
        data.row({format_double(r.epsilon), format_double(r.mean_fast_speed),
                  format_double(r.mean_slow_speed)});
    write_text_file(dir / "scaling_data.csv", data.text());
    write_verdict_csv(dir / "scaling_verdict.csv", verdict);

    std::vector<PlotSeries> speeds(2);
    speeds[0].label = "mean fast speed";
    speeds[1].label = "mean slow speed";
    for (const auto& r : result.rows) {
        speeds[0].xs.push_back(r.epsilon);
        speeds[0].ys.push_back(r.mean_fast_speed);
        speeds[1].xs.push_back(r.epsilon);
        speeds[1].ys.push_back(r.mean_slow_speed);
    }
    PlotAxes loglog;
    loglog.x_log = true;
    loglog.y_log = true;
    loglog.x_label = "epsilon";
    loglog.y_label = "mean speed";
    emit_svg_lineplot(speeds, loglog, dir / "scaling.svg", "Timescale separation");

    std::vector<PlotSeries> phase;
    for (std::size_t j = 0; j < result.ring_trajectories.size(); ++j) {
        PlotSeries s;
        s.label = "start " + std::to_string(j);
        for (const auto& state : result.ring_trajectories[j].states) {
            s.xs.push_back(state[1]);
            s.ys.push_back(state[0]);
        }
        phase.push_back(std::move(s));
    }
    PlotAxes linear;
    linear.x_label = "c";
    linear.y_label = "h";
    emit_svg_lineplot(phase, linear, dir / "scaling_phase.svg",
                      "Flow at epsilon = " + format_axis_value(result.ring_epsilon));
}

inline void write_recovery(const RunConfig& c, const std::filesystem::path& dir,
                           bool& all_pass) {
    RecoveryParams params;
    params.epsilon = c.epsilon.value_or(0.2);
    params.eta0 = c.initial_state;
    params.t_kick = c.t_kick;
    params.delta = c.kick_delta;
    params.target = parse_kick_target(c.kick_target);
    params.t_end = c.t_end.value_or(25.0);
    params.dt = c.dt;
    const RecoveryResult result = run_perturbation_recovery(params);
    const Verdict verdict = recovery_verdict(result);
    all_pass = all_pass && verdict.pass();

    CsvBuilder data({"t", "D"});
    for (const auto& [t, d] : result.distance_series)
        data.row({format_double(t), format_double(d)});
    write_text_file(dir / "recovery_data.csv", data.text());
    write_text_file(dir / "recovery_trajectory.csv", trajectory_csv_text(result.trajectory));
    write_verdict_csv(dir / "recovery_verdict.csv", verdict);

    PlotSeries dist;
    dist.label = "distance to manifold";
    for (const auto& [t, d] : result.distance_series) {
        dist.xs.push_back(t);
        dist.ys.push_back(d);
    }
    PlotAxes axes;
    axes.y_log = true;
    axes.x_label = "t";
    axes.y_label = "D(t)";
    emit_svg_lineplot({dist}, axes, dir / "recovery.svg", "Perturbation recovery");
}

inline void write_reduction(const RunConfig& c, const std::filesystem::path& dir,
                            unsigned threads, bool& all_pass) {
    ReductionParams params;
    params.epsilons = c.reduction_epsilons;
    params.c0 = (Eigen::VectorXd(1) << c.reduction_c0).finished();
    params.t_end_scaled = c.t_end_scaled;
    params.t_end_fixed = c.t_end.value_or(50.0);
    params.transient_cutoff = c.reduction_cutoff;
    params.dt = c.dt;
    params.threads = threads;
    const ReductionOutcome outcome = run_reduction_validation(params);
    const Verdict verdict =
        reduction_verdict(outcome, c.slope_bounds.value_or(SlopeBounds{1.7, 2.3}));
    all_pass = all_pass && verdict.pass();

    CsvBuilder data({"epsilon", "max_error"});
    for (const auto& r : outcome.reports)
        data.row({format_double(r.epsilon), format_double(r.max_error)});
    write_text_file(dir / "reduction_data.csv", data.text());
    write_verdict_csv(dir / "reduction_verdict.csv", verdict);

    // Fast-equilibrium branch sampled over the slow grid, with margins.
    const Potential potential = cubic_benchmark();
    std::vector<Eigen::VectorXd> grid;
    for (int i = 0; i <= 40; ++i)
        grid.push_back((Eigen::VectorXd(1) << -2.0 + 0.1 * i).finished());
    const CriticalManifoldSample sample = stability_margin_over_grid(
        potential, grid, (Eigen::VectorXd(1) << -8.0).finished());
    CsvBuilder manifold({"c_1", "h_1", "margin", "residual"});
    for (const auto& eq : sample.points)
        manifold.row({format_double(eq.slow[0]), format_double(eq.h_star[0]),
                      format_double(eq.stability_margin), format_double(eq.residual)});
    write_text_file(dir / "reduction_manifold.csv", manifold.text());

    PlotSeries err;
    err.label = "max slow-coordinate error";
    for (const auto& r : outcome.reports) {
        err.xs.push_back(r.epsilon);
        err.ys.push_back(r.max_error);
    }
    PlotAxes axes;
    axes.x_log = true;
    axes.y_log = true;
    axes.x_label = "epsilon";
    axes.y_label = "max error";
    emit_svg_lineplot({err}, axes, dir / "reduction.svg", "Reduction accuracy");
}

inline void write_decision_csv(const std::filesystem::path& path, const DecisionResult& result) {
    CsvBuilder data({"t", "h", "c", "bias", "tracking_error"});
    for (std::size_t i = 0; i < result.trajectory.size(); ++i)
        data.row({format_double(result.trajectory.times[i]),
                  format_double(result.trajectory.states[i][0]),
                  format_double(result.trajectory.states[i][1]),
                  format_double(result.params.model.bias(result.trajectory.times[i])),
                  format_double(result.tracking_series[i].second)});
    write_text_file(path, data.text());
}

inline void write_decision(const RunConfig& c, const std::filesystem::path& dir,
                           bool& all_pass) {
    DecisionRunParams params;
    params.model = decision_model(c);
    params.epsilon = c.epsilon.value_or(0.3);
    params.c0 = c.decision_c0;
    params.t_end = c.t_end.value_or(60.0);
    params.dt = c.dt;
    const DecisionExperiment exp = run_decision_experiment(params);
    const Verdict verdict = decision_verdict(exp);
    all_pass = all_pass && verdict.pass();

    write_decision_csv(dir / "decision_data.csv", exp.main);
    write_decision_csv(dir / "decision_control_data.csv", exp.control);
    write_verdict_csv(dir / "decision_verdict.csv", verdict);

    PlotSeries ch, cc, cb;
    ch.label = "h";
    cc.label = "c";
    cb.label = "bias";
    for (std::size_t i = 0; i < exp.main.trajectory.size(); ++i) {
        const double t = exp.main.trajectory.times[i];
        ch.xs.push_back(t);
        ch.ys.push_back(exp.main.trajectory.states[i][0]);
        cc.xs.push_back(t);
        cc.ys.push_back(exp.main.trajectory.states[i][1]);
        cb.xs.push_back(t);
        cb.ys.push_back(exp.main.params.model.bias(t));
    }
    PlotAxes axes;
    axes.x_label = "t";
    axes.y_label = "value";
    emit_svg_lineplot({ch, cc, cb}, axes, dir / "decision.svg", "Decision dynamics");
}

inline void write_gradcheck(const RunConfig& c, const std::filesystem::path& dir,
                            bool& all_pass) {
    std::vector<std::pair<std::string, Potential>> potentials;
    if (c.potential == "cubic-benchmark" || c.potential == "all")
        potentials.emplace_back("cubic-benchmark", cubic_benchmark());
    if (c.potential == "decision" || c.potential == "all")
        potentials.emplace_back("decision", decision_potential(decision_model(c)));
    if (c.potential == "composite" || c.potential == "all")
        potentials.emplace_back(
            "composite",
            composite({{"cubic-benchmark", c.composite_weight_cubic, cubic_benchmark()},
                       {"decision", c.composite_weight_decision,
                        decision_potential(decision_model(c))}}));

    GradcheckParams params;
    params.seed = c.seed;
    Verdict verdict;
    CsvBuilder data({"potential", "states", "max_gradient_error", "max_hessian_error"});
    for (const auto& [name, potential] : potentials) {
        const GradcheckResult result = run_gradient_check(potential, params);
        data.row({name, std::to_string(result.states_checked),
                  format_double(result.max_gradient_error),
                  format_double(result.max_hessian_error)});
        verdict.rows.push_back({name + "_gradient_error", result.max_gradient_error, "<=1e-06",
                                result.max_gradient_error <= 1e-6});
        verdict.rows.push_back({name + "_hessian_error", result.max_hessian_error, "<=1e-06",
                                result.max_hessian_error <= 1e-6});
    }
    all_pass = all_pass && verdict.pass();
    write_text_file(dir / "gradcheck_data.csv", data.text());
    write_verdict_csv(dir / "gradcheck_verdict.csv", verdict);
}

}  // namespace detail

// Returns the process exit code. Throws ConfigError only while the output
// directory is still unusable; afterwards all failures are encoded in the
// code plus a FAILED marker.
inline int run_experiments(const RunConfig& config, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        throw ConfigError("cannot create output directory '" + out_dir.string() +
                          "': " + ec.message());
    write_text_file(out_dir / "effective_config", effective_config_text(config));
    std::filesystem::remove(out_dir / "FAILED", ec);  // stale marker from a prior run

    int code = 0;
    std::string reason;
    try {
        const unsigned threads = resolve_thread_cap();
        detail::validate_for_dispatch(config);
        bool all_pass = true;
        if (detail::dispatches(config, "scaling"))
            detail::write_scaling(config, out_dir, threads, all_pass);
        if (detail::dispatches(config, "recovery"))
            detail::write_recovery(config, out_dir, all_pass);
        if (detail::dispatches(config, "reduction"))
            detail::write_reduction(config, out_dir, threads, all_pass);
        if (detail::dispatches(config, "decision"))
            detail::write_decision(config, out_dir, all_pass);
        if (detail::dispatches(config, "gradcheck"))
            detail::write_gradcheck(config, out_dir, all_pass);
        if (!all_pass) {
            code = 1;
            reason = "one or more verdict rows failed";
        }
    } catch (const ConfigError& e) {
        code = 2;
        reason = e.what();
    } catch (const std::exception& e) {
        code = 3;
        reason = e.what();
    }

    if (code != 0) {
        try {
            write_text_file(out_dir / "FAILED",
                            "exit=" + std::to_string(code) + "\nreason=" + reason + "\n");
        } catch (const std::exception&) {
            // the marker is best effort; the exit code already carries the state
        }
    }
    return code;
}

}  // namespace cogflow
