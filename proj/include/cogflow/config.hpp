// Flat key = value run configuration: strict schema, duplicate and
// unknown-key rejection, and a canonical echo that parses back to the same
// config byte for byte.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cogflow/csv.hpp"
#include "cogflow/errors.hpp"
#include "cogflow/experiments.hpp"

namespace cogflow {

struct RunConfig {
    std::string experiment = "all";
    // Gradcheck scope: cubic-benchmark | decision | composite | all.
    std::string potential = "all";
    double composite_weight_cubic = 1.0;
    double composite_weight_decision = 1.0;
    std::vector<double> epsilons{0.4, 0.2, 0.1, 0.05};
    std::vector<double> reduction_epsilons{0.4, 0.3, 0.2, 0.15, 0.1};
    double dt = 0.01;
    int record_stride = 1;
    bool t_end_scaled = true;
    Eigen::VectorXd initial_state = (Eigen::VectorXd(2) << 1.5, -1.0).finished();
    double reduction_c0 = 1.0;
    double decision_c0 = 1.0;
    std::uint64_t seed = 67890;
    double beta = 2.0;
    double ramp_start = 0.0;
    double ramp_end = 40.0;
    double ramp_level = 0.5;
    double t_kick = 8.0;
    Eigen::VectorXd kick_delta = (Eigen::VectorXd(1) << 1.0).finished();
    std::string kick_target = "fast";
    double reduction_cutoff = 5.0;
    // These have no single cross-experiment default, so they stay unset
    // unless given: epsilon (recovery 0.2, decision 0.3), t_end (scaling 20,
    // recovery 25, decision 60, reduction per t_end_scaled), slope_bounds
    // (scaling 1.8..2.2, reduction 1.7..2.3).
    std::optional<double> epsilon;
    std::optional<double> t_end;
    std::optional<SlopeBounds> slope_bounds;
};

namespace detail {

struct ConfigEntry {
    std::string key;
    std::string value;
    int line = 0;        // 1-based file line; 0 for --set overrides
    int set_index = 0;   // 1-based --set position when line == 0
};

inline std::string entry_source(const ConfigEntry& e) {
    return e.line > 0 ? "line " + std::to_string(e.line)
                      : "--set " + std::to_string(e.set_index);
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double parse_double_value(const ConfigEntry& e, const std::string& text) {
    const std::string t = trim(text);
    if (t.empty())
        throw ConfigError(entry_source(e) + ": empty number for key '" + e.key + "'");
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || !std::isfinite(v))
        throw ConfigError(entry_source(e) + ": invalid number '" + t + "' for key '" + e.key +
                          "'");
    return v;
}

inline std::vector<double> parse_list_value(const ConfigEntry& e) {
    std::vector<double> values;
    std::size_t start = 0;
    const std::string& v = e.value;
    while (start <= v.size()) {
        const std::size_t comma = v.find(',', start);
        const std::string piece =
            comma == std::string::npos ? v.substr(start) : v.substr(start, comma - start);
        values.push_back(parse_double_value(e, piece));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (values.empty())
        throw ConfigError(entry_source(e) + ": key '" + e.key + "' needs at least one value");
    return values;
}

inline long parse_int_value(const ConfigEntry& e) {
    const double v = parse_double_value(e, e.value);
    const long i = static_cast<long>(v);
    if (static_cast<double>(i) != v)
        throw ConfigError(entry_source(e) + ": key '" + e.key + "' must be an integer");
    return i;
}

inline bool parse_bool_value(const ConfigEntry& e) {
    const std::string t = trim(e.value);
    if (t == "true") return true;
    if (t == "false") return false;
    throw ConfigError(entry_source(e) + ": key '" + e.key + "' must be true or false");
}

inline void check_epsilon_open_unit(const ConfigEntry& e, double v) {
    if (!(v > 0.0 && v < 1.0))
        throw ConfigError(entry_source(e) + ": epsilon must lie in (0,1)");
}

inline void apply_entry(RunConfig& config, const ConfigEntry& e) {
    const std::string& k = e.key;
    if (k == "experiment") {
        static const char* kNames[] = {"scaling", "recovery",  "reduction",
                                       "decision", "gradcheck", "all"};
        for (const char* n : kNames) {
            if (e.value == n) {
                config.experiment = e.value;
                return;
            }
        }
        throw ConfigError(entry_source(e) + ": unknown experiment '" + e.value + "'");
    }
    if (k == "potential") {
        if (e.value != "cubic-benchmark" && e.value != "decision" && e.value != "composite" &&
            e.value != "all")
            throw ConfigError(entry_source(e) + ": unknown potential '" + e.value + "'");
        config.potential = e.value;
        return;
    }
    if (k == "composite_weight_cubic" || k == "composite_weight_decision") {
        const double v = parse_double_value(e, e.value);
        if (v < 0.0) throw ConfigError(entry_source(e) + ": composite weight must be nonnegative");
        (k == "composite_weight_cubic" ? config.composite_weight_cubic
                                       : config.composite_weight_decision) = v;
        return;
    }
    if (k == "epsilon") {
        const double v = parse_double_value(e, e.value);
        check_epsilon_open_unit(e, v);
        config.epsilon = v;
        return;
    }
    if (k == "epsilons" || k == "reduction_epsilons") {
        std::vector<double> v = parse_list_value(e);
        for (double x : v) check_epsilon_open_unit(e, x);
        (k == "epsilons" ? config.epsilons : config.reduction_epsilons) = std::move(v);
        return;
    }
    if (k == "dt") {
        const double v = parse_double_value(e, e.value);
        if (!(v > 0.0)) throw ConfigError(entry_source(e) + ": dt must be > 0");
        config.dt = v;
        return;
    }
    if (k == "t_end") {
        const double v = parse_double_value(e, e.value);
        if (!(v > 0.0)) throw ConfigError(entry_source(e) + ": t_end must be > 0");
        config.t_end = v;
        return;
    }
    if (k == "t_end_scaled") {
        config.t_end_scaled = parse_bool_value(e);
        return;
    }
    if (k == "record_stride") {
        const long v = parse_int_value(e);
        if (v < 1) throw ConfigError(entry_source(e) + ": record_stride must be >= 1");
        config.record_stride = static_cast<int>(v);
        return;
    }
    if (k == "initial_state") {
        std::vector<double> v = parse_list_value(e);
        if (v.size() != 2)
            throw ConfigError(entry_source(e) + ": initial_state needs exactly 2 components");
        config.initial_state =
            Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
        return;
    }
    if (k == "reduction_c0" || k == "decision_c0") {
        const double v = parse_double_value(e, e.value);
        (k == "reduction_c0" ? config.reduction_c0 : config.decision_c0) = v;
        return;
    }
    if (k == "seed") {
        const long v = parse_int_value(e);
        if (v < 0) throw ConfigError(entry_source(e) + ": seed must be >= 0");
        config.seed = static_cast<std::uint64_t>(v);
        return;
    }
    if (k == "beta") {
        const double v = parse_double_value(e, e.value);
        if (!(v > 0.0)) throw ConfigError(entry_source(e) + ": beta must be > 0");
        config.beta = v;
        return;
    }
    if (k == "ramp_start" || k == "ramp_end" || k == "ramp_level") {
        const double v = parse_double_value(e, e.value);
        (k == "ramp_start"  ? config.ramp_start
         : k == "ramp_end" ? config.ramp_end
                           : config.ramp_level) = v;
        return;
    }
    if (k == "t_kick") {
        const double v = parse_double_value(e, e.value);
        if (v < 0.0) throw ConfigError(entry_source(e) + ": t_kick must be >= 0");
        config.t_kick = v;
        return;
    }
    if (k == "kick_delta") {
        std::vector<double> v = parse_list_value(e);
        config.kick_delta =
            Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
        return;
    }
    if (k == "kick_target") {
        if (e.value != "fast" && e.value != "slow" && e.value != "full")
            throw ConfigError(entry_source(e) + ": kick_target must be fast, slow, or full");
        config.kick_target = e.value;
        return;
    }
    if (k == "reduction_cutoff") {
        const double v = parse_double_value(e, e.value);
        if (v < 0.0) throw ConfigError(entry_source(e) + ": reduction_cutoff must be >= 0");
        config.reduction_cutoff = v;
        return;
    }
    if (k == "slope_bounds") {
        std::vector<double> v = parse_list_value(e);
        if (v.size() != 2 || !(v[0] < v[1]))
            throw ConfigError(entry_source(e) +
                              ": slope_bounds needs two values with lo < hi");
        config.slope_bounds = SlopeBounds{v[0], v[1]};
        return;
    }
    throw ConfigError(entry_source(e) + ": unknown key '" + k + "'");
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
    RunConfig config;
    std::map<std::string, int> seen;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::string raw =
            nl == std::string::npos ? text.substr(pos) : text.substr(pos, nl - pos);
        ++line_no;
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;

        const std::string stripped = detail::trim(raw);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");

        detail::ConfigEntry entry;
        entry.key = detail::trim(stripped.substr(0, eq));
        entry.value = detail::trim(stripped.substr(eq + 1));
        entry.line = line_no;
        if (entry.key.empty())
            throw ConfigError("line " + std::to_string(line_no) + ": empty key");

        const auto [it, inserted] = seen.emplace(entry.key, line_no);
        if (!inserted)
            throw ConfigError("duplicate key '" + entry.key + "' (lines " +
                              std::to_string(it->second) + " and " + std::to_string(line_no) +
                              ")");
        detail::apply_entry(config, entry);
    }
    return config;
}

// --set key=value from the command line; later overrides win.
inline void apply_override(RunConfig& config, const std::string& assignment, int index) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("--set " + std::to_string(index) + ": expected key=value");
    detail::ConfigEntry entry;
    entry.key = detail::trim(assignment.substr(0, eq));
    entry.value = detail::trim(assignment.substr(eq + 1));
    entry.set_index = index;
    if (entry.key.empty())
        throw ConfigError("--set " + std::to_string(index) + ": empty key");
    detail::apply_entry(config, entry);
}

namespace detail {

inline std::string join_list(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ", ";
        out += format_double(values[i]);
    }
    return out;
}

inline std::string join_vector(const Eigen::VectorXd& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i > 0) out += ", ";
        out += format_double(v[i]);
    }
    return out;
}

}  // namespace detail

// Canonical echo: fixed key order, round-trip-exact numbers. Keys without
// a cross-experiment default appear only when set, so the echo always parses
// back to an identical config.
inline std::string effective_config_text(const RunConfig& c) {
    std::string out;
    auto kv = [&out](const std::string& k, const std::string& v) {
        out += k + " = " + v + "\n";
    };
    kv("experiment", c.experiment);
    kv("potential", c.potential);
    kv("composite_weight_cubic", format_double(c.composite_weight_cubic));
    kv("composite_weight_decision", format_double(c.composite_weight_decision));
    kv("epsilons", detail::join_list(c.epsilons));
    kv("reduction_epsilons", detail::join_list(c.reduction_epsilons));
    kv("dt", format_double(c.dt));
    kv("record_stride", std::to_string(c.record_stride));
    kv("t_end_scaled", c.t_end_scaled ? "true" : "false");
    kv("initial_state", detail::join_vector(c.initial_state));
    kv("reduction_c0", format_double(c.reduction_c0));
    kv("decision_c0", format_double(c.decision_c0));
    kv("seed", std::to_string(c.seed));
    kv("beta", format_double(c.beta));
    kv("ramp_start", format_double(c.ramp_start));
    kv("ramp_end", format_double(c.ramp_end));
    kv("ramp_level", format_double(c.ramp_level));
    kv("t_kick", format_double(c.t_kick));
    kv("kick_delta", detail::join_vector(c.kick_delta));
    kv("kick_target", c.kick_target);
    kv("reduction_cutoff", format_double(c.reduction_cutoff));
    if (c.epsilon) kv("epsilon", format_double(*c.epsilon));
    if (c.t_end) kv("t_end", format_double(*c.t_end));
    if (c.slope_bounds)
        kv("slope_bounds",
           format_double(c.slope_bounds->lo) + ", " + format_double(c.slope_bounds->hi));
    return out;
}

}  // namespace cogflow
