// Error hierarchy for the flow library. Every failure mode the contracts name
// gets its own type so callers (and the CLI exit-code mapping) can dispatch on
// the class rather than parse messages.
#pragma once

#include <Eigen/Core>
#include <sstream>
#include <stdexcept>
#include <string>

namespace cogflow {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad user-facing parameters: dimensions, ranges, malformed config.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A contract between modules was violated (caller bug, not user input).
class ContractError : public Error {
public:
    using Error::Error;
};

// An Explicit metric returned a non-symmetric or non-SPD matrix.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Explicit metric too ill-conditioned to solve against.
class SingularMetricError : public Error {
public:
    using Error::Error;
};

// A potential produced a non-finite value/gradient; carries the state.
class EvaluationError : public Error {
public:
    EvaluationError(const std::string& msg, Eigen::VectorXd state_at_failure)
        : Error(msg), state(std::move(state_at_failure)) {}
    Eigen::VectorXd state;
};

// An integrator stage went non-finite; carries time and last finite state.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& msg, double time, Eigen::VectorXd last_state)
        : Error(msg), t(time), state(std::move(last_state)) {}
    double t;
    Eigen::VectorXd state;
};

// Equilibrium solver ran out of iterations; carries the best iterate found.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& msg, Eigen::VectorXd best, double res)
        : Error(msg), best_iterate(std::move(best)), residual(res) {}
    Eigen::VectorXd best_iterate;
    double residual;
};

// Nonpositive data fed to a log-scale fit or plot.
class DomainError : public Error {
public:
    using Error::Error;
};

// Regression abscissae carry no information (all equal, or too few).
class DegenerateFitError : public Error {
public:
    using Error::Error;
};

namespace detail {
inline std::string describe_vector(const Eigen::VectorXd& v) {
    std::ostringstream os;
    os << "(";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) os << ", ";
        os << v[i];
    }
    os << ")";
    return os.str();
}
}  // namespace detail

}  // namespace cogflow
