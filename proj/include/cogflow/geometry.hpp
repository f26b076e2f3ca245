// State space, metric fields, and the preconditioned gradient direction.
// The dynamics only ever touch the metric through G(eta)^{-1} * grad J, so the
// interface is a matrix view plus an inverse-apply; diagonal kinds never build
// or factor a matrix.
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>
#include <variant>

#include "cogflow/errors.hpp"

namespace cogflow {

struct Partition {
    int fast_dim = 1;  // m: coordinates that relax quickly
    int slow_dim = 1;  // k: coordinates whose motion the metric penalizes

    int total() const { return fast_dim + slow_dim; }

    void validate(int n) const {
        if (fast_dim < 1 || slow_dim < 1)
            throw ConfigError("partition blocks must each have dimension >= 1");
        if (total() != n)
            throw ConfigError("partition (" + std::to_string(fast_dim) + "+" +
                              std::to_string(slow_dim) + ") does not match state dimension " +
                              std::to_string(n));
    }
};

struct State {
    Eigen::VectorXd coords;
    double time = 0.0;

    Eigen::VectorXd fast_block(const Partition& p) const {
        p.validate(static_cast<int>(coords.size()));
        return coords.head(p.fast_dim);
    }
    Eigen::VectorXd slow_block(const Partition& p) const {
        p.validate(static_cast<int>(coords.size()));
        return coords.tail(p.slow_dim);
    }
};

inline void require_finite(const Eigen::VectorXd& v, const char* what) {
    if (!v.allFinite())
        throw ConfigError(std::string(what) + " must be finite, got " + detail::describe_vector(v));
}

// (is_spd, smallest eigenvalue). Symmetry is judged against tol scaled by the
// matrix magnitude; definiteness against tol directly.
inline std::pair<bool, double> check_spd(const Eigen::MatrixXd& m, double tol) {
    if (m.rows() != m.cols()) throw ContractError("check_spd needs a square matrix");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()),
                                                      Eigen::EigenvaluesOnly);
    const double lambda_min = es.eigenvalues().minCoeff();
    const bool ok = asym <= tol * scale && lambda_min > tol;
    return {ok, lambda_min};
}

struct IdentityMetric {};

struct BlockAnisotropicMetric {
    double epsilon;
    Partition partition;

    BlockAnisotropicMetric(double eps, Partition p) : epsilon(eps), partition(p) {
        if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("epsilon must lie in (0,1)");
    }
};

// User-supplied matrix field; validated (symmetry, SPD, conditioning) at
// every evaluation since nothing constrains it structurally.
struct ExplicitMetric {
    std::function<Eigen::MatrixXd(const State&)> matrix;
};

using Metric = std::variant<IdentityMetric, BlockAnisotropicMetric, ExplicitMetric>;

namespace detail {

inline Eigen::MatrixXd validated_explicit_matrix(const ExplicitMetric& m, const State& s) {
    Eigen::MatrixXd g = m.matrix(s);
    if (g.rows() != g.cols() || g.rows() != s.coords.size())
        throw ConfigError("explicit metric returned a " + std::to_string(g.rows()) + "x" +
                          std::to_string(g.cols()) + " matrix for a state of dimension " +
                          std::to_string(s.coords.size()));
    const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
    const double asym = (g - g.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale)
        throw ValidationError("explicit metric is not symmetric (max asymmetry " +
                              std::to_string(asym) + ")");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    if (lo <= 0.0) {
        std::ostringstream os;
        os << "explicit metric is not positive definite: smallest eigenvalue " << lo;
        throw ValidationError(os.str());
    }
    const double hi = es.eigenvalues().maxCoeff();
    if (hi / lo > 1e12)
        throw SingularMetricError("explicit metric condition estimate exceeds 1e12");
    return g;
}

}  // namespace detail

inline Eigen::MatrixXd metric_matrix(const Metric& metric, const State& state) {
    const auto n = state.coords.size();
    if (std::holds_alternative<IdentityMetric>(metric))
        return Eigen::MatrixXd::Identity(n, n);
    if (const auto* block = std::get_if<BlockAnisotropicMetric>(&metric)) {
        block->partition.validate(static_cast<int>(n));
        Eigen::MatrixXd g = Eigen::MatrixXd::Identity(n, n);
        const double inv_eps2 = 1.0 / (block->epsilon * block->epsilon);
        for (int i = block->partition.fast_dim; i < n; ++i) g(i, i) = inv_eps2;
        return g;
    }
    return detail::validated_explicit_matrix(std::get<ExplicitMetric>(metric), state);
}

// Solves G(eta) w = v. Diagonal kinds are componentwise (the identity path
// returns v untouched, so "identity equals plain gradient" holds bitwise).
inline Eigen::VectorXd metric_inverse_apply(const Metric& metric, const State& state,
                                            const Eigen::VectorXd& v) {
    if (v.size() != state.coords.size())
        throw ConfigError("vector of length " + std::to_string(v.size()) +
                          " does not match state dimension " + std::to_string(state.coords.size()));
    if (std::holds_alternative<IdentityMetric>(metric)) return v;
    if (const auto* block = std::get_if<BlockAnisotropicMetric>(&metric)) {
        block->partition.validate(static_cast<int>(v.size()));
        Eigen::VectorXd w = v;
        w.tail(block->partition.slow_dim) *= block->epsilon * block->epsilon;
        return w;
    }
    Eigen::MatrixXd g =
        detail::validated_explicit_matrix(std::get<ExplicitMetric>(metric), state);
    return g.llt().solve(v);
}

// G^{-1} grad J: the steepest-descent direction in the metric's inner product.
// The flow field is the negative of this.
template <class PotentialLike>
Eigen::VectorXd riemannian_gradient(const PotentialLike& potential, const Metric& metric,
                                    const State& state) {
    return metric_inverse_apply(metric, state, potential.gradient(state));
}

}  // namespace cogflow
