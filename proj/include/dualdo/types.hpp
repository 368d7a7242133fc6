#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace dualdo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Shape/length mismatch between operands.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A value constraint was violated (bad tolerance, alpha <= 0, ...).
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// The deterministic basis lost linear independence: the Gram matrix
/// dropped below the configured floor. Carries the discrete failure time.
struct RankLossError : std::runtime_error {
    double t;
    double sigma_min;
    RankLossError(double t_, double sigma_min_)
        : std::runtime_error("rank loss at t=" + std::to_string(t_) +
                             " (sigma_min=" + std::to_string(sigma_min_) + ")"),
          t(t_), sigma_min(sigma_min_) {}
};

/// Numerical rank of a field is below the requested rank.
struct RankDeficientError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Overflow / NaN encountered while stepping.
struct NonFiniteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline bool all_finite(const Mat& m) { return m.allFinite(); }
inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace dualdo
