#pragma once

#include <vector>

#include "dualdo/state.hpp"

namespace dualdo {

/// Canonical rank-S factors of a random field: H-orthonormal spatial modes,
/// positive non-increasing singular values, L2-orthonormal stochastic modes.
struct SvdFactors {
    Mat V;      ///< n x S, columns H-orthonormal
    Vec sigma;  ///< S, positive, non-increasing
    Mat W;      ///< Q x S, columns orthonormal under the sample weights

    int rank() const { return static_cast<int>(sigma.size()); }
    /// W diag(sigma) V^T as a Q x n field.
    Mat reconstruct() const { return W * sigma.asDiagonal() * V.transpose(); }
};

/// Orthogonal-matrix path Theta(t_k), Theta^T Theta = I at every node.
struct OrthogonalPath {
    Vec times;
    std::vector<Mat> theta;
};

/// Time series of an orthonormal stochastic basis; derivatives optional
/// (central differences are used when absent).
struct WPath {
    Vec times;
    std::vector<Mat> w;     ///< Q x S per node
    std::vector<Mat> wdot;  ///< optional, same shapes
};

/// All singular values of the field's correlation operator, descending,
/// clamped at zero (length min(Q, n)).
Vec correlation_sigmas(const SpatialGrid& grid, const SampleSpace& samples, const Mat& u);

/// Top-S canonical factors of a general field via the correlation
/// eigenproblem on the smaller of the two sides (never a dense Q x n SVD).
/// Throws RankDeficientError when the numerical rank is below S.
SvdFactors svd_low_rank(const SpatialGrid& grid, const SampleSpace& samples,
                        const Mat& u, int S);

/// Canonical factors of a low-rank state through the S x S core problem
/// T = M^{1/2} Z^{1/2} at O(S^2 (n+Q)) cost; exact for healthy states.
SvdFactors svd_low_rank(const SpatialGrid& grid, const SampleSpace& samples,
                        const LowRankState& state);

/// Top-S truncation of a state's canonical factors (S <= state rank).
SvdFactors svd_low_rank(const SpatialGrid& grid, const SampleSpace& samples,
                        const LowRankState& state, int S);

/// Best rank-S factorization of u0 as a LowRankState: U_j = sigma_j V_j,
/// Y_j = W_j, t = 0. Reconstruction error equals the singular-value tail.
LowRankState initial_factorize(const SpatialGrid& grid, const SampleSpace& samples,
                               const Mat& u0, int S);

/// Integrate Theta' = -E[W W'^T] Theta, Theta(0) = I along the path with the
/// orthogonality-preserving Cayley/midpoint update. The averaged coefficient
/// is skew-symmetrised, so Theta^T Theta = I holds to roundoff.
/// Throws DomainError when a node fails the orthonormality check.
OrthogonalPath theta_ode_solve(const SampleSpace& samples, const WPath& path,
                               double orth_tol = 1e-6);

/// One explicit step of the factor-tracking system
///   Sigma' = E[<V, udot W^T>],  V' Sigma = (I-P_V) E[udot W^T],
///   Sigma W' = (I-P_W) <V, udot>,
/// followed by symmetric re-orthonormalisation of V, W (with the compensating
/// factors absorbed into Sigma) and re-canonicalisation to diagonal Sigma.
/// Throws RankDeficientError when Sigma is near-singular.
SvdFactors smooth_svd_step(const SpatialGrid& grid, const SampleSpace& samples,
                           const SvdFactors& factors, const Mat& udot, double dt);

/// Symmetric square root / inverse square root of an SPD matrix.
Mat spd_sqrt(const Mat& m);
Mat spd_inv_sqrt(const Mat& m);

}  // namespace dualdo
