#pragma once

#include "dualdo/ambient.hpp"
#include "dualdo/types.hpp"

namespace dualdo {

/// Default orthonormality tolerance for the stochastic basis.
inline constexpr double kTauOrth = 1e-8;
/// Default relative floor for the smallest Gram eigenvalue: a state counts
/// as rank-deficient when sigma_min <= kSigmaFloorRel * trace(Z)/S.
inline constexpr double kSigmaFloorRel = 1e-10;

/// Problem data: grid, sample space, diffusion coefficient, nonlinearity,
/// initial condition, requested rank and horizon.
struct ProblemSpec {
    SpatialGrid grid;
    SampleSpace samples;
    double nu = 0.1;
    NonlinearitySpec nonlinearity;
    Mat u0;            ///< Q x n initial field
    int rank = 1;      ///< requested rank S
    double t_end = 1.0;

    void validate() const;
};

/// The low-rank unknowns: U holds S deterministic basis fields as columns
/// (n x S), Y holds S stochastic basis variables as columns (Q x S).
/// Y is kept orthonormal in the weighted sample space; U is only required
/// to stay linearly independent.
struct LowRankState {
    Mat U;  ///< n x S
    Mat Y;  ///< Q x S
    double t = 0.0;

    int rank() const { return static_cast<int>(U.cols()); }
};

/// Gram matrix of the deterministic basis plus its spectral diagnostics,
/// the quantities the rank monitor watches.
struct GramDiagnostics {
    Mat z;             ///< S x S, z_jk = <U_j, U_k>_h
    double sigma_min;  ///< smallest eigenvalue, clamped at 0
    double inv_norm;   ///< ||Z^-1||_2 = 1/sigma_min (inf when singular)
    double cond;       ///< sigma_max / sigma_min
};

/// S x S Gram matrix z_jk = <U_j, U_k>_h of the basis columns.
Mat gram_matrix(const SpatialGrid& grid, const Mat& U);

/// Weighted stochastic Gram E[Y Y^T] (S x S).
Mat stochastic_gram(const SampleSpace& samples, const Mat& Y);

GramDiagnostics gram_u(const SpatialGrid& grid, const LowRankState& state);

/// ||E[Y Y^T] - I||_F, the orthonormality defect of the stochastic basis.
double orth_drift(const SampleSpace& samples, const Mat& Y);

/// Orthogonal projection of the columns of f onto span{Y} in the weighted
/// sample geometry. Exact (Gram-corrected), hence idempotent to roundoff.
/// f may be a Q x n field or a Q x S tuple of random variables.
/// Throws when Y is badly non-orthonormal (defect > 100 * tau_orth).
Mat project_y(const SampleSpace& samples, const Mat& f, const Mat& Y,
              double tau_orth = kTauOrth);

/// Orthogonal projection of the rows of f (a Q x n field) onto span{U} in H.
/// The basis is orthonormalised by modified Gram-Schmidt with one
/// reorthogonalisation pass. Throws RankLossError when the Gram matrix of U
/// is at or below the relative floor.
Mat project_u(const SpatialGrid& grid, const Mat& f, const Mat& U,
              double sigma_floor_rel = kSigmaFloorRel);

/// Tangent-space projection P_U + P_Y - P_U P_Y applied to the field f.
Mat tangent_project(const SpatialGrid& grid, const SampleSpace& samples,
                    const LowRankState& state, const Mat& f,
                    double sigma_floor_rel = kSigmaFloorRel);

/// Rank-S field Y U^T (Q x n).
Mat reconstruct(const LowRankState& state);

/// Nonlinear forcing of the deterministic basis: column j = E[F(u_S) Y_j].
Mat rhs_g1(const ProblemSpec& spec, const LowRankState& state);

/// Stochastic-basis velocity (I - P_Y)(<F(u_S), Z^-1 U>), column j per basis
/// member. P_Y here is the literal orthonormal-basis form sum_j E[. Y_j] Y_j,
/// so the gauge E[G2 Y^T] = 0 holds exactly for an orthonormal Y and degrades
/// linearly with its orthonormality defect (which the monitor watches).
/// Throws RankLossError when Z is at or below the relative floor.
Mat rhs_g2(const ProblemSpec& spec, const LowRankState& state,
           double sigma_floor_rel = kSigmaFloorRel);

/// Internal forms reusing an already evaluated F(u_S); used by the stepper.
Mat rhs_g1_from(const SpatialGrid& grid, const SampleSpace& samples,
                const Mat& f_field, const Mat& Y);
Mat rhs_g2_from(const SpatialGrid& grid, const SampleSpace& samples,
                const Mat& f_field, const LowRankState& state,
                double sigma_floor_rel = kSigmaFloorRel);

/// Apply Z^-1 through the symmetric eigendecomposition of the Gram matrix
/// (never an explicit inverse); throws RankLossError below the floor.
Mat apply_gram_inverse(const Mat& z, const Mat& rhs, double t, double sigma_floor_rel);

/// Residual of the projected evolution equation between two consecutive
/// snapshots: || (u(t1)-u(t0))/(t1-t0) - P(Lambda u + F(u))|_{t0} ||.
double dlr_residual(const ProblemSpec& spec, const LowRankState& s0,
                    const LowRankState& s1);

}  // namespace dualdo
