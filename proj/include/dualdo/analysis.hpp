#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dualdo/integrator.hpp"
#include "dualdo/state.hpp"

namespace dualdo {

/// One audited inequality instance: lhs <= rhs expected.
struct TrialRow {
    std::string check;
    std::uint64_t seed = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;  ///< rhs - lhs
    bool pass = false;
};

struct CheckReport {
    std::string name;
    std::vector<TrialRow> rows;
    bool precond_ok = true;
    std::string note;

    int violations() const;
    bool all_pass() const { return precond_ok && violations() == 0; }
};

/// "check,seed,lhs,rhs,margin,pass" rows, floats at 17 significant digits.
void write_reports_csv(std::ostream& os, std::span<const CheckReport> reports);

/// Operator norm of (I - P_{Wp}) P_W on the weighted sample space via power
/// iteration on the self-adjoint composition; the projections are exact
/// (Gram-corrected) span projections.
double projector_deficiency_norm(const SampleSpace& samples, const Mat& w, const Mat& wp,
                                 std::uint64_t seed = 7);

/// Operator norm of P_W - P_{Wp} (self-adjoint) via power iteration on its square.
double projector_diff_norm(const SampleSpace& samples, const Mat& w, const Mat& wp,
                           std::uint64_t seed = 7);

/// ||(I-P_{W'})P_W|| <= 2(kappa+beta)/sigma_yhat * ||W - W'|| < 1, valid for
/// perturbations within kappa < kappa_bar = (-beta + sqrt(beta^2+sigma))/2.
CheckReport check_wedin(const SampleSpace& samples, const Mat& y_hat, const Mat& w,
                        const Mat& wp, double beta, double kappa, std::uint64_t seed = 0);

/// Same bound for ||P_W - P_{W'}|| plus the norm equality
/// ||P_W - P_{W'}|| = ||(I-P_{W'})P_W|| within 1e-8.
CheckReport check_proj_lipschitz(const SampleSpace& samples, const Mat& y_hat, const Mat& w,
                                 const Mat& wp, double beta, double kappa,
                                 std::uint64_t seed = 0);

/// ||Z_U^-1 - Z_U'^-1||_2 <= 4 sqrt(S) alpha (||Z_U^-1||^2 + ||Z_U'^-1||^2) ||U - U'||.
/// The constant comes from the entrywise perturbation bound
/// |<U_j,U_k> - <U'_j,U'_k>| <= alpha (||dU_j|| + ||dU_k||) aggregated in
/// Frobenius norm over the S^2 entries (factor 2 sqrt(S)), doubled by the
/// convexity bound on the inverse along the segment.
CheckReport check_gram_inv_lipschitz(const SpatialGrid& grid, const Mat& u, const Mat& up,
                                     double alpha_tilde, std::uint64_t seed = 0);

/// Linear-growth constants of the configured nonlinearity, derived (never
/// fitted):
///   ||F(v)|| <= c_prime_f (1 + ||v||)  with
///     c_prime_f = max(|| |a| f(0) + |c| ||, sup|a| sup|b| sup|f'|),
///   E[<Lambda v + F(v), v>] <= c_lambda_f (1 + ||v||^2)  with
///     c_lambda_f = 1.5 c_prime_f
///   (Cauchy-Schwarz, <Lambda v,v> <= 0, and ||v|| <= (1+||v||^2)/2),
///   ||Lambda F(v)|| <= c_f (1 + ||Lambda v||)  with
///     c_f = max(sup|a| |b0|, ||Lambda c||),
/// the last only when f = identity, b is constant and a is spatially
/// constant per sample, so that Lambda commutes with the multiplication.
struct GrowthConstants {
    double c_prime_f = 0.0;
    double c_lambda_f = 0.0;
    double c_f = 0.0;
    bool classical_available = false;
    double k_lambda = 1.0;
};

GrowthConstants derive_growth_constants(const ProblemSpec& spec);

/// E[<Lambda v + F(v), v>] <= c_lambda_f (1 + ||v||^2) on randomized fields,
/// including Lambda-rough ones, plus a directed sweep along the additive
/// noise direction (smallest margins).
CheckReport check_stability(const ProblemSpec& spec, int trials, std::uint64_t seed);

/// Per-snapshot envelopes along a trajectory:
///   ||U(t)|| <= sqrt(2 c_lambda_f) t^{1/2} + ||U0|| exp(c_lambda_f t)
///   ||Lambda U(t)|| <= k (||Lambda U0|| + t c_f sqrt(S)) exp(k c_f t)
/// (the second only when the classical constants are available).
CheckReport check_growth_bounds(const ProblemSpec& spec, const Trajectory& traj,
                                const GrowthConstants& constants);

/// Seeded randomized campaigns (one row per trial, reproducible).
CheckReport run_wedin_campaign(int q, int s, int trials, std::uint64_t seed);
CheckReport run_proj_lipschitz_campaign(int q, int s, int trials, std::uint64_t seed);
CheckReport run_gram_lipschitz_campaign(const SpatialGrid& grid, int s, int trials,
                                        std::uint64_t seed);
CheckReport run_stability_campaign(const ProblemSpec& spec, int trials, std::uint64_t seed);

/// sqrt(h)-weighted Frobenius norm of an n x S basis, i.e. its [H]^S norm.
double basis_norm_h(const SpatialGrid& grid, const Mat& u);

/// [L2(Omega)]^S norm of a Q x S tuple.
double tuple_norm_w(const SampleSpace& samples, const Mat& y);

}  // namespace dualdo
