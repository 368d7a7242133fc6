#pragma once

#include <vector>

#include "dualdo/state.hpp"

namespace dualdo {

enum class Scheme { ImexEuler, LieSplitting, StrangSplitting };
enum class ReorthPolicy { Never, EveryStep, OnDrift };

struct StepConfig {
    double dt = 1e-3;
    Scheme scheme = Scheme::ImexEuler;
    ReorthPolicy reorth = ReorthPolicy::EveryStep;
    double drift_tol = 1e-8;
    double sigma_floor_rel = kSigmaFloorRel;
    int threads = 1;

    void validate() const {
        if (!(dt > 0.0)) throw DomainError("StepConfig: dt > 0 required");
        if (!(drift_tol > 0.0)) throw DomainError("StepConfig: drift_tol > 0 required");
        if (!(sigma_floor_rel > 0.0)) throw DomainError("StepConfig: sigma_floor_rel > 0 required");
    }
};

struct StepDiagnostics {
    double t = 0.0;
    double sigma_min = 0.0;
    double inv_norm = 0.0;
    double orth_drift = 0.0;      ///< defect of the recorded (post-repair) Y
    double gauge_residual = 0.0;  ///< ||E[G2 Y^T]||_F at the recorded state
    double energy = 0.0;          ///< ||u_S|| in L2(Omega;H)
};

enum class RunStatus { Completed, RankLoss, NonFinite };

struct Trajectory {
    std::vector<LowRankState> snapshots;
    std::vector<StepDiagnostics> diagnostics;
    RunStatus status = RunStatus::Completed;
    double t_stop = 0.0;  ///< horizon reached, or the discrete failure time
};

/// One time step of the coupled system. IMEX Euler treats the stiff linear
/// part implicitly and the nonlinear couplings explicitly:
///   (I - dt Lambda) U+ = U + dt G1(state),   Y+ = Y + dt G2(state),
/// then the stochastic basis is repaired per policy by symmetric (polar)
/// orthonormalisation with the inverse factor absorbed into U, which leaves
/// the reconstruction unchanged to roundoff.
/// Throws RankLossError (Gram floor) and NonFiniteError.
LowRankState step(const ProblemSpec& spec, const LowRankState& state, const StepConfig& cfg);

/// Per-snapshot diagnostics of a state.
StepDiagnostics diagnose(const ProblemSpec& spec, const LowRankState& state);

/// Run from the best rank-S factorization of spec.u0 until t_end or failure.
/// Every snapshot and its diagnostics are recorded; on rank loss the partial
/// trajectory is returned with status RankLoss and t_stop = discrete t_max.
Trajectory integrate(const ProblemSpec& spec, int rank, double t_end, const StepConfig& cfg);

/// ||E[G2 Y^T]||_F: how far the stochastic velocity is from the gauge.
double gauge_residual(const ProblemSpec& spec, const LowRankState& state);

/// dlr_residual between consecutive trajectory snapshots; requires at least
/// two snapshots and step_index + 1 < snapshots.size().
double dlr_residual(const ProblemSpec& spec, const Trajectory& traj,
                    std::size_t step_index);

/// Symmetric (Loewdin) re-orthonormalisation of Y with the compensating
/// factor absorbed into U; exact on the reconstruction.
void reorthonormalize(const SampleSpace& samples, LowRankState& state);

}  // namespace dualdo
