#include "dualdo/integrator.hpp"

#include <cmath>
#include <limits>

#include "dualdo/reparam.hpp"

namespace dualdo {

namespace {

struct NonlinearRhs {
    Mat g1;  // n x S
    Mat g2;  // Q x S
};

NonlinearRhs eval_rhs(const ProblemSpec& spec, const LowRankState& state,
                      const StepConfig& cfg) {
    const Mat f_field = eval_f_nonlinear(reconstruct(state), spec.nonlinearity, cfg.threads);
    NonlinearRhs rhs;
    rhs.g1 = rhs_g1_from(spec.grid, spec.samples, f_field, state.Y);
    rhs.g2 = rhs_g2_from(spec.grid, spec.samples, f_field, state, cfg.sigma_floor_rel);
    return rhs;
}

void check_finite(const LowRankState& state) {
    if (!all_finite(state.U) || !all_finite(state.Y))
        throw NonFiniteError("non-finite state at t=" + std::to_string(state.t));
}

LowRankState apply_diffusion(const ProblemSpec& spec, LowRankState state, double dt) {
    if (spec.nu > 0.0)
        state.U = solve_shifted_lambda_cols(spec.grid, spec.nu, state.U, dt);
    return state;
}

LowRankState apply_nonlinear(const ProblemSpec& spec, LowRankState state,
                             const StepConfig& cfg, double dt) {
    const NonlinearRhs rhs = eval_rhs(spec, state, cfg);
    state.U += dt * rhs.g1;
    state.Y += dt * rhs.g2;
    return state;
}

}  // namespace

void reorthonormalize(const SampleSpace& samples, LowRankState& state) {
    const Mat m = stochastic_gram(samples, state.Y);
    Eigen::SelfAdjointEigenSolver<Mat> eig(m);
    if (!(eig.eigenvalues().minCoeff() > 0.0))
        throw RankLossError(state.t, std::max(0.0, eig.eigenvalues().minCoeff()));
    const Mat& v = eig.eigenvectors();
    const Vec roots = eig.eigenvalues().cwiseSqrt();
    const Mat m_half = v * roots.asDiagonal() * v.transpose();
    const Mat m_inv_half = v * roots.cwiseInverse().asDiagonal() * v.transpose();
    state.Y = state.Y * m_inv_half;
    state.U = state.U * m_half;
}

LowRankState step(const ProblemSpec& spec, const LowRankState& state, const StepConfig& cfg) {
    cfg.validate();
    check_finite(state);
    const double dt = cfg.dt;

    LowRankState next;
    switch (cfg.scheme) {
        case Scheme::ImexEuler: {
            const NonlinearRhs rhs = eval_rhs(spec, state, cfg);
            next = state;
            next.U += dt * rhs.g1;
            next.Y += dt * rhs.g2;
            next = apply_diffusion(spec, std::move(next), dt);
            break;
        }
        case Scheme::LieSplitting: {
            next = apply_diffusion(spec, state, dt);
            next = apply_nonlinear(spec, std::move(next), cfg, dt);
            break;
        }
        case Scheme::StrangSplitting: {
            next = apply_nonlinear(spec, state, cfg, 0.5 * dt);
            next = apply_diffusion(spec, std::move(next), dt);
            next = apply_nonlinear(spec, std::move(next), cfg, 0.5 * dt);
            break;
        }
    }
    next.t = state.t + dt;
    check_finite(next);

    const bool repair =
        cfg.reorth == ReorthPolicy::EveryStep ||
        (cfg.reorth == ReorthPolicy::OnDrift &&
         orth_drift(spec.samples, next.Y) > cfg.drift_tol);
    if (repair) reorthonormalize(spec.samples, next);
    return next;
}

StepDiagnostics diagnose(const ProblemSpec& spec, const LowRankState& state) {
    StepDiagnostics d;
    d.t = state.t;
    const GramDiagnostics g = gram_u(spec.grid, state);
    d.sigma_min = g.sigma_min;
    d.inv_norm = g.inv_norm;
    d.orth_drift = orth_drift(spec.samples, state.Y);
    try {
        d.gauge_residual = gauge_residual(spec, state);
    } catch (const RankLossError&) {
        d.gauge_residual = std::numeric_limits<double>::quiet_NaN();
    }
    d.energy = norm_l2omega_h(spec.grid, spec.samples, reconstruct(state));
    return d;
}

Trajectory integrate(const ProblemSpec& spec, int rank, double t_end, const StepConfig& cfg) {
    cfg.validate();
    if (t_end < 0.0) throw DomainError("integrate: t_end >= 0 required");

    Trajectory traj;
    LowRankState state = initial_factorize(spec.grid, spec.samples, spec.u0, rank);
    traj.snapshots.push_back(state);
    traj.diagnostics.push_back(diagnose(spec, state));

    const long nsteps = std::lround(t_end / cfg.dt);
    for (long k = 0; k < nsteps; ++k) {
        try {
            state = step(spec, state, cfg);
        } catch (const RankLossError& e) {
            traj.status = RunStatus::RankLoss;
            traj.t_stop = e.t;
            return traj;
        } catch (const NonFiniteError&) {
            traj.status = RunStatus::NonFinite;
            traj.t_stop = state.t;
            return traj;
        }
        state.t = (k + 1) * cfg.dt;  // exact time grid, no accumulation drift
        traj.snapshots.push_back(state);
        traj.diagnostics.push_back(diagnose(spec, state));
    }
    traj.status = RunStatus::Completed;
    traj.t_stop = nsteps * cfg.dt;
    return traj;
}

double gauge_residual(const ProblemSpec& spec, const LowRankState& state) {
    const Mat g2 = rhs_g2(spec, state);
    // E[G2 Y^T]
    const Mat e = g2.transpose() * (spec.samples.weights.asDiagonal() * state.Y);
    return e.norm();
}

double dlr_residual(const ProblemSpec& spec, const Trajectory& traj,
                    std::size_t step_index) {
    if (traj.snapshots.size() < 2)
        throw DomainError("dlr_residual: at least two trajectory snapshots required");
    if (step_index + 1 >= traj.snapshots.size())
        throw DomainError("dlr_residual: step index out of range");
    return dlr_residual(spec, traj.snapshots[step_index], traj.snapshots[step_index + 1]);
}

}  // namespace dualdo
