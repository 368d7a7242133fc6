#include "dualdo/runner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <vector>

#include "dualdo/analysis.hpp"
#include "dualdo/integrator.hpp"
#include "dualdo/problems.hpp"
#include "dualdo/rank_monitor.hpp"
#include "dualdo/reference.hpp"
#include "dualdo/reparam.hpp"

namespace dualdo {

namespace {

std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Scheme scheme_of(const std::string& s) {
    if (s == "lie_splitting") return Scheme::LieSplitting;
    if (s == "strang_splitting") return Scheme::StrangSplitting;
    return Scheme::ImexEuler;
}

ReorthPolicy reorth_of(const std::string& s) {
    if (s == "never") return ReorthPolicy::Never;
    if (s == "on_drift") return ReorthPolicy::OnDrift;
    return ReorthPolicy::EveryStep;
}

StepConfig step_config_of(const RunSettings& rs) {
    StepConfig cfg;
    cfg.dt = rs.dt;
    cfg.scheme = scheme_of(rs.scheme);
    cfg.reorth = reorth_of(rs.reorth_policy);
    cfg.drift_tol = rs.drift_tol;
    cfg.sigma_floor_rel = rs.sigma_floor;
    cfg.threads = rs.threads;
    return cfg;
}

void write_manifest(const std::filesystem::path& dir, const RunConfig& cfg,
                    const std::string& status, double t_stop) {
    std::ofstream os(dir / "manifest.txt");
    os << "artifact = dlr " << kArtifactVersion << "\n";
    os << "status = " << status << "\n";
    os << "t_stop = " << g17(t_stop) << "\n\n";
    write_config(os, cfg);
}

void write_final_state(const std::filesystem::path& dir, const LowRankState& state) {
    nlohmann::json j;
    j["t"] = state.t;
    j["rank"] = state.rank();
    auto to_rows = [](const Mat& m) {
        std::vector<std::vector<double>> rows;
        rows.reserve(m.rows());
        for (int r = 0; r < m.rows(); ++r)
            rows.emplace_back(m.row(r).begin(), m.row(r).end());
        return rows;
    };
    j["U"] = to_rows(state.U);  // n x S
    j["Y"] = to_rows(state.Y);  // Q x S
    std::ofstream os(dir / "final_state.json");
    os << j.dump(1, ' ') << "\n";
}

struct DiagnosticsCsv {
    std::ofstream os;

    explicit DiagnosticsCsv(const std::filesystem::path& path) : os(path) {
        os << "t,sigma_min,inv_norm,orth_drift,gauge_residual,energy,"
              "err_vs_reference,best_rank_error\n";
    }

    void row(const StepDiagnostics& d, double err_ref, double tail) {
        os << g17(d.t) << ',' << g17(d.sigma_min) << ',' << g17(d.inv_norm) << ','
           << g17(d.orth_drift) << ',' << g17(d.gauge_residual) << ',' << g17(d.energy)
           << ',' << g17(err_ref) << ',' << g17(tail) << '\n';
    }
};

}  // namespace

RunResult run_simulate(const RunConfig& cfg, bool rank_adapt) {
    const ProblemSpec spec = make_problem(cfg);
    const StepConfig scfg = step_config_of(cfg.run);
    const std::filesystem::path dir(cfg.run.out_dir);
    std::filesystem::create_directories(dir);

    LowRankState state;
    try {
        state = initial_factorize(spec.grid, spec.samples, spec.u0, cfg.run.rank);
    } catch (const RankDeficientError& e) {
        return {kExitConfig, std::string("config error: rank: ") + e.what()};
    }

    RankThresholds thresholds;
    thresholds.sigma_floor_rel = cfg.run.sigma_floor;
    thresholds.slope_factor = cfg.run.slope_factor;
    thresholds.slope_window = cfg.run.slope_window;
    thresholds.action = RankAction::DropRank;

    DiagnosticsCsv csv(dir / "diagnostics.csv");
    std::ofstream events;
    if (rank_adapt) {
        events.open(dir / "events.csv");
        events << "t,action,old_rank,new_rank,sigma_min\n";
    }

    FullOrderStepper reference(spec, cfg.run.dt, cfg.run.threads);
    std::vector<double> inv_norm_history;

    auto record = [&](const LowRankState& s) {
        const StepDiagnostics d = diagnose(spec, s);
        const double err = error_l2(spec.grid, spec.samples, reconstruct(s), reference.field());
        const double tail = best_rank_error(spec.grid, spec.samples, reference.field(), s.rank());
        csv.row(d, err, tail);
        return d;
    };

    StepDiagnostics diag = record(state);
    const long nsteps = std::lround(cfg.run.t_end / cfg.run.dt);
    std::string status = "completed";
    double t_stop = cfg.run.t_end;

    for (long k = 0; k < nsteps; ++k) {
        if (rank_adapt) {
            GramDiagnostics gd;
            gd.z = gram_matrix(spec.grid, state.U);
            gd.sigma_min = diag.sigma_min;
            gd.inv_norm = diag.inv_norm;
            gd.cond = 0.0;
            if (auto event = check(gd, state.t, state.rank(), inv_norm_history, thresholds)) {
                events << g17(event->t) << ','
                       << (event->action == RankAction::DropRank ? "drop_rank" : "terminate")
                       << ',' << state.rank() << ',' << event->new_rank << ','
                       << g17(diag.sigma_min) << '\n';
                if (event->action == RankAction::Terminate) {
                    status = "rank_loss";
                    t_stop = state.t;
                    break;
                }
                state = drop_rank_restart(spec.grid, spec.samples, state, event->new_rank);
                inv_norm_history.clear();
                diag = diagnose(spec, state);
            }
            inv_norm_history.push_back(diag.inv_norm);
        }
        try {
            state = step(spec, state, scfg);
        } catch (const RankLossError& e) {
            if (rank_adapt && state.rank() > 1) {
                // hard floor hit mid-step: drop one rank and retry the step
                events << g17(e.t) << ",drop_rank," << state.rank() << ','
                       << state.rank() - 1 << ',' << g17(e.sigma_min) << '\n';
                state = drop_rank_restart(spec.grid, spec.samples, state, state.rank() - 1);
                inv_norm_history.clear();
                diag = diagnose(spec, state);
                --k;
                continue;
            }
            status = "rank_loss";
            t_stop = e.t;
            break;
        } catch (const NonFiniteError&) {
            status = "non_finite";
            t_stop = state.t;
            break;
        }
        state.t = (k + 1) * cfg.run.dt;
        reference.advance();
        diag = record(state);
    }

    write_final_state(dir, state);
    write_manifest(dir, cfg, status, t_stop);

    if (status == "rank_loss" && !rank_adapt)
        return {kExitRankLoss, "rank loss terminated the run at t_max = " + g17(t_stop)};
    if (status == "non_finite")
        return {kExitRankLoss, "non-finite state at t = " + g17(t_stop)};
    if (status == "rank_loss")
        return {kExitRankLoss, "rank exhausted at t = " + g17(t_stop)};
    return {kExitOk, "completed t_end = " + g17(t_stop)};
}

RunResult run_convergence(const RunConfig& cfg) {
    const ProblemSpec spec = make_problem(cfg);
    const std::filesystem::path dir(cfg.run.out_dir);
    std::filesystem::create_directories(dir);

    const int levels = cfg.run.conv_dt_levels;
    const double dt_min = cfg.run.dt / std::pow(2.0, levels - 1);
    const double dt_ref = dt_min / 4.0;
    const std::vector<Mat> ref = solve_full(spec, cfg.run.t_end, dt_ref, cfg.run.threads);
    const Mat& u_ref = ref.back();

    std::ofstream os(dir / "convergence.csv");
    os << "rank,dt,err_vs_reference,best_rank_error\n";
    for (int s = 1; s <= cfg.run.conv_rank_max; ++s) {
        for (int lev = 0; lev < levels; ++lev) {
            const double dt = cfg.run.dt / std::pow(2.0, lev);
            StepConfig scfg = step_config_of(cfg.run);
            scfg.dt = dt;
            Trajectory traj;
            try {
                traj = integrate(spec, s, cfg.run.t_end, scfg);
            } catch (const RankDeficientError& e) {
                return {kExitConfig, std::string("config error: rank: ") + e.what()};
            }
            if (traj.status != RunStatus::Completed)
                return {kExitRankLoss, "rank loss during convergence sweep at t = " +
                                           g17(traj.t_stop)};
            const double err = error_l2(spec.grid, spec.samples,
                                        reconstruct(traj.snapshots.back()), u_ref);
            const double tail = best_rank_error(spec.grid, spec.samples, u_ref, s);
            os << s << ',' << g17(dt) << ',' << g17(err) << ',' << g17(tail) << '\n';
        }
    }
    write_manifest(dir, cfg, "completed", cfg.run.t_end);
    return {kExitOk, "convergence sweep written"};
}

RunResult run_verify(const RunConfig& cfg) {
    const ProblemSpec spec = make_problem(cfg);
    const std::filesystem::path dir(cfg.run.out_dir);
    std::filesystem::create_directories(dir);

    const int trials = cfg.run.verify_trials;
    std::vector<CheckReport> reports;
    if (trials > 0) {
        reports.push_back(run_wedin_campaign(50, 3, trials, cfg.problem.seed + 1));
        reports.push_back(run_proj_lipschitz_campaign(50, 3, trials, cfg.problem.seed + 2));
        reports.push_back(
            run_gram_lipschitz_campaign(spec.grid, 3, trials, cfg.problem.seed + 3));
        reports.push_back(run_stability_campaign(spec, trials, cfg.problem.seed + 4));

        StepConfig scfg = step_config_of(cfg.run);
        // the envelopes need an O(1) horizon to be meaningfully testable
        const double t_growth = std::max(cfg.run.t_end, 1.0);
        const Trajectory traj = integrate(spec, cfg.run.rank, t_growth, scfg);
        reports.push_back(
            check_growth_bounds(spec, traj, derive_growth_constants(spec)));

        if (cfg.run.negative_control) {
            // stale-constant control: envelope from the configured problem,
            // trajectory from one with the nonlinearity scaled x10
            RunConfig scaled = cfg;
            scaled.problem.a0 *= 10.0;
            scaled.problem.a1 *= 10.0;
            scaled.problem.c_amp *= 10.0;
            const ProblemSpec sspec = make_problem(scaled);
            const Trajectory straj = integrate(sspec, cfg.run.rank, t_growth, scfg);
            CheckReport control =
                check_growth_bounds(sspec, straj, derive_growth_constants(spec));
            control.name = "growth_bounds_negative_control";
            for (auto& row : control.rows) row.check = "negative_control/" + row.check;
            // the control must violate; a silent control is itself a failure
            TrialRow trigger;
            trigger.check = "negative_control/triggered";
            trigger.seed = 0;
            trigger.lhs = 1.0;
            trigger.rhs = control.violations();
            trigger.margin = trigger.rhs - trigger.lhs;
            trigger.pass = control.violations() > 0;
            control.rows.push_back(trigger);
            reports.push_back(std::move(control));
        }
    }

    std::ofstream os(dir / "verify.csv");
    write_reports_csv(os, reports);
    write_manifest(dir, cfg, "completed", 0.0);

    int violations = 0;
    bool precond_ok = true;
    for (const auto& r : reports) {
        violations += r.violations();
        precond_ok = precond_ok && r.precond_ok;
    }
    if (trials == 0)
        return {kExitOk, "warning: empty campaign (verify_trials = 0)"};
    if (violations > 0 || !precond_ok)
        return {kExitVerifyFailed,
                "verification failed: " + std::to_string(violations) + " violation(s)"};
    return {kExitOk, "all inequality audits passed"};
}

RunResult run(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.run.mode == "verify") return run_verify(cfg);
    if (cfg.run.mode == "convergence") return run_convergence(cfg);
    if (cfg.run.mode == "rank-adapt") return run_simulate(cfg, true);
    return run_simulate(cfg, false);
}

}  // namespace dualdo
