#pragma once

#include <string>

#include "dualdo/config.hpp"

namespace dualdo {

inline constexpr const char* kArtifactVersion = "0.1.0";

/// CLI exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRankLoss = 3;
inline constexpr int kExitVerifyFailed = 4;

struct RunResult {
    int exit_code = kExitOk;
    std::string message;
};

/// simulate / rank-adapt: lockstep low-rank + full-order run, per-step
/// diagnostics CSV, final-state dump, manifest. When rank_adapt is set,
/// monitor events drop the rank and the run continues; otherwise a rank loss
/// terminates with the discrete t_max in the summary.
RunResult run_simulate(const RunConfig& cfg, bool rank_adapt);

/// Sweep rank 1..conv_rank_max and conv_dt_levels dt halvings; one CSV row
/// per (S, dt) with the error against a fine-dt full-order reference and the
/// best-rank tail.
RunResult run_convergence(const RunConfig& cfg);

/// Seeded audit campaigns; exit 0 iff zero inequality violations.
RunResult run_verify(const RunConfig& cfg);

/// Dispatch on cfg.run.mode.
RunResult run(const RunConfig& cfg);

}  // namespace dualdo
