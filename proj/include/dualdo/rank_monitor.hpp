#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dualdo/state.hpp"

namespace dualdo {

enum class RankAction { Terminate, DropRank };

struct RankThresholds {
    double sigma_floor_rel = kSigmaFloorRel;
    /// slope trigger: fire when inv_norm grew by >= slope_factor on each of
    /// the last slope_window consecutive steps
    double slope_factor = 2.0;
    int slope_window = 5;
    RankAction action = RankAction::DropRank;
};

struct RankEvent {
    double t = 0.0;
    std::vector<double> sigma_min_history;
    RankAction action = RankAction::DropRank;
    int new_rank = 0;
};

/// Examine the Gram diagnostics of the current state against the thresholds.
/// `inv_norm_history` is the caller-owned record of past ||Z^-1|| values,
/// oldest first, not including the current one. Two triggers: the relative
/// sigma_min floor, and sustained blow-up of inv_norm (a finite-precision
/// proxy for divergence of ||Z^-1||).
std::optional<RankEvent> check(const GramDiagnostics& diag, double t, int current_rank,
                               std::span<const double> inv_norm_history,
                               const RankThresholds& thresholds);

std::optional<RankEvent> check(const SpatialGrid& grid, const LowRankState& state,
                               std::span<const double> inv_norm_history,
                               const RankThresholds& thresholds);

/// Restart at a lower rank: reconstruct the field, take its best rank-new_rank
/// factorization at the same time. The reconstruction jump equals the
/// discarded singular-value tail. Throws RankDeficientError when new_rank
/// exceeds the numerical rank of the field.
LowRankState drop_rank_restart(const SpatialGrid& grid, const SampleSpace& samples,
                               const LowRankState& state, int new_rank);

}  // namespace dualdo
