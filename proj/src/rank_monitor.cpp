#include "dualdo/rank_monitor.hpp"

#include <cmath>

#include "dualdo/reparam.hpp"

namespace dualdo {

std::optional<RankEvent> check(const GramDiagnostics& diag, double t, int current_rank,
                               std::span<const double> inv_norm_history,
                               const RankThresholds& thresholds) {
    const int s = static_cast<int>(diag.z.rows());
    const double floor = thresholds.sigma_floor_rel * diag.z.trace() / s;

    bool fire = diag.sigma_min <= floor;
    if (!fire && thresholds.slope_window > 0 &&
        static_cast<int>(inv_norm_history.size()) >= thresholds.slope_window) {
        fire = true;
        double prev = inv_norm_history[inv_norm_history.size() - thresholds.slope_window];
        for (std::size_t i = inv_norm_history.size() - thresholds.slope_window + 1;
             i < inv_norm_history.size(); ++i) {
            if (!(inv_norm_history[i] >= thresholds.slope_factor * prev)) {
                fire = false;
                break;
            }
            prev = inv_norm_history[i];
        }
        if (fire && !(diag.inv_norm >= thresholds.slope_factor * prev)) fire = false;
    }
    if (!fire) return std::nullopt;

    RankEvent event;
    event.t = t;
    event.sigma_min_history.reserve(inv_norm_history.size() + 1);
    for (double inv : inv_norm_history)
        event.sigma_min_history.push_back(inv > 0.0 ? 1.0 / inv : 0.0);
    event.sigma_min_history.push_back(diag.sigma_min);
    event.action = thresholds.action;
    event.new_rank = thresholds.action == RankAction::DropRank ? current_rank - 1 : current_rank;
    if (event.new_rank < 1) event.action = RankAction::Terminate;
    return event;
}

std::optional<RankEvent> check(const SpatialGrid& grid, const LowRankState& state,
                               std::span<const double> inv_norm_history,
                               const RankThresholds& thresholds) {
    return check(gram_u(grid, state), state.t, state.rank(), inv_norm_history, thresholds);
}

LowRankState drop_rank_restart(const SpatialGrid& grid, const SampleSpace& samples,
                               const LowRankState& state, int new_rank) {
    if (new_rank < 1) throw DomainError("drop_rank_restart: new_rank >= 1 required");
    if (new_rank >= state.rank())
        throw DomainError("drop_rank_restart: new_rank must be below the current rank");
    const Mat u = reconstruct(state);
    LowRankState fresh = initial_factorize(grid, samples, u, new_rank);
    fresh.t = state.t;
    return fresh;
}

}  // namespace dualdo
