#include <doctest.h>

#include <cmath>
#include <vector>

#include "dualdo/integrator.hpp"
#include "dualdo/rank_monitor.hpp"
#include "dualdo/reparam.hpp"
#include "dualdo/rng.hpp"
#include "helpers.hpp"

using namespace dualdo;

namespace {
const SpatialGrid kGrid{10, 0.0, 1.0};
const SampleSpace kSamples = SampleSpace::monte_carlo(14, 5);
}  // namespace

TEST_CASE("check: silent on well-conditioned states") {
    const LowRankState s = oracles::random_state(kGrid, kSamples, 3, 7, true);
    RankThresholds thr;
    std::vector<double> history;
    CHECK(!check(kGrid, s, history, thr).has_value());
}

TEST_CASE("check: fires on nearly parallel columns") {
    LowRankState s = oracles::random_state(kGrid, kSamples, 2, 9, true);
    Rng rng(11);
    Vec noise = rng.normal_vec(kGrid.n);
    noise /= std::sqrt(inner_h(kGrid, noise, noise));
    s.U.col(1) = s.U.col(0) + 1e-7 * noise;  // angle ~ 1e-7
    RankThresholds thr;
    std::vector<double> history;
    const auto event = check(kGrid, s, history, thr);
    REQUIRE(event.has_value());
    CHECK(event->action == RankAction::DropRank);
    CHECK(event->new_rank == 1);
}

TEST_CASE("check: slope trigger fires on sustained inv_norm doubling") {
    GramDiagnostics diag;
    diag.z = Mat::Identity(3, 3);  // healthy floor-wise
    diag.sigma_min = 1.0;
    diag.cond = 1.0;
    RankThresholds thr;
    thr.slope_window = 5;

    std::vector<double> history;
    double inv = 1.0;
    for (int k = 0; k < 5; ++k) {
        history.push_back(inv);
        inv *= 2.0;
    }
    diag.inv_norm = inv;
    const auto event = check(diag, 0.5, 3, history, thr);
    REQUIRE(event.has_value());
    CHECK(event->new_rank == 2);
    CHECK(event->t == 0.5);
    // the event carries the sigma_min view of the watched history
    REQUIRE(event->sigma_min_history.size() == history.size() + 1);
    for (std::size_t i = 0; i < history.size(); ++i)
        CHECK(event->sigma_min_history[i] == doctest::Approx(1.0 / history[i]));
    CHECK(event->sigma_min_history.back() == diag.sigma_min);

    // a single stall breaks the streak
    history[2] = history[1];
    CHECK(!check(diag, 0.5, 3, history, thr).has_value());
}

TEST_CASE("check: never fires along a healthy trajectory") {
    ProblemSpec spec = oracles::small_problem(10, 14, 2, 13, FTag::Tanh, 0.5, 0.3, 0.05);
    StepConfig cfg;
    cfg.dt = 2e-3;
    const Trajectory traj = integrate(spec, 2, 0.2, cfg);
    REQUIRE(traj.status == RunStatus::Completed);
    RankThresholds thr;
    std::vector<double> history;
    for (const auto& s : traj.snapshots) {
        CHECK(!check(kGrid, s, history, thr).has_value());
        history.push_back(gram_u(kGrid, s).inv_norm);
    }
}

TEST_CASE("drop_rank_restart: reconstruction jump equals the discarded tail") {
    // exact rank new_rank: nothing changes
    {
        LowRankState s = oracles::random_state(kGrid, kSamples, 2, 17);
        LowRankState wide;  // embed the rank-2 state in a rank-3 parametrisation
        wide.U = Mat(kGrid.n, 3);
        wide.Y = Mat(kSamples.q(), 3);
        wide.U.leftCols(2) = s.U;
        wide.Y.leftCols(2) = s.Y;
        // third pair contributes nothing
        wide.U.col(2) = Vec::Zero(kGrid.n);
        Rng rng(19);
        Vec extra = rng.normal_vec(kSamples.q());
        // orthonormalise against the existing stochastic basis
        for (int pass = 0; pass < 2; ++pass)
            for (int j = 0; j < 2; ++j) {
                double proj = 0.0;
                for (int q = 0; q < kSamples.q(); ++q)
                    proj += kSamples.weights[q] * extra[q] * wide.Y(q, j);
                extra -= proj * wide.Y.col(j);
            }
        double nrm = 0.0;
        for (int q = 0; q < kSamples.q(); ++q)
            nrm += kSamples.weights[q] * extra[q] * extra[q];
        wide.Y.col(2) = extra / std::sqrt(nrm);
        wide.t = 0.7;

        const LowRankState dropped = drop_rank_restart(kGrid, kSamples, wide, 2);
        CHECK(dropped.t == 0.7);
        CHECK(norm_l2omega_h(kGrid, kSamples, reconstruct(dropped) - reconstruct(wide)) <=
              1e-9 * norm_l2omega_h(kGrid, kSamples, reconstruct(wide)));
    }

    // constructed spectrum (1, 1e-12): jump to rank 1 is about 1e-12
    {
        Rng rng(23);
        Mat v = oracles::orthonormalize_h(kGrid, rng.normal_mat(kGrid.n, 2));
        Mat w = oracles::orthonormalize_w(kSamples, rng.normal_mat(kSamples.q(), 2));
        LowRankState s;
        s.U = v * Eigen::Vector2d(1.0, 1e-12).asDiagonal();
        s.Y = w;
        s.t = 0.0;
        const Mat before = reconstruct(s);
        const LowRankState dropped = drop_rank_restart(kGrid, kSamples, s, 1);
        const double jump = norm_l2omega_h(kGrid, kSamples, reconstruct(dropped) - before);
        CHECK(jump == doctest::Approx(1e-12).epsilon(1e-3));

        // invariants of the restarted state
        CHECK(orth_drift(kSamples, dropped.Y) <= 1e-10);
        CHECK(gram_u(kGrid, dropped).sigma_min > 0.0);
    }

    // general jump equality against the field spectrum
    {
        LowRankState s = oracles::random_state(kGrid, kSamples, 3, 29);
        const Mat u = reconstruct(s);
        const Vec dense = oracles::dense_field_sigmas(kGrid, kSamples, u);
        const LowRankState dropped = drop_rank_restart(kGrid, kSamples, s, 1);
        double tail = 0.0;
        for (int j = 1; j < dense.size(); ++j) tail += dense[j] * dense[j];
        tail = std::sqrt(tail);
        const double jump = norm_l2omega_h(kGrid, kSamples, reconstruct(dropped) - u);
        CHECK(std::abs(jump - tail) <= 1e-9 * (1.0 + tail));

        // restarted Gram matrix is diag(sigma^2): conditioning equals the spread
        const GramDiagnostics d =
            gram_u(kGrid, drop_rank_restart(kGrid, kSamples, s, 2));
        const double expected = (dense[1] * dense[1]) / (dense[0] * dense[0]);
        CHECK(d.sigma_min / d.z.trace() >=
              0.99 * expected / (1.0 + expected));
    }

    // misuse is rejected
    LowRankState s = oracles::random_state(kGrid, kSamples, 2, 31);
    CHECK_THROWS_AS(drop_rank_restart(kGrid, kSamples, s, 2), DomainError);
    CHECK_THROWS_AS(drop_rank_restart(kGrid, kSamples, s, 0), DomainError);
}

TEST_CASE("drop_rank_restart: rank above the numerical rank is rejected") {
    LowRankState s = oracles::random_state(kGrid, kSamples, 3, 37);
    s.U.col(1) = s.U.col(0);  // numerical rank 2
    s.U.col(2) = 2.0 * s.U.col(0);
    // requesting 2 of a rank-1 field must fail inside the factorisation
    CHECK_THROWS_AS(drop_rank_restart(kGrid, kSamples, s, 2), RankDeficientError);
}
