#include "dualdo/problems.hpp"

#include <cmath>

#include "dualdo/rng.hpp"

namespace dualdo {

Mat stochastic_modes(const SampleSpace& samples, int r) {
    const int q = samples.q();
    Mat y(q, r);
    for (int j = 0; j < r; ++j)
        for (int qq = 0; qq < q; ++qq) y(qq, j) = std::pow(samples.xi[qq], j);
    // weighted modified Gram-Schmidt, two passes
    for (int j = 0; j < r; ++j) {
        for (int pass = 0; pass < 2; ++pass) {
            for (int k = 0; k < j; ++k) {
                double proj = 0.0;
                for (int qq = 0; qq < q; ++qq)
                    proj += samples.weights[qq] * y(qq, j) * y(qq, k);
                y.col(j) -= proj * y.col(k);
            }
        }
        double nrm = 0.0;
        for (int qq = 0; qq < q; ++qq) nrm += samples.weights[qq] * y(qq, j) * y(qq, j);
        if (!(nrm > 0.0))
            throw RankDeficientError("stochastic_modes: sample space too small for rank " +
                                     std::to_string(r));
        y.col(j) /= std::sqrt(nrm);
    }
    return y;
}

Mat spatial_modes(const SpatialGrid& grid, int r) {
    Mat g(grid.n, r);
    for (int k = 1; k <= r; ++k) {
        Vec mode = grid.sine_mode(k);
        g.col(k - 1) = mode / std::sqrt(inner_h(grid, mode, mode));
    }
    return g;
}

namespace {

Mat coefficient_a(const ProblemConfig& pc, const SpatialGrid& grid,
                  const SampleSpace& samples) {
    const int q = samples.q();
    Mat a(q, grid.n);
    for (int qq = 0; qq < q; ++qq) {
        const double sample_factor = pc.a0 + pc.a1 * samples.xi[qq];
        for (int i = 0; i < grid.n; ++i) {
            double profile = 1.0;
            if (pc.a_profile == "sine") {
                const double xt = (grid.node(i) - grid.a) / (grid.b - grid.a);
                profile = std::sin(3.141592653589793 * xt);
            }
            a(qq, i) = sample_factor * profile;
        }
    }
    return a;
}

Mat coefficient_c(const ProblemConfig& pc, const SpatialGrid& grid,
                  const SampleSpace& samples) {
    const int q = samples.q();
    Mat c(q, grid.n);
    const Vec mode = grid.sine_mode(pc.c_mode);
    for (int qq = 0; qq < q; ++qq)
        for (int i = 0; i < grid.n; ++i)
            c(qq, i) = pc.c_amp * mode[i] * (1.0 + pc.c1 * samples.xi[qq]);
    return c;
}

NonlinearitySpec make_nonlinearity(const ProblemConfig& pc, const SpatialGrid& grid,
                                   const SampleSpace& samples) {
    NonlinearitySpec f;
    const int q = samples.q();
    if (pc.nonlinearity == "none") {
        f.a = Mat::Zero(q, grid.n);
        f.b = Mat::Constant(q, grid.n, pc.b0);
        f.c = Mat::Zero(q, grid.n);
        f.f = FTag::Identity;
        return f;
    }
    f.a = coefficient_a(pc, grid, samples);
    f.b = Mat::Constant(q, grid.n, pc.b0);
    f.c = coefficient_c(pc, grid, samples);
    if (pc.nonlinearity == "linear") f.f = FTag::Identity;
    if (pc.nonlinearity == "tanh") f.f = FTag::Tanh;
    if (pc.nonlinearity == "sin") f.f = FTag::Sin;
    return f;
}

Mat initial_condition(const ProblemConfig& pc, const SpatialGrid& grid,
                      const SampleSpace& samples) {
    if (pc.ic == "collapsing_modes") {
        // two deterministic modes that diffusion drives towards each other:
        // U1 = s_k1 + s_k2, U2 = s_k1 - s_k2; the fast mode s_k2 decays and
        // the columns become parallel.
        const Mat y = stochastic_modes(samples, 2);
        const Mat g = spatial_modes(grid, std::max(pc.ic_mode1, pc.ic_mode2));
        const Vec g1 = g.col(pc.ic_mode1 - 1);
        const Vec g2 = g.col(pc.ic_mode2 - 1);
        Mat u0 = Mat::Zero(samples.q(), grid.n);
        u0 += pc.ic_amp * y.col(0) * (g1 + g2).transpose();
        u0 += pc.ic_amp * y.col(1) * (g1 - g2).transpose();
        return u0;
    }
    if (pc.ic == "dyad_rank2") {
        // exactly rank 2: constant stochastic mode times g_k1 plus the
        // orthonormalised xi times g_k2, second dyad scaled by ic_decay
        const Mat y = stochastic_modes(samples, 2);
        const Mat g = spatial_modes(grid, std::max(pc.ic_mode1, pc.ic_mode2));
        Mat u0 = Mat::Zero(samples.q(), grid.n);
        u0 += pc.ic_amp * y.col(0) * g.col(pc.ic_mode1 - 1).transpose();
        u0 += pc.ic_amp * pc.ic_decay * y.col(1) * g.col(pc.ic_mode2 - 1).transpose();
        return u0;
    }
    // random_rank: seeded random rotations of the first ic_rank+2 sine modes
    // paired with orthonormal polynomial chaos, geometric spectrum
    const int r = pc.ic_rank;
    const Mat y = stochastic_modes(samples, r);
    const int width = std::min(grid.n, r + 2);
    const Mat base = spatial_modes(grid, width);
    Rng rng(pc.seed ^ 0x5bf0afe5u);
    Mat mix = rng.normal_mat(width, r);
    Mat g = base * mix;
    // H-orthonormalise the mixed spatial modes
    for (int j = 0; j < r; ++j) {
        for (int pass = 0; pass < 2; ++pass)
            for (int k = 0; k < j; ++k)
                g.col(j) -= inner_h(grid, g.col(j), g.col(k)) * g.col(k);
        g.col(j) /= std::sqrt(inner_h(grid, g.col(j), g.col(j)));
    }
    Mat u0 = Mat::Zero(samples.q(), grid.n);
    for (int j = 0; j < r; ++j)
        u0 += pc.ic_amp * std::pow(pc.ic_decay, j) * y.col(j) * g.col(j).transpose();
    return u0;
}

}  // namespace

ProblemSpec make_problem(const RunConfig& cfg) {
    cfg.validate();
    const ProblemConfig& pc = cfg.problem;
    ProblemSpec spec;
    spec.grid = SpatialGrid{pc.n, pc.domain_a, pc.domain_b};
    spec.grid.validate();
    spec.samples = pc.sampling == "gauss_legendre" ? SampleSpace::gauss_legendre(pc.q)
                                                   : SampleSpace::monte_carlo(pc.q, pc.seed);
    spec.nu = pc.nu;
    spec.nonlinearity = make_nonlinearity(pc, spec.grid, spec.samples);
    spec.u0 = initial_condition(pc, spec.grid, spec.samples);
    spec.rank = cfg.run.rank;
    spec.t_end = cfg.run.t_end;
    spec.validate();
    return spec;
}

}  // namespace dualdo
