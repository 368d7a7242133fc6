#include <doctest.h>

#include <cmath>

#include "dualdo/ambient.hpp"
#include "dualdo/rng.hpp"
#include "helpers.hpp"

using namespace dualdo;
using oracles::brute_inner_h;
using oracles::brute_inner_l2omega;

TEST_CASE("sample spaces are valid probability measures") {
    for (int q : {1, 4, 37, 200}) {
        const SampleSpace mc = SampleSpace::monte_carlo(q, 42);
        mc.validate();
        CHECK(std::abs(mc.weights.sum() - 1.0) <= 1e-14);
        const SampleSpace gl = SampleSpace::gauss_legendre(q);
        gl.validate();
        CHECK(std::abs(gl.weights.sum() - 1.0) <= 1e-14);
    }
    // Gauss-Legendre integrates low polynomials exactly: E[xi^2] = 1/3
    const SampleSpace gl = SampleSpace::gauss_legendre(8);
    Vec sq(8);
    for (int i = 0; i < 8; ++i) sq[i] = gl.xi[i] * gl.xi[i];
    CHECK(expect(gl, sq) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("expect: frozen examples and exactness") {
    SampleSpace s = SampleSpace::monte_carlo(4, 7);
    CHECK(expect(s, Vec::Ones(4)) == doctest::Approx(1.0).epsilon(1e-14));

    // indicator of point q returns w_q
    Vec ind = Vec::Zero(4);
    ind[2] = 1.0;
    CHECK(expect(s, ind) == s.weights[2]);

    // uniform weights, x = (1,2,3,4) -> 2.5
    Vec x(4);
    x << 1, 2, 3, 4;
    CHECK(expect(s, x) == doctest::Approx(2.5).epsilon(1e-14));

    CHECK_THROWS_AS(expect(s, Vec::Ones(5)), ShapeError);
}

TEST_CASE("inner_h: frozen examples, symmetry, positivity") {
    SpatialGrid grid{3, 0.0, 1.0};
    CHECK(grid.h() == doctest::Approx(0.25));
    CHECK(inner_h(grid, Vec::Zero(3), Vec::Zero(3)) == 0.0);
    // constant 1 on n=3, h=0.25 -> 0.75
    CHECK(inner_h(grid, Vec::Ones(3), Vec::Ones(3)) == doctest::Approx(0.75).epsilon(1e-15));

    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const Vec f = rng.normal_vec(3), g = rng.normal_vec(3);
        CHECK(inner_h(grid, f, g) == inner_h(grid, g, f));
        CHECK(inner_h(grid, f, f) >= 0.0);
        CHECK(inner_h(grid, f, g) ==
              doctest::Approx(brute_inner_h(grid, f, g)).epsilon(1e-14));
    }
    CHECK_THROWS_AS(inner_h(grid, Vec::Ones(3), Vec::Ones(4)), ShapeError);
}

TEST_CASE("inner_l2omega_h: separable case and brute-force oracle") {
    SpatialGrid grid{4, 0.0, 1.0};
    SampleSpace samples = SampleSpace::monte_carlo(3, 11);
    Rng rng(5);

    CHECK(inner_l2omega_h(grid, samples, Mat::Zero(3, 4), Mat::Zero(3, 4)) == 0.0);

    // rank-1 u = y (x) g with y orthonormal scalar: <u,u> = inner_h(g,g)
    Vec y = rng.normal_vec(3);
    double nrm = 0.0;
    for (int q = 0; q < 3; ++q) nrm += samples.weights[q] * y[q] * y[q];
    y /= std::sqrt(nrm);
    const Vec g = rng.normal_vec(4);
    const Mat u = y * g.transpose();
    CHECK(inner_l2omega_h(grid, samples, u, u) ==
          doctest::Approx(inner_h(grid, g, g)).epsilon(1e-13));

    for (int trial = 0; trial < 10; ++trial) {
        const Mat a = rng.normal_mat(3, 4), b = rng.normal_mat(3, 4);
        CHECK(inner_l2omega_h(grid, samples, a, b) ==
              doctest::Approx(brute_inner_l2omega(grid, samples, a, b)).epsilon(1e-13));
    }
    CHECK_THROWS_AS(inner_l2omega_h(grid, samples, Mat::Zero(3, 4), Mat::Zero(4, 3)),
                    ShapeError);
}

TEST_CASE("apply_lambda: eigenmodes, symmetry, dissipativity") {
    SpatialGrid grid{16, 0.0, 1.0};
    const double nu = 0.3;
    CHECK(apply_lambda(grid, nu, Vec::Zero(16)).norm() == 0.0);

    for (int k : {1, 3, 16}) {
        const Vec mode = grid.sine_mode(k);
        const Vec out = apply_lambda(grid, nu, mode);
        const double lam = grid.laplacian_eigenvalue(k);
        CHECK((out + nu * lam * mode).norm() <= 1e-11 * mode.norm());
    }

    Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const Vec f = rng.normal_vec(16), g = rng.normal_vec(16);
        const double lfg = inner_h(grid, apply_lambda(grid, nu, f), g);
        const double flg = inner_h(grid, f, apply_lambda(grid, nu, g));
        const double scale = std::sqrt(inner_h(grid, f, f) * inner_h(grid, g, g));
        CHECK(std::abs(lfg - flg) <= 1e-12 * scale);
        CHECK(inner_h(grid, apply_lambda(grid, nu, f), f) <= 1e-12);
    }
}

TEST_CASE("solve_shifted_lambda: residual, identity limit, eigenmode oracle") {
    SpatialGrid grid{32, 0.0, 1.0};
    const double nu = 0.7;
    Rng rng(17);

    CHECK(solve_shifted_lambda(grid, nu, Vec::Zero(32), 0.5).norm() == 0.0);
    CHECK_THROWS_AS(solve_shifted_lambda(grid, nu, Vec::Ones(32), 0.0), DomainError);
    CHECK_THROWS_AS(solve_shifted_lambda(grid, nu, Vec::Ones(32), -1.0), DomainError);

    for (double alpha : {1e-3, 0.1, 2.0}) {
        const Vec g = rng.normal_vec(32);
        const Vec f = solve_shifted_lambda(grid, nu, g, alpha);
        const Vec residual = f - alpha * apply_lambda(grid, nu, f) - g;
        CHECK(residual.norm() <= 1e-12 * g.norm());
    }

    // alpha -> 0: f -> g
    const Vec g = rng.normal_vec(32);
    const Vec f = solve_shifted_lambda(grid, nu, g, 1e-8);
    CHECK((f - g).norm() <= 1e-4 * g.norm());

    // eigenmode: s_k -> s_k / (1 + alpha nu lambda_k)
    for (int k : {1, 5, 20}) {
        const double alpha = 0.05;
        const Vec mode = grid.sine_mode(k);
        const Vec f2 = solve_shifted_lambda(grid, nu, mode, alpha);
        const Vec expected = mode / (1.0 + alpha * nu * grid.laplacian_eigenvalue(k));
        CHECK((f2 - expected).norm() <= 1e-12 * mode.norm());
    }
}

TEST_CASE("eval_f_nonlinear: degenerate cases and Lipschitz bound") {
    const int q = 6, n = 9;
    Rng rng(23);
    SpatialGrid grid{n, 0.0, 1.0};
    SampleSpace samples = SampleSpace::monte_carlo(q, 3);

    // a = 0 -> output = c
    {
        NonlinearitySpec f = oracles::const_nonlinearity(q, n, 0.0, 1.0, 0.0, FTag::Tanh);
        f.c = rng.normal_mat(q, n);
        const Mat u = rng.normal_mat(q, n);
        CHECK((eval_f_nonlinear(u, f) - f.c).norm() == 0.0);
    }

    // identity, b = 1, c = 0 -> a .* u
    {
        NonlinearitySpec f = oracles::const_nonlinearity(q, n, 0.0, 1.0, 0.0, FTag::Identity);
        f.a = rng.normal_mat(q, n);
        const Mat u = rng.normal_mat(q, n);
        CHECK((eval_f_nonlinear(u, f) - f.a.cwiseProduct(u)).norm() <= 1e-15);
    }

    // ||F(u)-F(u')|| <= sup|a| sup|b| sup|f'| ||u-u'|| on 50 random pairs
    for (int trial = 0; trial < 50; ++trial) {
        NonlinearitySpec f = oracles::const_nonlinearity(q, n, 0.0, 0.0, 0.0, FTag::Tanh);
        f.a = rng.normal_mat(q, n);
        f.b = rng.normal_mat(q, n);
        f.c = rng.normal_mat(q, n);
        const Mat u = rng.normal_mat(q, n), v = rng.normal_mat(q, n);
        const double lip = f.a.cwiseAbs().maxCoeff() * f.b.cwiseAbs().maxCoeff() * f.lip_f();
        const double lhs =
            oracles::brute_inner_l2omega(grid, samples, eval_f_nonlinear(u, f) - eval_f_nonlinear(v, f),
                                         eval_f_nonlinear(u, f) - eval_f_nonlinear(v, f));
        const double rhs = oracles::brute_inner_l2omega(grid, samples, u - v, u - v);
        CHECK(std::sqrt(lhs) <= lip * std::sqrt(rhs) * (1.0 + 1e-12));
    }

    // sample restriction commutes with evaluation
    {
        NonlinearitySpec f = oracles::const_nonlinearity(q, n, 0.0, 0.0, 0.0, FTag::Sin);
        f.a = rng.normal_mat(q, n);
        f.b = rng.normal_mat(q, n);
        f.c = rng.normal_mat(q, n);
        const Mat u = rng.normal_mat(q, n);
        const Mat full = eval_f_nonlinear(u, f);
        NonlinearitySpec sub = f;
        sub.a = f.a.topRows(3);
        sub.b = f.b.topRows(3);
        sub.c = f.c.topRows(3);
        const Mat restricted = eval_f_nonlinear(Mat(u.topRows(3)), sub);
        CHECK((restricted - full.topRows(3)).norm() == 0.0);
    }

    // threaded evaluation is bit-identical
    {
        NonlinearitySpec f = oracles::const_nonlinearity(q, n, 0.3, 1.1, 0.2, FTag::Tanh);
        const Mat u = rng.normal_mat(q, n);
        const Mat once = eval_f_nonlinear(u, f, 1);
        const Mat many = eval_f_nonlinear(u, f, 4);
        CHECK((once - many).norm() == 0.0);
    }

    CHECK_THROWS_AS(
        eval_f_nonlinear(Mat::Zero(2, 2), oracles::const_nonlinearity(q, n, 1, 1, 0, FTag::Identity)),
        ShapeError);
}

TEST_CASE("custom nonlinearity tag requires a finite declared bound") {
    const int q = 2, n = 3;
    auto soft = [](double s) { return s / (1.0 + std::abs(s)); };
    const NonlinearitySpec ok = NonlinearitySpec::custom(
        Mat::Ones(q, n), Mat::Ones(q, n), Mat::Zero(q, n), soft, 1.0);
    CHECK(ok.lip_f() == 1.0);
    CHECK_THROWS_AS(NonlinearitySpec::custom(Mat::Ones(q, n), Mat::Ones(q, n),
                                             Mat::Zero(q, n), soft, 0.0),
                    DomainError);
}
