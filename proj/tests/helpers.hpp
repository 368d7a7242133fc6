#pragma once

// Test-only oracles: brute-force reductions, dense-SVD and dense operator
// norms. Everything here is deliberately independent of the library's
// computational paths.

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <vector>

#include "dualdo/ambient.hpp"
#include "dualdo/rng.hpp"
#include "dualdo/state.hpp"

namespace oracles {

using dualdo::Mat;
using dualdo::Vec;

inline double brute_inner_h(const dualdo::SpatialGrid& grid, const Vec& f, const Vec& g) {
    double acc = 0.0;
    for (int i = 0; i < f.size(); ++i) acc += f[i] * g[i];
    return grid.h() * acc;
}

inline double brute_inner_l2omega(const dualdo::SpatialGrid& grid,
                                  const dualdo::SampleSpace& samples, const Mat& u,
                                  const Mat& v) {
    double acc = 0.0;
    for (int q = 0; q < u.rows(); ++q)
        for (int i = 0; i < u.cols(); ++i)
            acc += samples.weights[q] * grid.h() * u(q, i) * v(q, i);
    return acc;
}

inline Mat brute_gram(const dualdo::SpatialGrid& grid, const Mat& u) {
    const int s = static_cast<int>(u.cols());
    Mat z(s, s);
    for (int j = 0; j < s; ++j)
        for (int k = 0; k < s; ++k) z(j, k) = brute_inner_h(grid, u.col(j), u.col(k));
    return z;
}

inline Mat brute_rhs_g1(const dualdo::SampleSpace& samples, const Mat& f_field,
                        const Mat& y) {
    const int n = static_cast<int>(f_field.cols());
    const int s = static_cast<int>(y.cols());
    Mat g1 = Mat::Zero(n, s);
    for (int j = 0; j < s; ++j)
        for (int q = 0; q < f_field.rows(); ++q)
            for (int i = 0; i < n; ++i)
                g1(i, j) += samples.weights[q] * f_field(q, i) * y(q, j);
    return g1;
}

inline Mat brute_reconstruct(const dualdo::LowRankState& state) {
    const int q = static_cast<int>(state.Y.rows());
    const int n = static_cast<int>(state.U.rows());
    Mat u = Mat::Zero(q, n);
    for (int qq = 0; qq < q; ++qq)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < state.rank(); ++j)
                u(qq, i) += state.U(i, j) * state.Y(qq, j);
    return u;
}

/// Singular values of the field via a dense SVD of the weighted Q x n matrix.
inline Vec dense_field_sigmas(const dualdo::SpatialGrid& grid,
                              const dualdo::SampleSpace& samples, const Mat& u) {
    Mat b = u * std::sqrt(grid.h());
    for (int q = 0; q < b.rows(); ++q) b.row(q) *= std::sqrt(samples.weights[q]);
    Eigen::JacobiSVD<Mat> svd(b);
    return svd.singularValues();
}

/// Dense matrix of the exact span projection onto span{W} in the weighted
/// geometry, as an operator on plain coordinates.
inline Mat dense_projector(const dualdo::SampleSpace& samples, const Mat& w) {
    const Mat d = samples.weights.asDiagonal();
    const Mat gram = w.transpose() * d * w;
    return w * gram.ldlt().solve(Mat(w.transpose() * d));
}

/// Weighted operator 2-norm of a dense Q x Q operator T (x -> Tx):
/// ||T||_w = ||D^{1/2} T D^{-1/2}||_2.
inline double dense_weighted_norm(const dualdo::SampleSpace& samples, const Mat& t) {
    const int q = samples.q();
    Mat scaled = t;
    for (int r = 0; r < q; ++r) scaled.row(r) *= std::sqrt(samples.weights[r]);
    for (int c = 0; c < q; ++c)
        scaled.col(c) *= samples.weights[c] > 0.0 ? 1.0 / std::sqrt(samples.weights[c]) : 0.0;
    Eigen::JacobiSVD<Mat> svd(scaled);
    return svd.singularValues()[0];
}

/// Orthonormalise the columns of y in the weighted sample geometry.
inline Mat orthonormalize_w(const dualdo::SampleSpace& samples, Mat y) {
    for (int j = 0; j < y.cols(); ++j) {
        for (int pass = 0; pass < 2; ++pass)
            for (int k = 0; k < j; ++k) {
                double proj = 0.0;
                for (int q = 0; q < y.rows(); ++q)
                    proj += samples.weights[q] * y(q, j) * y(q, k);
                y.col(j) -= proj * y.col(k);
            }
        double nrm = 0.0;
        for (int q = 0; q < y.rows(); ++q)
            nrm += samples.weights[q] * y(q, j) * y(q, j);
        y.col(j) /= std::sqrt(nrm);
    }
    return y;
}

/// Orthonormalise the columns of u in the h-weighted spatial geometry.
inline Mat orthonormalize_h(const dualdo::SpatialGrid& grid, Mat u) {
    for (int j = 0; j < u.cols(); ++j) {
        for (int pass = 0; pass < 2; ++pass)
            for (int k = 0; k < j; ++k)
                u.col(j) -= brute_inner_h(grid, u.col(j), u.col(k)) * u.col(k);
        u.col(j) /= std::sqrt(brute_inner_h(grid, u.col(j), u.col(j)));
    }
    return u;
}

/// Random valid low-rank state: independent smooth U, exactly orthonormal Y.
inline dualdo::LowRankState random_state(const dualdo::SpatialGrid& grid,
                                         const dualdo::SampleSpace& samples, int s,
                                         std::uint64_t seed, bool orthonormal_u = false) {
    dualdo::Rng rng(seed);
    Mat u(grid.n, s);
    for (int j = 0; j < s; ++j) {
        Vec col = Vec::Zero(grid.n);
        for (int k = 1; k <= s + 3 && k <= grid.n; ++k)
            col += rng.normal() * grid.sine_mode(k);
        u.col(j) = col;
    }
    if (orthonormal_u) u = orthonormalize_h(grid, u);
    dualdo::LowRankState state;
    state.U = u;
    state.Y = orthonormalize_w(samples, rng.normal_mat(samples.q(), s));
    state.t = 0.0;
    return state;
}

/// Constant-coefficient nonlinearity for tests.
inline dualdo::NonlinearitySpec const_nonlinearity(int q, int n, double a, double b,
                                                   double c, dualdo::FTag tag) {
    dualdo::NonlinearitySpec f;
    f.a = Mat::Constant(q, n, a);
    f.b = Mat::Constant(q, n, b);
    f.c = Mat::Constant(q, n, c);
    f.f = tag;
    return f;
}

/// Small fully-populated problem for tests.
inline dualdo::ProblemSpec small_problem(int n, int q, int s, std::uint64_t seed,
                                         dualdo::FTag tag = dualdo::FTag::Identity,
                                         double a = 0.5, double c = 0.2, double nu = 0.05) {
    dualdo::ProblemSpec spec;
    spec.grid = dualdo::SpatialGrid{n, 0.0, 1.0};
    spec.samples = dualdo::SampleSpace::monte_carlo(q, seed);
    spec.nu = nu;
    spec.nonlinearity = const_nonlinearity(q, n, a, 1.0, 0.0, tag);
    // sample-dependent additive noise of low stochastic rank
    const Vec mode = spec.grid.sine_mode(1);
    for (int qq = 0; qq < q; ++qq)
        spec.nonlinearity.c.row(qq) = c * (1.0 + 0.5 * spec.samples.xi[qq]) * mode.transpose();
    const dualdo::LowRankState init = random_state(spec.grid, spec.samples, s, seed + 1);
    spec.u0 = dualdo::reconstruct(init);
    spec.rank = s;
    spec.t_end = 0.1;
    return spec;
}

}  // namespace oracles
