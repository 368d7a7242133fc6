#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "dualdo/types.hpp"

namespace dualdo {

/// Discrete probability space: Q sample points with weights summing to 1.
/// `xi` holds the coordinate of each sample point in [-1,1]; it is what the
/// problem builders use to materialise random coefficients.
struct SampleSpace {
    Vec xi;       ///< sample point coordinates, length Q
    Vec weights;  ///< probability weights, length Q, >= 0, sum 1

    int q() const { return static_cast<int>(weights.size()); }
    void validate() const;

    /// Uniform-weight Monte Carlo draws xi ~ U(-1,1), seeded.
    static SampleSpace monte_carlo(int q, std::uint64_t seed);
    /// Gauss-Legendre nodes/weights on [-1,1], weights normalised to sum 1.
    static SampleSpace gauss_legendre(int q);
};

/// Uniform 1D grid of n interior nodes on (a,b) with homogeneous Dirichlet
/// boundary; h = (b-a)/(n+1), node i at a+(i+1)h.
struct SpatialGrid {
    int n = 2;
    double a = 0.0;
    double b = 1.0;

    double h() const { return (b - a) / (n + 1); }
    double node(int i) const { return a + (i + 1) * h(); }
    void validate() const;

    /// Discrete sine mode s_k (k = 1..n), unnormalised: s_k[i] = sin(k pi (i+1)/(n+1)).
    Vec sine_mode(int k) const;
    /// Eigenvalue of -d^2/dx^2 for mode k: (4/h^2) sin^2(k pi / (2(n+1))).
    double laplacian_eigenvalue(int k) const;
};

enum class FTag { Identity, Tanh, Sin, Custom };

/// Pointwise nonlinearity F(u)[q,i] = a*f(u*b) + c, with f of bounded slope.
/// Only tags with a known derivative bound are constructible; Custom carries
/// a caller-declared bound.
struct NonlinearitySpec {
    Mat a;  ///< Q x n
    Mat b;  ///< Q x n
    Mat c;  ///< Q x n
    FTag f = FTag::Identity;

    std::function<double(double)> custom_f;
    double custom_lip = 1.0;

    double eval_scalar(double s) const;
    /// sup |f'| for the selected tag.
    double lip_f() const;
    void validate() const;

    static NonlinearitySpec custom(Mat a, Mat b, Mat c,
                                   std::function<double(double)> f, double lip);
};

/// Discrete L2(D) inner product: h * sum_i f_i g_i, summed left to right.
double inner_h(const SpatialGrid& grid, const Vec& f, const Vec& g);

/// Expectation sum_q w_q x_q, summed left to right over samples.
double expect(const SampleSpace& samples, const Vec& x);

/// L2(Omega;H) inner product: expectation over samples of inner_h of rows.
double inner_l2omega_h(const SpatialGrid& grid, const SampleSpace& samples,
                       const Mat& u, const Mat& v);

double norm_l2omega_h(const SpatialGrid& grid, const SampleSpace& samples, const Mat& u);

/// nu * (f_{i-1} - 2 f_i + f_{i+1}) / h^2 with zero Dirichlet neighbours.
Vec apply_lambda(const SpatialGrid& grid, double nu, const Vec& f);

/// apply_lambda on every row of a Q x n field.
Mat apply_lambda_rows(const SpatialGrid& grid, double nu, const Mat& u);

/// apply_lambda on every column of an n x S basis matrix.
Mat apply_lambda_cols(const SpatialGrid& grid, double nu, const Mat& u);

/// Solve (I - alpha*Lambda) f = g by the Thomas algorithm; alpha > 0.
Vec solve_shifted_lambda(const SpatialGrid& grid, double nu, const Vec& g, double alpha);

/// solve_shifted_lambda on every column of an n x S matrix.
Mat solve_shifted_lambda_cols(const SpatialGrid& grid, double nu, const Mat& g, double alpha);

/// F(u) evaluated pointwise in (sample, node). `threads` may split rows;
/// results are bit-identical for any thread count.
Mat eval_f_nonlinear(const Mat& u, const NonlinearitySpec& spec, int threads = 1);

}  // namespace dualdo
