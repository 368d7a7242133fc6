#include "dualdo/ambient.hpp"

#include <cmath>
#include <thread>
#include <vector>

#include "dualdo/rng.hpp"

namespace dualdo {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;

void check_same_size(const Vec& f, const Vec& g, const char* what) {
    if (f.size() != g.size()) throw ShapeError(std::string(what) + ": length mismatch");
}
}  // namespace

void SampleSpace::validate() const {
    if (q() < 1) throw DomainError("SampleSpace: Q >= 1 required");
    if (xi.size() != weights.size()) throw ShapeError("SampleSpace: xi/weights length mismatch");
    double sum = 0.0;
    for (int i = 0; i < weights.size(); ++i) {
        if (weights[i] < 0.0) throw DomainError("SampleSpace: negative weight");
        sum += weights[i];
    }
    if (std::abs(sum - 1.0) > 1e-14) throw DomainError("SampleSpace: weights must sum to 1");
}

SampleSpace SampleSpace::monte_carlo(int q, std::uint64_t seed) {
    if (q < 1) throw DomainError("SampleSpace: Q >= 1 required");
    SampleSpace s;
    s.xi = Vec(q);
    Rng rng(seed);
    for (int i = 0; i < q; ++i) s.xi[i] = rng.uniform(-1.0, 1.0);
    s.weights = Vec::Constant(q, 1.0 / q);
    s.weights /= s.weights.sum();
    return s;
}

SampleSpace SampleSpace::gauss_legendre(int q) {
    if (q < 1) throw DomainError("SampleSpace: Q >= 1 required");
    SampleSpace s;
    s.xi = Vec(q);
    s.weights = Vec(q);
    // Newton iteration on P_q with the Chebyshev initial guess.
    for (int i = 0; i < q; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (q + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= q; ++k) {
                const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = q * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        s.xi[q - 1 - i] = x;
        s.weights[q - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    if (q == 1) {
        s.xi[0] = 0.0;
        s.weights[0] = 2.0;
    }
    s.weights /= s.weights.sum();
    return s;
}

void SpatialGrid::validate() const {
    if (n < 2) throw DomainError("SpatialGrid: n >= 2 required");
    if (!(b > a)) throw DomainError("SpatialGrid: domain must satisfy b > a");
}

Vec SpatialGrid::sine_mode(int k) const {
    Vec s(n);
    for (int i = 0; i < n; ++i) s[i] = std::sin(k * kPi * (i + 1) / double(n + 1));
    return s;
}

double SpatialGrid::laplacian_eigenvalue(int k) const {
    const double s = std::sin(k * kPi / (2.0 * (n + 1)));
    return 4.0 / (h() * h()) * s * s;
}

double NonlinearitySpec::eval_scalar(double s) const {
    switch (f) {
        case FTag::Identity: return s;
        case FTag::Tanh: return std::tanh(s);
        case FTag::Sin: return std::sin(s);
        case FTag::Custom: return custom_f(s);
    }
    return s;
}

double NonlinearitySpec::lip_f() const {
    switch (f) {
        case FTag::Identity:
        case FTag::Tanh:
        case FTag::Sin: return 1.0;
        case FTag::Custom: return custom_lip;
    }
    return 1.0;
}

void NonlinearitySpec::validate() const {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != c.rows() ||
        a.cols() != c.cols())
        throw ShapeError("NonlinearitySpec: a/b/c shape mismatch");
    if (!all_finite(a) || !all_finite(b) || !all_finite(c))
        throw DomainError("NonlinearitySpec: non-finite coefficient");
    if (f == FTag::Custom) {
        if (!custom_f) throw DomainError("NonlinearitySpec: custom f missing");
        if (!(custom_lip > 0.0) || !std::isfinite(custom_lip))
            throw DomainError("NonlinearitySpec: custom derivative bound must be finite and > 0");
    }
}

NonlinearitySpec NonlinearitySpec::custom(Mat a, Mat b, Mat c,
                                          std::function<double(double)> fn, double lip) {
    NonlinearitySpec s;
    s.a = std::move(a);
    s.b = std::move(b);
    s.c = std::move(c);
    s.f = FTag::Custom;
    s.custom_f = std::move(fn);
    s.custom_lip = lip;
    s.validate();
    return s;
}

double inner_h(const SpatialGrid& grid, const Vec& f, const Vec& g) {
    check_same_size(f, g, "inner_h");
    if (f.size() != grid.n) throw ShapeError("inner_h: field/grid size mismatch");
    double acc = 0.0;
    for (int i = 0; i < f.size(); ++i) acc += f[i] * g[i];
    return grid.h() * acc;
}

double expect(const SampleSpace& samples, const Vec& x) {
    if (x.size() != samples.weights.size()) throw ShapeError("expect: length mismatch");
    double acc = 0.0;
    for (int q = 0; q < x.size(); ++q) acc += samples.weights[q] * x[q];
    return acc;
}

double inner_l2omega_h(const SpatialGrid& grid, const SampleSpace& samples,
                       const Mat& u, const Mat& v) {
    if (u.rows() != v.rows() || u.cols() != v.cols())
        throw ShapeError("inner_l2omega_h: shape mismatch");
    if (u.rows() != samples.q() || u.cols() != grid.n)
        throw ShapeError("inner_l2omega_h: field/grid shape mismatch");
    double acc = 0.0;
    for (int q = 0; q < u.rows(); ++q) {
        double row = 0.0;
        for (int i = 0; i < u.cols(); ++i) row += u(q, i) * v(q, i);
        acc += samples.weights[q] * row;
    }
    return grid.h() * acc;
}

double norm_l2omega_h(const SpatialGrid& grid, const SampleSpace& samples, const Mat& u) {
    return std::sqrt(std::max(0.0, inner_l2omega_h(grid, samples, u, u)));
}

Vec apply_lambda(const SpatialGrid& grid, double nu, const Vec& f) {
    if (f.size() != grid.n) throw ShapeError("apply_lambda: field/grid size mismatch");
    const double c = nu / (grid.h() * grid.h());
    const int n = grid.n;
    Vec out(n);
    for (int i = 0; i < n; ++i) {
        const double left = (i > 0) ? f[i - 1] : 0.0;
        const double right = (i + 1 < n) ? f[i + 1] : 0.0;
        out[i] = c * (left - 2.0 * f[i] + right);
    }
    return out;
}

Mat apply_lambda_rows(const SpatialGrid& grid, double nu, const Mat& u) {
    Mat out(u.rows(), u.cols());
    for (int q = 0; q < u.rows(); ++q)
        out.row(q) = apply_lambda(grid, nu, u.row(q).transpose()).transpose();
    return out;
}

Mat apply_lambda_cols(const SpatialGrid& grid, double nu, const Mat& u) {
    Mat out(u.rows(), u.cols());
    for (int j = 0; j < u.cols(); ++j) out.col(j) = apply_lambda(grid, nu, u.col(j));
    return out;
}

Vec solve_shifted_lambda(const SpatialGrid& grid, double nu, const Vec& g, double alpha) {
    if (!(alpha > 0.0)) throw DomainError("solve_shifted_lambda: alpha > 0 required");
    if (g.size() != grid.n) throw ShapeError("solve_shifted_lambda: field/grid size mismatch");
    const int n = grid.n;
    const double r = alpha * nu / (grid.h() * grid.h());
    const double diag = 1.0 + 2.0 * r;
    const double off = -r;
    // Thomas forward sweep; the matrix is SPD and diagonally dominant.
    Vec cp(n), dp(n);
    cp[0] = off / diag;
    dp[0] = g[0] / diag;
    for (int i = 1; i < n; ++i) {
        const double m = diag - off * cp[i - 1];
        cp[i] = off / m;
        dp[i] = (g[i] - off * dp[i - 1]) / m;
    }
    Vec f(n);
    f[n - 1] = dp[n - 1];
    for (int i = n - 2; i >= 0; --i) f[i] = dp[i] - cp[i] * f[i + 1];
    return f;
}

Mat solve_shifted_lambda_cols(const SpatialGrid& grid, double nu, const Mat& g, double alpha) {
    Mat out(g.rows(), g.cols());
    for (int j = 0; j < g.cols(); ++j)
        out.col(j) = solve_shifted_lambda(grid, nu, g.col(j), alpha);
    return out;
}

Mat eval_f_nonlinear(const Mat& u, const NonlinearitySpec& spec, int threads) {
    if (u.rows() != spec.a.rows() || u.cols() != spec.a.cols())
        throw ShapeError("eval_f_nonlinear: field/coefficient shape mismatch");
    const int q = static_cast<int>(u.rows());
    Mat out(u.rows(), u.cols());
    auto eval_rows = [&](int q0, int q1) {
        for (int qq = q0; qq < q1; ++qq)
            for (int i = 0; i < u.cols(); ++i)
                out(qq, i) = spec.a(qq, i) * spec.eval_scalar(u(qq, i) * spec.b(qq, i)) +
                             spec.c(qq, i);
    };
    threads = std::min(std::max(threads, 1), q);
    if (threads == 1) {
        eval_rows(0, q);
        return out;
    }
    // Rows are partitioned with disjoint writes; values do not depend on the split.
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const int chunk = (q + threads - 1) / threads;
    for (int tid = 0; tid < threads; ++tid) {
        const int q0 = tid * chunk;
        const int q1 = std::min(q, q0 + chunk);
        if (q0 >= q1) break;
        pool.emplace_back(eval_rows, q0, q1);
    }
    for (auto& th : pool) th.join();
    return out;
}

}  // namespace dualdo
