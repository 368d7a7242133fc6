#include "dualdo/reference.hpp"

#include <cmath>
#include <thread>

#include "dualdo/reparam.hpp"

namespace dualdo {

FullOrderStepper::FullOrderStepper(const ProblemSpec& spec, double dt, int threads)
    : spec_(spec), dt_(dt), threads_(threads), u_(spec.u0) {
    if (!(dt > 0.0)) throw DomainError("FullOrderStepper: dt > 0 required");
}

void FullOrderStepper::advance() {
    const Mat f = eval_f_nonlinear(u_, spec_.nonlinearity, threads_);
    Mat rhs = u_ + dt_ * f;
    const int q = static_cast<int>(u_.rows());
    auto solve_rows = [&](int q0, int q1) {
        for (int qq = q0; qq < q1; ++qq) {
            if (spec_.nu > 0.0)
                u_.row(qq) = solve_shifted_lambda(spec_.grid, spec_.nu,
                                                  rhs.row(qq).transpose(), dt_)
                                 .transpose();
            else
                u_.row(qq) = rhs.row(qq);
        }
    };
    const int threads = std::min(std::max(threads_, 1), q);
    if (threads == 1) {
        solve_rows(0, q);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (q + threads - 1) / threads;
        for (int tid = 0; tid < threads; ++tid) {
            const int q0 = tid * chunk;
            const int q1 = std::min(q, q0 + chunk);
            if (q0 >= q1) break;
            pool.emplace_back(solve_rows, q0, q1);
        }
        for (auto& th : pool) th.join();
    }
    if (!all_finite(u_)) throw NonFiniteError("solve_full: non-finite field at t=" +
                                              std::to_string(t_ + dt_));
    ++k_;
    t_ = k_ * dt_;
}

std::vector<Mat> solve_full(const ProblemSpec& spec, double t_end, double dt, int threads) {
    FullOrderStepper stepper(spec, dt, threads);
    std::vector<Mat> series;
    series.push_back(stepper.field());
    const long nsteps = std::lround(t_end / dt);
    for (long k = 0; k < nsteps; ++k) {
        stepper.advance();
        series.push_back(stepper.field());
    }
    return series;
}

double error_l2(const SpatialGrid& grid, const SampleSpace& samples,
                const Mat& u, const Mat& v) {
    if (u.rows() != v.rows() || u.cols() != v.cols())
        throw ShapeError("error_l2: shape mismatch");
    return norm_l2omega_h(grid, samples, u - v);
}

double best_rank_error(const SpatialGrid& grid, const SampleSpace& samples,
                       const Mat& u, int S) {
    const Vec sigmas = correlation_sigmas(grid, samples, u);
    double tail = 0.0;
    // smallest values first for a stable sum
    for (int j = static_cast<int>(sigmas.size()) - 1; j >= S; --j)
        tail += sigmas[j] * sigmas[j];
    return std::sqrt(tail);
}

}  // namespace dualdo
