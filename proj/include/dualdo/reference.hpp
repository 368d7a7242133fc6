#pragma once

#include <vector>

#include "dualdo/state.hpp"

namespace dualdo {

/// Advances every sample's spatial trajectory independently with the same
/// IMEX Euler discretisation the low-rank integrator uses; the ground truth
/// every accuracy claim is measured against.
class FullOrderStepper {
public:
    FullOrderStepper(const ProblemSpec& spec, double dt, int threads = 1);

    const Mat& field() const { return u_; }
    double t() const { return t_; }

    /// One IMEX Euler step on all samples.
    void advance();

private:
    const ProblemSpec& spec_;
    double dt_;
    int threads_;
    Mat u_;
    double t_ = 0.0;
    long k_ = 0;
};

/// Full time series (one field per step, including t=0).
std::vector<Mat> solve_full(const ProblemSpec& spec, double t_end, double dt,
                            int threads = 1);

/// sqrt(<u-v, u-v>) in L2(Omega;H).
double error_l2(const SpatialGrid& grid, const SampleSpace& samples,
                const Mat& u, const Mat& v);

/// Unimprovable rank-S error: the singular-value tail sqrt(sum_{j>S} sigma_j^2)
/// of the field's correlation spectrum.
double best_rank_error(const SpatialGrid& grid, const SampleSpace& samples,
                       const Mat& u, int S);

}  // namespace dualdo
