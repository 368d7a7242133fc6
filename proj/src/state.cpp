#include "dualdo/state.hpp"

#include <cmath>
#include <limits>

namespace dualdo {

void ProblemSpec::validate() const {
    grid.validate();
    samples.validate();
    nonlinearity.validate();
    if (nu < 0.0) throw DomainError("ProblemSpec: nu >= 0 required");
    if (rank < 1) throw DomainError("ProblemSpec: rank >= 1 required");
    if (t_end < 0.0) throw DomainError("ProblemSpec: t_end >= 0 required");
    if (u0.rows() != samples.q() || u0.cols() != grid.n)
        throw ShapeError("ProblemSpec: u0 shape mismatch");
    if (nonlinearity.a.rows() != samples.q() || nonlinearity.a.cols() != grid.n)
        throw ShapeError("ProblemSpec: nonlinearity coefficient shape mismatch");
}

Mat gram_matrix(const SpatialGrid& grid, const Mat& U) {
    const int s = static_cast<int>(U.cols());
    Mat z(s, s);
    for (int j = 0; j < s; ++j) {
        for (int k = j; k < s; ++k) {
            const double v = inner_h(grid, U.col(j), U.col(k));
            z(j, k) = v;
            z(k, j) = v;
        }
    }
    return z;
}

Mat stochastic_gram(const SampleSpace& samples, const Mat& Y) {
    const int s = static_cast<int>(Y.cols());
    Mat m(s, s);
    for (int j = 0; j < s; ++j) {
        for (int k = j; k < s; ++k) {
            double acc = 0.0;
            for (int q = 0; q < Y.rows(); ++q)
                acc += samples.weights[q] * Y(q, j) * Y(q, k);
            m(j, k) = acc;
            m(k, j) = acc;
        }
    }
    return m;
}

GramDiagnostics gram_u(const SpatialGrid& grid, const LowRankState& state) {
    GramDiagnostics d;
    d.z = gram_matrix(grid, state.U);
    Eigen::SelfAdjointEigenSolver<Mat> eig(d.z);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    d.sigma_min = std::max(0.0, lo);
    d.inv_norm = d.sigma_min > 0.0 ? 1.0 / d.sigma_min
                                   : std::numeric_limits<double>::infinity();
    d.cond = d.sigma_min > 0.0 ? hi / d.sigma_min
                               : std::numeric_limits<double>::infinity();
    return d;
}

double orth_drift(const SampleSpace& samples, const Mat& Y) {
    const int s = static_cast<int>(Y.cols());
    return (stochastic_gram(samples, Y) - Mat::Identity(s, s)).norm();
}

Mat project_y(const SampleSpace& samples, const Mat& f, const Mat& Y, double tau_orth) {
    if (f.rows() != Y.rows() || f.rows() != samples.q())
        throw ShapeError("project_y: sample dimension mismatch");
    const int s = static_cast<int>(Y.cols());
    const Mat m = stochastic_gram(samples, Y);
    if ((m - Mat::Identity(s, s)).norm() > 100.0 * tau_orth)
        throw DomainError("project_y: Y badly non-orthonormal");
    const Mat wf = samples.weights.asDiagonal() * f;      // Q x n
    const Mat coeff = Y.transpose() * wf;                 // S x n
    return Y * m.ldlt().solve(coeff);
}

namespace {

/// H-orthonormal basis of span{U} by modified Gram-Schmidt with a second pass.
Mat mgs_basis_h(const SpatialGrid& grid, const Mat& U) {
    Mat phi = U;
    const int s = static_cast<int>(U.cols());
    for (int j = 0; j < s; ++j) {
        for (int pass = 0; pass < 2; ++pass)
            for (int k = 0; k < j; ++k)
                phi.col(j) -= inner_h(grid, phi.col(j), phi.col(k)) * phi.col(k);
        const double nrm = std::sqrt(inner_h(grid, phi.col(j), phi.col(j)));
        if (!(nrm > 0.0)) throw RankLossError(0.0, 0.0);
        phi.col(j) /= nrm;
    }
    return phi;
}

}  // namespace

Mat project_u(const SpatialGrid& grid, const Mat& f, const Mat& U, double sigma_floor_rel) {
    if (f.cols() != U.rows() || f.cols() != grid.n)
        throw ShapeError("project_u: spatial dimension mismatch");
    const int s = static_cast<int>(U.cols());
    const Mat z = gram_matrix(grid, U);
    Eigen::SelfAdjointEigenSolver<Mat> eig(z);
    const double floor = sigma_floor_rel * z.trace() / s;
    if (!(eig.eigenvalues().minCoeff() > floor)) throw RankLossError(0.0, eig.eigenvalues().minCoeff());
    const Mat phi = mgs_basis_h(grid, U);                 // n x S
    const Mat coeff = grid.h() * (f * phi);               // Q x S
    return coeff * phi.transpose();
}

Mat tangent_project(const SpatialGrid& grid, const SampleSpace& samples,
                    const LowRankState& state, const Mat& f, double sigma_floor_rel) {
    const Mat pu = project_u(grid, f, state.U, sigma_floor_rel);
    const Mat py = project_y(samples, f, state.Y);
    const Mat pupy = project_u(grid, py, state.U, sigma_floor_rel);
    return pu + py - pupy;
}

Mat reconstruct(const LowRankState& state) { return state.Y * state.U.transpose(); }

Mat rhs_g1_from(const SpatialGrid& grid, const SampleSpace& samples,
                const Mat& f_field, const Mat& Y) {
    (void)grid;
    return f_field.transpose() * (samples.weights.asDiagonal() * Y);  // n x S
}

Mat apply_gram_inverse(const Mat& z, const Mat& rhs, double t, double sigma_floor_rel) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(z);
    const int s = static_cast<int>(z.rows());
    const double floor = sigma_floor_rel * z.trace() / s;
    const double lo = eig.eigenvalues().minCoeff();
    if (!(lo > floor)) throw RankLossError(t, std::max(0.0, lo));
    const Mat& v = eig.eigenvectors();
    return v * eig.eigenvalues().cwiseInverse().asDiagonal() * v.transpose() * rhs;
}

Mat rhs_g2_from(const SpatialGrid& grid, const SampleSpace& samples,
                const Mat& f_field, const LowRankState& state, double sigma_floor_rel) {
    const Mat z = gram_matrix(grid, state.U);
    const Mat zinv_ut = apply_gram_inverse(z, state.U.transpose(), state.t, sigma_floor_rel);
    // gamma[q,j] = <F_q, (Z^-1 U)_j>_h
    const Mat gamma = grid.h() * (f_field * zinv_ut.transpose());    // Q x S
    // literal orthonormal-basis projection P_Y g = sum_j E[g Y_j] Y_j
    const Mat e_gy = state.Y.transpose() * (samples.weights.asDiagonal() * gamma);  // S x S
    return gamma - state.Y * e_gy;
}

Mat rhs_g1(const ProblemSpec& spec, const LowRankState& state) {
    const Mat f_field = eval_f_nonlinear(reconstruct(state), spec.nonlinearity);
    return rhs_g1_from(spec.grid, spec.samples, f_field, state.Y);
}

Mat rhs_g2(const ProblemSpec& spec, const LowRankState& state, double sigma_floor_rel) {
    const Mat f_field = eval_f_nonlinear(reconstruct(state), spec.nonlinearity);
    return rhs_g2_from(spec.grid, spec.samples, f_field, state, sigma_floor_rel);
}

double dlr_residual(const ProblemSpec& spec, const LowRankState& s0, const LowRankState& s1) {
    if (!(s1.t > s0.t)) throw DomainError("dlr_residual: snapshots must be time-ordered");
    const Mat u0 = reconstruct(s0);
    const Mat u1 = reconstruct(s1);
    const Mat udot = (u1 - u0) / (s1.t - s0.t);
    const Mat field = apply_lambda_rows(spec.grid, spec.nu, u0) +
                      eval_f_nonlinear(u0, spec.nonlinearity);
    const Mat proj = tangent_project(spec.grid, spec.samples, s0, field);
    return norm_l2omega_h(spec.grid, spec.samples, udot - proj);
}

}  // namespace dualdo
