#include "dualdo/reparam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dualdo {

namespace {

constexpr double kSigmaNearSingular = 1e-12;

/// Noise floor for correlation eigenvalues: the eigenproblem works with
/// squared singular values, so eigenvalues at the relative roundoff level of
/// lambda_max are numerically zero and must not survive the square root.
double eig_noise_floor(int dim, double lambda_max) {
    return 8.0 * dim * std::numeric_limits<double>::epsilon() * lambda_max;
}

/// Largest-magnitude entry of each V column made positive, ties at the
/// lowest index; W flipped to keep the product unchanged.
void apply_sign_convention(Mat& V, Mat& W) {
    for (int j = 0; j < V.cols(); ++j) {
        int arg = 0;
        double best = std::abs(V(0, j));
        for (int i = 1; i < V.rows(); ++i) {
            const double a = std::abs(V(i, j));
            if (a > best) {
                best = a;
                arg = i;
            }
        }
        if (V(arg, j) < 0.0) {
            V.col(j) = -V.col(j);
            W.col(j) = -W.col(j);
        }
    }
}

/// Weighted matrix whose plain singular values are the field's.
Mat weighted_matrix(const SpatialGrid& grid, const SampleSpace& samples, const Mat& u) {
    const double sh = std::sqrt(grid.h());
    Mat b = u * sh;
    for (int q = 0; q < b.rows(); ++q) b.row(q) *= std::sqrt(samples.weights[q]);
    return b;
}

struct SpdSqrtPair {
    Mat half;
    Mat inv_half;
};

SpdSqrtPair spd_sqrt_pair(const Mat& m, const char* what) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(m);
    if (!(eig.eigenvalues().minCoeff() > 0.0))
        throw RankDeficientError(std::string(what) + ": matrix not positive definite");
    const Mat& v = eig.eigenvectors();
    const Vec roots = eig.eigenvalues().cwiseSqrt();
    SpdSqrtPair p;
    p.half = v * roots.asDiagonal() * v.transpose();
    p.inv_half = v * roots.cwiseInverse().asDiagonal() * v.transpose();
    return p;
}

}  // namespace

Mat spd_sqrt(const Mat& m) { return spd_sqrt_pair(m, "spd_sqrt").half; }
Mat spd_inv_sqrt(const Mat& m) { return spd_sqrt_pair(m, "spd_inv_sqrt").inv_half; }

Vec correlation_sigmas(const SpatialGrid& grid, const SampleSpace& samples, const Mat& u) {
    const Mat b = weighted_matrix(grid, samples, u);
    const bool spatial_side = grid.n <= samples.q();
    const Mat c = spatial_side ? Mat(b.transpose() * b) : Mat(b * b.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> eig(c);
    const double floor = eig_noise_floor(static_cast<int>(c.rows()),
                                         eig.eigenvalues().maxCoeff());
    Vec s = eig.eigenvalues();
    for (int i = 0; i < s.size(); ++i) s[i] = s[i] > floor ? std::sqrt(s[i]) : 0.0;
    std::sort(s.data(), s.data() + s.size(), std::greater<double>());
    return s;
}

SvdFactors svd_low_rank(const SpatialGrid& grid, const SampleSpace& samples,
                        const Mat& u, int S) {
    if (S < 1) throw DomainError("svd_low_rank: S >= 1 required");
    if (u.rows() != samples.q() || u.cols() != grid.n)
        throw ShapeError("svd_low_rank: field shape mismatch");
    const Mat b = weighted_matrix(grid, samples, u);
    const bool spatial_side = grid.n <= samples.q();
    const Mat c = spatial_side ? Mat(b.transpose() * b) : Mat(b * b.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> eig(c);

    const int m = static_cast<int>(c.rows());
    if (S > m) throw RankDeficientError("svd_low_rank: numerical rank below requested S");
    const double floor = eig_noise_floor(m, eig.eigenvalues().maxCoeff());
    // eigenvalues ascend; take the top S
    Vec sigma(S);
    Mat vecs(m, S);
    for (int j = 0; j < S; ++j) {
        const double lambda = eig.eigenvalues()[m - 1 - j];
        if (!(lambda > floor) || !(lambda > 0.0))
            throw RankDeficientError("svd_low_rank: numerical rank below requested S");
        sigma[j] = std::sqrt(lambda);
        vecs.col(j) = eig.eigenvectors().col(m - 1 - j);
    }

    SvdFactors f;
    f.sigma = sigma;
    if (spatial_side) {
        // eigenvectors live on the spatial side: V_j = v_j / sqrt(h)
        f.V = vecs / std::sqrt(grid.h());
        f.W = Mat(samples.q(), S);
        for (int j = 0; j < S; ++j) {
            // W_j = <u, V_j>_h / sigma_j, exact from the eigen relation
            f.W.col(j) = grid.h() * (u * f.V.col(j)) / sigma[j];
        }
    } else {
        f.W = Mat(samples.q(), S);
        for (int q = 0; q < samples.q(); ++q) {
            const double w = samples.weights[q];
            for (int j = 0; j < S; ++j)
                f.W(q, j) = w > 0.0 ? vecs(q, j) / std::sqrt(w) : 0.0;
        }
        f.V = Mat(grid.n, S);
        for (int j = 0; j < S; ++j) {
            Vec acc = Vec::Zero(grid.n);
            for (int q = 0; q < samples.q(); ++q)
                acc += samples.weights[q] * f.W(q, j) * u.row(q).transpose();
            f.V.col(j) = acc / sigma[j];
        }
    }
    apply_sign_convention(f.V, f.W);
    return f;
}

SvdFactors svd_low_rank(const SpatialGrid& grid, const SampleSpace& samples,
                        const LowRankState& state) {
    const Mat z = gram_matrix(grid, state.U);
    const Mat m = stochastic_gram(samples, state.Y);
    const SpdSqrtPair zs = spd_sqrt_pair(z, "svd_low_rank(state): Gram of U");
    const SpdSqrtPair ms = spd_sqrt_pair(m, "svd_low_rank(state): Gram of Y");
    const Mat core = ms.half * zs.half;
    Eigen::JacobiSVD<Mat> svd(core, Eigen::ComputeFullU | Eigen::ComputeFullV);

    SvdFactors f;
    f.sigma = svd.singularValues();
    if (!(f.sigma[f.sigma.size() - 1] > 0.0))
        throw RankDeficientError("svd_low_rank(state): state is rank deficient");
    f.V = state.U * (zs.inv_half * svd.matrixV());
    f.W = state.Y * (ms.inv_half * svd.matrixU());
    apply_sign_convention(f.V, f.W);
    return f;
}

SvdFactors svd_low_rank(const SpatialGrid& grid, const SampleSpace& samples,
                        const LowRankState& state, int S) {
    if (S < 1 || S > state.rank())
        throw DomainError("svd_low_rank(state, S): S must be in [1, rank]");
    const SvdFactors full = svd_low_rank(grid, samples, state);
    const double floor = eig_noise_floor(state.rank(), full.sigma[0] * full.sigma[0]);
    if (!(full.sigma[S - 1] * full.sigma[S - 1] > floor))
        throw RankDeficientError("svd_low_rank(state, S): numerical rank below requested S");
    SvdFactors out;
    out.V = full.V.leftCols(S);
    out.sigma = full.sigma.head(S);
    out.W = full.W.leftCols(S);
    return out;
}

LowRankState initial_factorize(const SpatialGrid& grid, const SampleSpace& samples,
                               const Mat& u0, int S) {
    const SvdFactors f = svd_low_rank(grid, samples, u0, S);
    LowRankState state;
    state.U = f.V * f.sigma.asDiagonal();
    state.Y = f.W;
    state.t = 0.0;
    return state;
}

OrthogonalPath theta_ode_solve(const SampleSpace& samples, const WPath& path, double orth_tol) {
    const int nodes = static_cast<int>(path.w.size());
    if (nodes < 1 || path.times.size() != nodes)
        throw DomainError("theta_ode_solve: empty or inconsistent path");
    const bool have_dots = !path.wdot.empty();
    if (have_dots && static_cast<int>(path.wdot.size()) != nodes)
        throw DomainError("theta_ode_solve: derivative count mismatch");
    const int s = static_cast<int>(path.w[0].cols());

    for (int k = 0; k < nodes; ++k) {
        if ((stochastic_gram(samples, path.w[k]) - Mat::Identity(s, s)).norm() > orth_tol)
            throw DomainError("theta_ode_solve: non-orthonormal input path at node " +
                              std::to_string(k));
    }

    auto wdot_at = [&](int k) -> Mat {
        if (have_dots) return path.wdot[k];
        if (nodes == 1) return Mat::Zero(path.w[0].rows(), s);
        if (k == 0) return (path.w[1] - path.w[0]) / (path.times[1] - path.times[0]);
        if (k == nodes - 1)
            return (path.w[k] - path.w[k - 1]) / (path.times[k] - path.times[k - 1]);
        return (path.w[k + 1] - path.w[k - 1]) / (path.times[k + 1] - path.times[k - 1]);
    };

    auto coeff_at = [&](int k) -> Mat {
        // E[W Wdot^T]
        return path.w[k].transpose() * (samples.weights.asDiagonal() * wdot_at(k));
    };

    OrthogonalPath out;
    out.times = path.times;
    out.theta.resize(nodes);
    out.theta[0] = Mat::Identity(s, s);
    Mat b_prev = nodes > 0 ? coeff_at(0) : Mat::Zero(s, s);
    for (int k = 0; k + 1 < nodes; ++k) {
        const Mat b_next = coeff_at(k + 1);
        Mat b_mid = 0.5 * (b_prev + b_next);
        b_mid = 0.5 * (b_mid - b_mid.transpose());  // exact skew part keeps Cayley orthogonal
        const double dt = path.times[k + 1] - path.times[k];
        const Mat i = Mat::Identity(s, s);
        const Mat lhs = i + 0.5 * dt * b_mid;
        out.theta[k + 1] = lhs.partialPivLu().solve((i - 0.5 * dt * b_mid) * out.theta[k]);
        b_prev = b_next;
    }
    return out;
}

SvdFactors smooth_svd_step(const SpatialGrid& grid, const SampleSpace& samples,
                           const SvdFactors& factors, const Mat& udot, double dt) {
    const int s = factors.rank();
    if (udot.rows() != samples.q() || udot.cols() != grid.n)
        throw ShapeError("smooth_svd_step: udot shape mismatch");
    if (!(factors.sigma[s - 1] > kSigmaNearSingular * factors.sigma[0]))
        throw RankDeficientError("smooth_svd_step: Sigma near-singular");

    const Mat& V = factors.V;
    const Mat& W = factors.W;
    const Vec& sig = factors.sigma;
    const Vec w = samples.weights;

    const Mat d = udot.transpose() * (w.asDiagonal() * W);  // n x S = E[udot W^T]
    const Mat sigma_dot = grid.h() * (V.transpose() * d);   // S x S
    const Mat d_perp = d - V * (grid.h() * (V.transpose() * d));
    const Mat v_dot = d_perp * sig.cwiseInverse().asDiagonal();

    const Mat c = grid.h() * (udot * V);                    // Q x S = <V, udot>
    const Mat c_perp = c - W * (W.transpose() * (w.asDiagonal() * c));
    const Mat w_dot = c_perp * sig.cwiseInverse().asDiagonal();

    Mat sigma_new = Mat(sig.asDiagonal()) + dt * sigma_dot;
    Mat v_new = V + dt * v_dot;
    Mat w_new = W + dt * w_dot;

    // symmetric re-orthonormalisation, compensating factors absorbed into Sigma
    const Mat gv = gram_matrix(grid, v_new);
    const Mat gw = stochastic_gram(samples, w_new);
    const SpdSqrtPair gvs = spd_sqrt_pair(gv, "smooth_svd_step: V Gram");
    const SpdSqrtPair gws = spd_sqrt_pair(gw, "smooth_svd_step: W Gram");
    v_new = v_new * gvs.inv_half;
    w_new = w_new * gws.inv_half;
    sigma_new = gvs.half * sigma_new * gws.half;

    // re-canonicalise to diagonal Sigma
    Eigen::JacobiSVD<Mat> svd(sigma_new, Eigen::ComputeFullU | Eigen::ComputeFullV);
    SvdFactors out;
    out.V = v_new * svd.matrixU();
    out.W = w_new * svd.matrixV();
    out.sigma = svd.singularValues();
    apply_sign_convention(out.V, out.W);
    return out;
}

}  // namespace dualdo
