#include "dualdo/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "dualdo/rng.hpp"

namespace dualdo {

namespace {

constexpr double kRelSlack = 1e-12;
constexpr double kAbsSlack = 1e-12;
constexpr double kNormEqTol = 1e-8;

bool holds(double lhs, double rhs) { return lhs <= rhs * (1.0 + kRelSlack) + kAbsSlack; }

TrialRow make_row(std::string check, std::uint64_t seed, double lhs, double rhs) {
    TrialRow r;
    r.check = std::move(check);
    r.seed = seed;
    r.lhs = lhs;
    r.rhs = rhs;
    r.margin = rhs - lhs;
    r.pass = holds(lhs, rhs);
    return r;
}

/// Exact span projection of the columns of x onto span{W} in the weighted
/// sample geometry (works for non-orthonormal W).
Mat span_project(const SampleSpace& samples, const Mat& w, const Mat& x) {
    const Mat gram = w.transpose() * (samples.weights.asDiagonal() * w);
    const Mat coeff = w.transpose() * (samples.weights.asDiagonal() * x);
    return w * gram.ldlt().solve(coeff);
}

double wdot(const SampleSpace& samples, const Vec& x, const Vec& y) {
    double acc = 0.0;
    for (int q = 0; q < x.size(); ++q) acc += samples.weights[q] * x[q] * y[q];
    return acc;
}

/// Power iteration for the operator norm of T on the weighted sample space:
/// iterate x <- T*(T x) for the direction, but report ||T x||_w / ||x||_w
/// through the half-map so that norms far below sqrt(eps) remain measurable.
/// `start` should lie in the iteration's invariant subspace; convergence is
/// then governed by the few active singular values only.
template <typename OpT, typename OpTstar>
double power_norm(const SampleSpace& samples, const Vec& start, OpT&& apply_t,
                  OpTstar&& apply_tstar) {
    Vec x = start;
    {
        const double nrm = std::sqrt(std::max(0.0, wdot(samples, x, x)));
        if (nrm <= 1e-300) return 0.0;
        x /= nrm;
    }
    double estimate = 0.0;
    for (int it = 0; it < 100000; ++it) {
        const Vec tx = apply_t(x);
        const double next = std::sqrt(std::max(0.0, wdot(samples, tx, tx)));
        const bool settled =
            it > 4 && std::abs(next - estimate) <= 5e-17 * std::max(1.0, next);
        estimate = next;
        if (settled) break;
        Vec z = apply_tstar(tx);
        const double nrm = std::sqrt(std::max(0.0, wdot(samples, z, z)));
        if (nrm <= 1e-300) break;  // landed in the kernel; the estimate stands
        x = z / nrm;
    }
    return estimate;
}

double hmax(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

/// 2-norm of a small symmetric matrix.
double sym_norm2(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(m);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

Mat gram_inverse_dense(const SpatialGrid& grid, const Mat& u) {
    const Mat z = gram_matrix(grid, u);
    Eigen::SelfAdjointEigenSolver<Mat> eig(z);
    if (!(eig.eigenvalues().minCoeff() > 0.0))
        throw RankDeficientError("gram inverse: basis linearly dependent");
    const Mat& v = eig.eigenvectors();
    return v * eig.eigenvalues().cwiseInverse().asDiagonal() * v.transpose();
}

}  // namespace

int CheckReport::violations() const {
    int k = 0;
    for (const auto& r : rows)
        if (!r.pass) ++k;
    return k;
}

void write_reports_csv(std::ostream& os, std::span<const CheckReport> reports) {
    os << "check,seed,lhs,rhs,margin,pass\n";
    char buf[256];
    for (const auto& rep : reports) {
        for (const auto& r : rep.rows) {
            std::snprintf(buf, sizeof(buf), "%s,%llu,%.17g,%.17g,%.17g,%d\n", r.check.c_str(),
                          static_cast<unsigned long long>(r.seed), r.lhs, r.rhs, r.margin,
                          r.pass ? 1 : 0);
            os << buf;
        }
    }
}

double basis_norm_h(const SpatialGrid& grid, const Mat& u) {
    return std::sqrt(grid.h()) * u.norm();
}

double tuple_norm_w(const SampleSpace& samples, const Mat& y) {
    double acc = 0.0;
    for (int j = 0; j < y.cols(); ++j) acc += wdot(samples, y.col(j), y.col(j));
    return std::sqrt(acc);
}

double projector_deficiency_norm(const SampleSpace& samples, const Mat& w, const Mat& wp,
                                 std::uint64_t seed) {
    // T = (I-P')P with adjoint P(I-P'); the iteration lives in span{W},
    // an S-dimensional invariant subspace.
    auto apply_t = [&](const Vec& x) -> Vec {
        Mat px = span_project(samples, w, x);
        return (px - span_project(samples, wp, px)).col(0);
    };
    auto apply_tstar = [&](const Vec& x) -> Vec {
        Mat mid = x - span_project(samples, wp, x);
        return span_project(samples, w, mid).col(0);
    };
    Rng rng(seed);
    const Vec start = span_project(samples, w, Mat(rng.normal_vec(samples.q()))).col(0);
    return power_norm(samples, start, apply_t, apply_tstar);
}

double projector_diff_norm(const SampleSpace& samples, const Mat& w, const Mat& wp,
                           std::uint64_t seed) {
    // T = P - P' is self-adjoint in the w geometry
    auto diff = [&](const Vec& x) -> Vec {
        return (span_project(samples, w, x) - span_project(samples, wp, x)).col(0);
    };
    Rng rng(seed);
    const Mat r = rng.normal_vec(samples.q());
    const Vec start =
        (span_project(samples, w, r) + span_project(samples, wp, r)).col(0);
    return power_norm(samples, start, diff, diff);
}

namespace {

struct WedinSetup {
    double sigma_yhat = 0.0;
    double kappa_bar = 0.0;
    double c_bound = 0.0;
    bool precond_ok = true;
    std::string note;
};

WedinSetup wedin_setup(const SampleSpace& samples, const Mat& y_hat, const Mat& w,
                       const Mat& wp, double beta, double kappa) {
    WedinSetup s;
    const Mat gram = y_hat.transpose() * (samples.weights.asDiagonal() * y_hat);
    Eigen::SelfAdjointEigenSolver<Mat> eig(gram);
    s.sigma_yhat = eig.eigenvalues().minCoeff();
    s.kappa_bar = 0.5 * (-beta + std::sqrt(beta * beta + s.sigma_yhat));
    s.c_bound = 2.0 * (kappa + beta) / s.sigma_yhat;
    if (!(s.sigma_yhat > 0.0)) {
        s.precond_ok = false;
        s.note = "sigma_yhat not positive";
    } else if (tuple_norm_w(samples, y_hat) > beta) {
        s.precond_ok = false;
        s.note = "beta below ||Y_hat||";
    } else if (!(kappa < s.kappa_bar)) {
        s.precond_ok = false;
        s.note = "kappa >= kappa_bar";
    } else if (tuple_norm_w(samples, w - y_hat) > kappa ||
               tuple_norm_w(samples, wp - y_hat) > kappa) {
        s.precond_ok = false;
        s.note = "perturbation exceeds kappa";
    }
    return s;
}

}  // namespace

CheckReport check_wedin(const SampleSpace& samples, const Mat& y_hat, const Mat& w,
                        const Mat& wp, double beta, double kappa, std::uint64_t seed) {
    CheckReport rep;
    rep.name = "wedin";
    const WedinSetup s = wedin_setup(samples, y_hat, w, wp, beta, kappa);
    rep.precond_ok = s.precond_ok;
    rep.note = s.note;
    if (!s.precond_ok) return rep;

    const double lhs = projector_deficiency_norm(samples, w, wp, seed + 1);
    const double rhs = s.c_bound * tuple_norm_w(samples, w - wp);
    rep.rows.push_back(make_row("wedin/bound", seed, lhs, rhs));
    rep.rows.push_back(make_row("wedin/below_one", seed, rhs, 1.0));
    // the second inequality of the lemma is strict
    if (!(rhs < 1.0)) rep.rows.back().pass = false;
    return rep;
}

CheckReport check_proj_lipschitz(const SampleSpace& samples, const Mat& y_hat, const Mat& w,
                                 const Mat& wp, double beta, double kappa,
                                 std::uint64_t seed) {
    CheckReport rep;
    rep.name = "proj_lipschitz";
    const WedinSetup s = wedin_setup(samples, y_hat, w, wp, beta, kappa);
    rep.precond_ok = s.precond_ok;
    rep.note = s.note;
    if (!s.precond_ok) return rep;

    const double n_diff = projector_diff_norm(samples, w, wp, seed + 1);
    const double n_def = projector_deficiency_norm(samples, w, wp, seed + 2);
    const double rhs = s.c_bound * tuple_norm_w(samples, w - wp);
    rep.rows.push_back(make_row("proj_lipschitz/bound", seed, n_diff, rhs));
    rep.rows.push_back(make_row("proj_lipschitz/norm_eq", seed, std::abs(n_diff - n_def),
                                kNormEqTol));
    return rep;
}

CheckReport check_gram_inv_lipschitz(const SpatialGrid& grid, const Mat& u, const Mat& up,
                                     double alpha_tilde, std::uint64_t seed) {
    CheckReport rep;
    rep.name = "gram_inv_lipschitz";
    if (basis_norm_h(grid, u) > alpha_tilde || basis_norm_h(grid, up) > alpha_tilde) {
        rep.precond_ok = false;
        rep.note = "basis norm exceeds alpha_tilde";
        return rep;
    }
    const int s = static_cast<int>(u.cols());
    Mat zi, zpi;
    try {
        zi = gram_inverse_dense(grid, u);
        zpi = gram_inverse_dense(grid, up);
    } catch (const RankDeficientError&) {
        rep.precond_ok = false;
        rep.note = "basis linearly dependent";
        return rep;
    }
    const double lhs = sym_norm2(zi - zpi);
    const double c = 4.0 * std::sqrt(double(s)) * alpha_tilde;
    const double rhs = c * (sym_norm2(zi) * sym_norm2(zi) + sym_norm2(zpi) * sym_norm2(zpi)) *
                       basis_norm_h(grid, u - up);
    rep.rows.push_back(make_row("gram_inv_lipschitz/bound", seed, lhs, rhs));
    return rep;
}

GrowthConstants derive_growth_constants(const ProblemSpec& spec) {
    GrowthConstants g;
    const NonlinearitySpec& f = spec.nonlinearity;
    const double a_sup = hmax(f.a);
    const double b_sup = hmax(f.b);
    const double f0 = std::abs(f.eval_scalar(0.0));
    const Mat affine = f.a.cwiseAbs() * f0 + f.c.cwiseAbs();
    const double k0 = norm_l2omega_h(spec.grid, spec.samples, affine);
    g.c_prime_f = std::max(k0, a_sup * b_sup * f.lip_f());
    g.c_lambda_f = 1.5 * g.c_prime_f;

    bool b_const = true;
    const double b00 = f.b(0, 0);
    for (int q = 0; q < f.b.rows() && b_const; ++q)
        for (int i = 0; i < f.b.cols(); ++i)
            if (f.b(q, i) != b00) {
                b_const = false;
                break;
            }
    bool a_row_const = true;
    for (int q = 0; q < f.a.rows() && a_row_const; ++q)
        for (int i = 1; i < f.a.cols(); ++i)
            if (f.a(q, i) != f.a(q, 0)) {
                a_row_const = false;
                break;
            }
    g.classical_available = (f.f == FTag::Identity) && b_const && a_row_const;
    if (g.classical_available) {
        const Mat lc = apply_lambda_rows(spec.grid, spec.nu, f.c);
        g.c_f = std::max(a_sup * std::abs(b00),
                         norm_l2omega_h(spec.grid, spec.samples, lc));
    }
    g.k_lambda = 1.0;
    return g;
}

CheckReport check_stability(const ProblemSpec& spec, int trials, std::uint64_t seed) {
    CheckReport rep;
    rep.name = "stability";
    const GrowthConstants g = derive_growth_constants(spec);
    const int q = spec.samples.q();
    const int n = spec.grid.n;
    Rng rng(seed);

    auto lhs_of = [&](const Mat& v) {
        const Mat field = apply_lambda_rows(spec.grid, spec.nu, v) +
                          eval_f_nonlinear(v, spec.nonlinearity);
        return inner_l2omega_h(spec.grid, spec.samples, field, v);
    };
    auto rhs_of = [&](const Mat& v) {
        const double nrm = norm_l2omega_h(spec.grid, spec.samples, v);
        return g.c_lambda_f * (1.0 + nrm * nrm);
    };

    const double scales[3] = {0.1, 1.0, 10.0};
    for (int tr = 0; tr < trials; ++tr) {
        Mat v;
        if (tr % 3 == 2) {
            // Lambda-rough field: white noise across nodes
            v = rng.normal_mat(q, n);
        } else {
            // smooth field: a few low sine modes with random stochastic factors
            v = Mat::Zero(q, n);
            for (int k = 1; k <= 4; ++k) {
                const Vec mode = spec.grid.sine_mode(k);
                const Vec coeff = rng.normal_vec(q);
                v += coeff * mode.transpose();
            }
        }
        v *= scales[tr % 3];
        rep.rows.push_back(make_row("stability/random", seed + tr, lhs_of(v), rhs_of(v)));
    }

    // directed sweep along the additive-noise direction
    const double c_norm = norm_l2omega_h(spec.grid, spec.samples, spec.nonlinearity.c);
    if (c_norm > 0.0) {
        const Mat dir = spec.nonlinearity.c / c_norm;
        for (int k = 0; k < 13; ++k) {
            const double s = std::pow(10.0, -2.0 + k / 3.0);
            const Mat v = s * dir;
            rep.rows.push_back(make_row("stability/adversarial", seed + 1000 + k,
                                        lhs_of(v), rhs_of(v)));
        }
    }
    return rep;
}

CheckReport check_growth_bounds(const ProblemSpec& spec, const Trajectory& traj,
                                const GrowthConstants& constants) {
    CheckReport rep;
    rep.name = "growth_bounds";
    if (traj.snapshots.empty()) {
        rep.precond_ok = false;
        rep.note = "empty trajectory";
        return rep;
    }
    const double u0_norm = basis_norm_h(spec.grid, traj.snapshots.front().U);
    const double lu0_norm = basis_norm_h(
        spec.grid, apply_lambda_cols(spec.grid, spec.nu, traj.snapshots.front().U));
    const double c = constants.c_lambda_f;
    const double root_s = std::sqrt(double(traj.snapshots.front().rank()));

    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        const auto& snap = traj.snapshots[k];
        const double t = snap.t;
        const double e1 = std::sqrt(2.0 * c) * std::sqrt(t) + u0_norm * std::exp(c * t);
        rep.rows.push_back(
            make_row("growth/u_envelope", k, basis_norm_h(spec.grid, snap.U), e1));
        if (constants.classical_available) {
            const double kl = constants.k_lambda;
            const double e2 = kl * (lu0_norm + t * constants.c_f * root_s) *
                              std::exp(kl * constants.c_f * t);
            const double lu = basis_norm_h(
                spec.grid, apply_lambda_cols(spec.grid, spec.nu, snap.U));
            rep.rows.push_back(make_row("growth/lambda_u_envelope", k, lu, e2));
        }
    }
    return rep;
}

namespace {

/// Y_hat with prescribed Gram spectrum, plus two admissible perturbations.
struct WedinInstance {
    Mat y_hat, w, wp;
    double beta = 0.0, kappa = 0.0;
};

WedinInstance make_wedin_instance(const SampleSpace& samples, int s, Rng& rng,
                                  double kappa_fraction) {
    const int q = samples.q();
    WedinInstance inst;
    // orthonormal base scaled to Gram eigenvalues in [0.3, 2]
    Mat raw = rng.normal_mat(q, s);
    // weighted Gram-Schmidt
    Mat y0 = raw;
    for (int j = 0; j < s; ++j) {
        for (int k = 0; k < j; ++k) {
            double proj = 0.0;
            for (int qq = 0; qq < q; ++qq)
                proj += samples.weights[qq] * y0(qq, j) * y0(qq, k);
            y0.col(j) -= proj * y0.col(k);
        }
        double nrm = 0.0;
        for (int qq = 0; qq < q; ++qq)
            nrm += samples.weights[qq] * y0(qq, j) * y0(qq, j);
        y0.col(j) /= std::sqrt(nrm);
    }
    Vec eigs(s);
    for (int j = 0; j < s; ++j) eigs[j] = rng.uniform(0.3, 2.0);
    inst.y_hat = y0 * eigs.cwiseSqrt().asDiagonal();
    inst.beta = tuple_norm_w(samples, inst.y_hat) * (1.0 + 1e-12);
    const double sigma = eigs.minCoeff();
    const double kappa_bar = 0.5 * (-inst.beta + std::sqrt(inst.beta * inst.beta + sigma));
    inst.kappa = kappa_fraction * kappa_bar;

    auto perturb = [&](double scale) {
        Mat e = rng.normal_mat(q, s);
        const double nrm = tuple_norm_w(samples, e);
        return Mat(inst.y_hat + e * (scale * inst.kappa / nrm));
    };
    inst.w = perturb(rng.uniform(0.1, 0.999));
    inst.wp = perturb(rng.uniform(0.1, 0.999));
    return inst;
}

}  // namespace

CheckReport run_wedin_campaign(int q, int s, int trials, std::uint64_t seed) {
    CheckReport rep;
    rep.name = "wedin_campaign";
    const SampleSpace samples = SampleSpace::monte_carlo(q, seed + 99);
    for (int tr = 0; tr < trials; ++tr) {
        Rng rng(seed + tr);
        const WedinInstance inst = make_wedin_instance(samples, s, rng, 0.5);
        CheckReport one = check_wedin(samples, inst.y_hat, inst.w, inst.wp, inst.beta,
                                      inst.kappa, seed + tr);
        if (!one.precond_ok) {
            rep.precond_ok = false;
            rep.note = one.note;
        }
        rep.rows.insert(rep.rows.end(), one.rows.begin(), one.rows.end());
    }
    return rep;
}

CheckReport run_proj_lipschitz_campaign(int q, int s, int trials, std::uint64_t seed) {
    CheckReport rep;
    rep.name = "proj_lipschitz_campaign";
    const SampleSpace samples = SampleSpace::monte_carlo(q, seed + 99);
    for (int tr = 0; tr < trials; ++tr) {
        Rng rng(seed + tr);
        const WedinInstance inst = make_wedin_instance(samples, s, rng, 0.5);
        CheckReport one = check_proj_lipschitz(samples, inst.y_hat, inst.w, inst.wp,
                                               inst.beta, inst.kappa, seed + tr);
        if (!one.precond_ok) {
            rep.precond_ok = false;
            rep.note = one.note;
        }
        rep.rows.insert(rep.rows.end(), one.rows.begin(), one.rows.end());
    }
    return rep;
}

CheckReport run_gram_lipschitz_campaign(const SpatialGrid& grid, int s, int trials,
                                        std::uint64_t seed) {
    CheckReport rep;
    rep.name = "gram_lipschitz_campaign";
    for (int tr = 0; tr < trials; ++tr) {
        Rng rng(seed + tr);
        // three conditioning levels: healthy, correlated, near-parallel columns
        Mat u(grid.n, s);
        for (int j = 0; j < s; ++j) {
            Vec col = Vec::Zero(grid.n);
            for (int k = 1; k <= s + 2; ++k) col += rng.normal() * grid.sine_mode(k);
            u.col(j) = col;
        }
        const int level = tr % 3;
        if (level == 1)
            for (int j = 1; j < s; ++j) u.col(j) = 0.8 * u.col(0) + 0.2 * u.col(j);
        if (level == 2)
            for (int j = 1; j < s; ++j) u.col(j) = u.col(0) + 1e-3 * u.col(j);
        const double delta = std::pow(10.0, rng.uniform(-6.0, -1.0));
        Mat up = u + delta * rng.normal_mat(grid.n, s);
        const double alpha =
            std::max(basis_norm_h(grid, u), basis_norm_h(grid, up)) * (1.0 + 1e-12);
        CheckReport one = check_gram_inv_lipschitz(grid, u, up, alpha, seed + tr);
        if (!one.precond_ok) {
            rep.precond_ok = false;
            rep.note = one.note;
        }
        rep.rows.insert(rep.rows.end(), one.rows.begin(), one.rows.end());
    }
    return rep;
}

CheckReport run_stability_campaign(const ProblemSpec& spec, int trials, std::uint64_t seed) {
    CheckReport rep = check_stability(spec, trials, seed);
    rep.name = "stability_campaign";
    return rep;
}

}  // namespace dualdo
