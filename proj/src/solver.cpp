#include "sbd/solver.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

namespace sbd {

namespace {

// Conjugate gradients on the normal equations, warm started at x.
template <typename Apply, typename Adjoint>
CVec cgls(const Apply& apply, const Adjoint& adjoint, const CVec& b, CVec x, double tol, int max_iters) {
    CVec r = b - apply(x);
    CVec s = adjoint(r);
    const double target = tol * std::max(adjoint(b).norm(), 1e-300);
    CVec p = s;
    double gamma = s.squaredNorm();
    for (int it = 0; it < max_iters && std::sqrt(gamma) > target; ++it) {
        const CVec q = apply(p);
        const double qq = q.squaredNorm();
        if (qq == 0.0) break;
        const double alpha = gamma / qq;
        x += alpha * p;
        r -= alpha * q;
        s = adjoint(r);
        const double next = s.squaredNorm();
        if (!std::isfinite(next) || !x.allFinite())
            throw NumericError("recover: least-squares solve broke down", x);
        p = s + (next / gamma) * p;
        gamma = next;
    }
    return x;
}

std::vector<bool> support_mask(const CVec& x) {
    std::vector<bool> mask(static_cast<std::size_t>(x.size()), false);
    for (Eigen::Index i : support(x)) mask[static_cast<std::size_t>(i)] = true;
    return mask;
}

CVec masked(CVec x, const std::vector<bool>& mask) {
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (!mask[static_cast<std::size_t>(i)]) x(i) = 0.0;
    return x;
}

CVec flatten_through_dictionary(const Ensemble& ens, Side side, const CVec& x, double mu) {
    const CVec image = side == Side::left ? ens.apply_phi(x) : ens.apply_psi(x);
    const CVec flat = project_flat(Signal(image), mu).entries();
    const auto& dict = side == Side::left ? ens.phi() : ens.psi();
    if (!dict) return flat;
    return dict->partialPivLu().solve(flat);
}

void check_measurements(const Ensemble& ens, const CVec& b) {
    if (b.size() != ens.m())
        throw ValidationError("b has length " + std::to_string(b.size()) + ", expected m = " +
                              std::to_string(ens.m()));
    if (!b.allFinite()) throw ValidationError("b must be finite");
}

}  // namespace

void SolveOptions::validate(Eigen::Index n) const {
    if (max_outer_iters < 1) throw ValidationError("max_outer_iters must be at least 1");
    if (inner_max_iters < 1) throw ValidationError("inner_max_iters must be at least 1");
    if (!(inner_tol > 0.0)) throw ValidationError("inner_tol must be positive");
    if (!(outer_tol > 0.0)) throw ValidationError("outer_tol must be positive");
    if (s1 < 1 || s1 > n) throw ValidationError("s1 must lie in [1, n]");
    if (s2 < 1 || s2 > n) throw ValidationError("s2 must lie in [1, n]");
    if (enforce_flatness) {
        const auto ok = [n](const std::optional<double>& mu) {
            return mu && *mu >= 1.0 && *mu <= static_cast<double>(n);
        };
        if (!ok(mu1)) throw ValidationError("enforce_flatness needs mu1 in [1, n]");
        if (!ok(mu2)) throw ValidationError("enforce_flatness needs mu2 in [1, n]");
    }
}

namespace {

// Energy of the k largest-modulus entries of each row (or column).
std::vector<Eigen::Index> top_lines(const CMat& a, Eigen::Index keep, Eigen::Index k, bool rows) {
    const Eigen::Index count = rows ? a.rows() : a.cols();
    CVec score(count);
    Eigen::VectorXd line;
    for (Eigen::Index i = 0; i < count; ++i) {
        line = rows ? Eigen::VectorXd(a.row(i).cwiseAbs2().transpose()) : Eigen::VectorXd(a.col(i).cwiseAbs2());
        std::partial_sort(line.data(), line.data() + k, line.data() + line.size(), std::greater<double>());
        score(i) = line.head(k).sum();
    }
    return support(hard_threshold(score, keep));
}

}  // namespace

namespace {

LiftedPoint finish_init(CVec left, CVec right, double sigma, Eigen::Index s1, Eigen::Index s2) {
    CVec u = hard_threshold(left, s1);
    CVec v = hard_threshold(right, s2);
    if (u.norm() == 0.0 || v.norm() == 0.0 || !(sigma > 0.0))
        throw NumericError("spectral_init: thresholded factor is zero", u);
    const double scale = std::sqrt(sigma);
    u *= scale / u.norm();
    v *= scale / v.norm();
    return {u, v};
}

}  // namespace

LiftedPoint sparse_rank_one(const CMat& image, Eigen::Index s1, Eigen::Index s2, InitMethod method) {
    const Eigen::Index n = image.rows();
    if (image.cols() != n || n == 0) throw ValidationError("sparse_rank_one: image must be square");
    if (s1 < 1 || s1 > n || s2 < 1 || s2 > n) throw ValidationError("spectral_init: sparsity outside [1, n]");
    if (method == InitMethod::leading_pair) {
        const Eigen::BDCSVD<CMat> svd(image, Eigen::ComputeThinU | Eigen::ComputeThinV);
        return finish_init(svd.matrixU().col(0), svd.matrixV().col(0).conjugate(), svd.singularValues()(0), s1, s2);
    }
    const auto rows = top_lines(image, s1, s2, true);
    const auto cols = top_lines(image, s2, s1, false);
    if (rows.empty() || cols.empty()) throw NumericError("spectral_init: the image is zero", CVec());
    CMat block(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = image(rows[i], cols[j]);
    const Eigen::JacobiSVD<CMat> svd(block, Eigen::ComputeThinU | Eigen::ComputeThinV);
    CVec left = CVec::Zero(n);
    CVec right = CVec::Zero(n);
    for (std::size_t i = 0; i < rows.size(); ++i) left(rows[i]) = svd.matrixU()(static_cast<Eigen::Index>(i), 0);
    for (std::size_t j = 0; j < cols.size(); ++j)
        right(cols[j]) = std::conj(svd.matrixV()(static_cast<Eigen::Index>(j), 0));
    return finish_init(left, right, svd.singularValues()(0), s1, s2);
}

LiftedPoint spectral_init(const Ensemble& ens, const CVec& b, Eigen::Index s1, Eigen::Index s2,
                          std::uint64_t seed, InitMethod method) {
    check_measurements(ens, b);
    if (b.norm() == 0.0) throw DomainError("spectral_init: b is zero");
    const Eigen::Index n = ens.n();
    if (s1 < 1 || s1 > n || s2 < 1 || s2 > n) throw ValidationError("spectral_init: sparsity outside [1, n]");
    if (n <= kMaxExplicitN) return sparse_rank_one(adjoint_apply(ens, b), s1, s2, method);

    const AdjointImage image(ens, b);
    Rng rng(trial_seed(seed, 0x5eed));
    CVec w = complex_gaussian_vector(rng, n);
    w.normalize();
    double prev = 0.0;
    for (int it = 0; it < 500; ++it) {
        CVec next = image.apply_adjoint(image.apply(w));
        const double norm = next.norm();
        if (norm == 0.0) throw NumericError("spectral_init: power iteration collapsed", w);
        w = next / norm;
        if (std::abs(norm - prev) <= 1e-12 * norm) break;
        prev = norm;
    }
    CVec left = image.apply(w);
    const double sigma = left.norm();
    return finish_init(left / sigma, w.conjugate(), sigma, s1, s2);
}

double lifted_relative_error(const LiftedPoint& p_hat, const LiftedPoint& p_true) {
    const double uu = p_true.u.dot(p_true.u).real();
    const double truth = std::sqrt(uu) * p_true.v.norm();
    if (truth == 0.0) throw DomainError("lifted error: the true point is zero");
    if (p_hat.u.size() != p_true.u.size() || p_hat.v.size() != p_true.v.size())
        throw ValidationError("lifted error: dimension mismatch");
    const cplx c = p_true.u.dot(p_hat.u) / uu;
    const CVec w = p_hat.u - c * p_true.u;
    const double sq = uu * (c * p_hat.v - p_true.v).squaredNorm() + w.squaredNorm() * p_hat.v.squaredNorm();
    return std::sqrt(sq) / truth;
}

SuccessMetric success_metric(const LiftedPoint& p_hat, const LiftedPoint& p_true, const CVec& b,
                             double z_norm, const Ensemble& ens) {
    check_measurements(ens, b);
    if (!(z_norm >= 0.0)) throw ValidationError("z_norm must be nonnegative");
    SuccessMetric out;
    out.rel_error = lifted_relative_error(p_hat, p_true);
    const double signal = forward(ens, p_true).norm();
    out.noise_ratio = z_norm == 0.0 ? 0.0 : z_norm / signal;
    return out;
}

SolveResult recover(const Ensemble& ens, const CVec& b, const SolveOptions& opts,
                    const std::optional<LiftedPoint>& truth) {
    opts.validate(ens.n());
    LiftedPoint x = spectral_init(ens, b, opts.s1, opts.s2, opts.seed, opts.init);

    SolveResult result;
    auto half_step = [&](Side side) {
        const CVec& fixed = side == Side::left ? x.v : x.u;
        CVec& moving = side == Side::left ? x.u : x.v;
        const Eigen::Index s = side == Side::left ? opts.s1 : opts.s2;
        const PartialOperator op = partial_forward(ens, side, fixed);
        auto apply = [&](const CVec& z) { return op.apply(z); };
        auto adjoint = [&](const CVec& r) { return op.adjoint_apply(r); };

        HalfStep step;
        step.side = side;
        step.before = (op.apply(moving) - b).norm();
        const CVec ls = cgls(apply, adjoint, b, moving, opts.inner_tol, opts.inner_max_iters);
        step.ls = (op.apply(ls) - b).norm();

        const CVec thresholded = hard_threshold(ls, s);
        const auto mask = support_mask(thresholded);
        auto apply_on = [&](const CVec& z) { return op.apply(masked(z, mask)); };
        auto adjoint_on = [&](const CVec& r) { return masked(op.adjoint_apply(r), mask); };
        CVec refit = cgls(apply_on, adjoint_on, b, thresholded, opts.inner_tol, opts.inner_max_iters);
        if (opts.enforce_flatness) {
            const double mu = side == Side::left ? *opts.mu1 : *opts.mu2;
            refit = flatten_through_dictionary(ens, side, refit, mu);
        }
        if (refit.norm() == 0.0) throw NumericError("recover: iterate collapsed to zero", refit);
        moving = refit;
        step.after = (op.apply(moving) - b).norm();
        result.history.push_back(step);
    };

    for (int it = 1; it <= opts.max_outer_iters; ++it) {
        const LiftedPoint previous = x;
        half_step(Side::left);
        half_step(Side::right);
        const double balance = std::sqrt(x.v.norm() / x.u.norm());
        x.u *= balance;
        x.v /= balance;
        result.iterations = it;
        if (lifted_relative_error(previous, x) < opts.outer_tol) {
            result.converged = true;
            break;
        }
    }

    result.u_hat = Signal(x.u);
    result.v_hat = Signal(x.v);
    result.residual_norm = (forward(ens, x) - b).norm();
    if (truth) result.relative_error = lifted_relative_error(x, *truth);
    return result;
}

}  // namespace sbd
