#include "sbd/concentration.hpp"

#include "sbd/parallel.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>

namespace sbd {

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw ValidationError("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

struct TrialOutcome {
    double value = std::numeric_limits<double>::quiet_NaN();
    int resampled = 0;
    double orthogonality = 0.0;
    Witness witness;
};

double bootstrap_max_se(const std::vector<double>& values, std::uint64_t seed) {
    if (values.size() < 2) return 0.0;
    constexpr int kResamples = 200;
    Rng rng(mix64(seed ^ 0xb0075742a9ULL));
    std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int b = 0; b < kResamples; ++b) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < values.size(); ++i) mx = std::max(mx, values[pick(rng)]);
        sum += mx;
        sum_sq += mx * mx;
    }
    const double mean = sum / kResamples;
    return std::sqrt(std::max(0.0, sum_sq / kResamples - mean * mean));
}

template <typename TrialFn>
EstimateReport run_estimator(std::string kind, const EstimatorOptions& opts, TrialFn&& trial) {
    if (opts.trials < 1) throw ValidationError("trials must be at least 1");
    const auto start = std::chrono::steady_clock::now();
    const auto outcomes = parallel_map(static_cast<std::size_t>(opts.trials), opts.workers,
                                       [&](std::size_t t) {
                                           Rng rng(trial_seed(opts.seed, t));
                                           TrialOutcome out = trial(t, rng);
                                           out.witness.trial = t;
                                           return out;
                                       });

    EstimateReport report;
    report.kind = std::move(kind);
    report.seed = opts.seed;
    report.trials = opts.trials;
    report.values.reserve(outcomes.size());
    double best = -1.0;
    for (const auto& o : outcomes) {
        report.resampled += o.resampled;
        if (std::isnan(o.value)) {
            ++report.failed;
            continue;
        }
        report.max_orthogonality_residual = std::max(report.max_orthogonality_residual, o.orthogonality);
        report.values.push_back(o.value);
        // strict comparison keeps the earliest trial on ties
        if (o.value > best) {
            best = o.value;
            report.witness = o.witness;
        }
    }
    if (report.values.empty()) throw NumericError(report.kind + ": every trial failed");
    report.delta_hat = best;
    report.q50 = quantile(report.values, 0.5);
    report.q90 = quantile(report.values, 0.9);
    report.q99 = quantile(report.values, 0.99);
    report.max_standard_error = bootstrap_max_se(report.values, opts.seed);
    report.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

void fill_context(EstimateReport& r, const Ensemble& ens, const ModelSpec& su, const ModelSpec& sv) {
    r.n = ens.n();
    r.m = ens.m();
    r.s1 = su.s;
    r.s2 = sv.s;
    r.mu1 = su.mu;
    r.mu2 = sv.mu;
}

void check_specs(const Ensemble& ens, const ModelSpec& su, const ModelSpec& sv) {
    su.validate();
    sv.validate();
    if (su.n != ens.n() || sv.n != ens.n())
        throw ValidationError("model dimension does not match the ensemble");
}

double rip_deviation(const Ensemble& ens, const CVec& u, const CVec& v) {
    const double energy = u.squaredNorm() * v.squaredNorm();
    return std::abs(forward(ens, u, v).squaredNorm() - energy) / energy;
}

}  // namespace

EstimateReport estimate_rip(const Ensemble& ens, const ModelSpec& spec_u, const ModelSpec& spec_v,
                            const EstimatorOptions& opts) {
    check_specs(ens, spec_u, spec_v);
    auto report = run_estimator("rip", opts, [&](std::size_t, Rng& rng) {
        TrialOutcome out;
        const CVec u = sample_model(spec_u, rng).entries();
        const CVec v = sample_model(spec_v, rng).entries();
        out.value = rip_deviation(ens, u, v);
        out.witness.u = u;
        out.witness.v = v;
        return out;
    });
    fill_context(report, ens, spec_u, spec_v);
    return report;
}

EstimateReport estimate_rip_matrix(const CMat& a, const ModelSpec& spec, const EstimatorOptions& opts) {
    spec.validate();
    if (spec.n != a.cols()) throw ValidationError("model dimension does not match the matrix");
    auto report = run_estimator("rip-matrix", opts, [&](std::size_t, Rng& rng) {
        TrialOutcome out;
        const CVec x = sample_model(spec, rng).entries();
        const double energy = x.squaredNorm();
        out.value = std::abs((a * x).squaredNorm() - energy) / energy;
        out.witness.u = x;
        return out;
    });
    report.n = a.cols();
    report.m = a.rows();
    report.s1 = spec.s;
    report.mu1 = spec.mu;
    return report;
}

cplx cross_correlation(const Ensemble& hat_side, const Ensemble& plain_side, const CVec& u,
                       const CVec& u_hat, const CVec& v, const CVec& v_hat) {
    const double norms = u.norm() * u_hat.norm() * v.norm() * v_hat.norm();
    return forward(hat_side, u_hat, v_hat).dot(forward(plain_side, u, v)) / norms;
}

EstimateReport estimate_rap(const Ensemble& ens, const ModelSpec& spec_u, const ModelSpec& spec_v,
                            const EstimatorOptions& opts, bool force_diagonal) {
    check_specs(ens, spec_u, spec_v);
    auto report = run_estimator("rap", opts, [&](std::size_t, Rng& rng) {
        TrialOutcome out;
        const CVec u = sample_model(spec_u, rng).entries();
        const CVec v = sample_model(spec_v, rng).entries();
        if (force_diagonal) {
            // identical arithmetic to estimate_rip keeps the two bit-compatible
            out.value = rip_deviation(ens, u, v);
            out.witness = {0, u, u, v, v};
            return out;
        }
        const CVec u_hat = sample_model(spec_u, rng).entries();
        const CVec v_hat = sample_model(spec_v, rng).entries();
        const double norms = u.norm() * u_hat.norm() * v.norm() * v_hat.norm();
        const cplx identity_part = u_hat.dot(u) * v_hat.dot(v) / norms;
        out.value = std::abs(cross_correlation(ens, ens, u, u_hat, v, v_hat) - identity_part);
        out.witness = {0, u, u_hat, v, v_hat};
        return out;
    });
    fill_context(report, ens, spec_u, spec_v);
    return report;
}

EstimateReport estimate_rop(const Ensemble& ens, const ModelSpec& spec_u, const ModelSpec& spec_v,
                            const EstimatorOptions& opts, Orthogonality orthogonality,
                            bool decoupled) {
    check_specs(ens, spec_u, spec_v);
    if (decoupled && (ens.phi_kind() != DictionaryKind::gaussian ||
                      ens.psi_kind() != DictionaryKind::gaussian))
        throw ValidationError("decoupled ROP needs Gaussian dictionaries on both sides");

    constexpr int kRedraws = 10;
    const std::string kind = orthogonality == Orthogonality::both ? "rop-both" : "rop-either";
    auto report = run_estimator(kind, opts, [&](std::size_t t, Rng& rng) {
        TrialOutcome out;
        const Signal u = sample_model(spec_u, rng);
        const Signal v = sample_model(spec_v, rng);
        const bool fix_u = orthogonality == Orthogonality::both || t % 2 == 0;
        const bool fix_v = orthogonality == Orthogonality::both || t % 2 == 1;

        std::optional<Signal> u_hat;
        std::optional<Signal> v_hat;
        for (int attempt = 0; attempt <= kRedraws && !(u_hat && v_hat); ++attempt) {
            if (attempt > 0) ++out.resampled;
            try {
                if (!u_hat) {
                    Signal draw = sample_model(spec_u, rng);
                    u_hat = fix_u ? orthogonalize_pair(u, draw, spec_u) : draw;
                }
                if (!v_hat) {
                    Signal draw = sample_model(spec_v, rng);
                    v_hat = fix_v ? orthogonalize_pair(v, draw, spec_v) : draw;
                }
            } catch (const DomainError&) {
            } catch (const NumericError&) {
            }
        }
        if (!u_hat || !v_hat) return out;  // counted as failed; value stays NaN

        if (decoupled) {
            const Ensemble hat_side = ens.with_dictionaries(gaussian_dictionary(ens.n(), rng),
                                                            ens.psi_matrix());
            const Ensemble plain_side = ens.with_dictionaries(ens.phi_matrix(),
                                                              gaussian_dictionary(ens.n(), rng));
            out.value = std::abs(cross_correlation(hat_side, plain_side, u.entries(), u_hat->entries(),
                                                   v.entries(), v_hat->entries()));
        } else {
            out.value = std::abs(cross_correlation(ens, ens, u.entries(), u_hat->entries(),
                                                   v.entries(), v_hat->entries()));
        }
        if (fix_u) out.orthogonality = std::abs(u.entries().dot(u_hat->entries())) / (u.norm2() * u_hat->norm2());
        if (fix_v)
            out.orthogonality = std::max(out.orthogonality,
                                         std::abs(v.entries().dot(v_hat->entries())) / (v.norm2() * v_hat->norm2()));
        out.witness = {0, u.entries(), u_hat->entries(), v.entries(), v_hat->entries()};
        return out;
    });
    fill_context(report, ens, spec_u, spec_v);
    return report;
}

IsotropyResult isotropy_check(Eigen::Index n, Eigen::Index m, DictionaryKind fixed_kind,
                              const CMat& x, int draws, std::uint64_t seed, bool mirrored,
                              OmegaMode mode) {
    if (n > kMaxRMatrixN) throw ValidationError("isotropy_check: n exceeds the guard (64)");
    if (draws < 1) throw ValidationError("isotropy_check: draws must be at least 1");
    if (x.rows() != n || x.cols() != n) throw ValidationError("isotropy_check: X must be n x n");

    // Omega and the fixed dictionary come from the base ensemble; the averaged side is redrawn.
    const Ensemble base = mirrored ? Ensemble::generate(n, m, fixed_kind, DictionaryKind::identity, seed, mode)
                                   : Ensemble::generate(n, m, DictionaryKind::identity, fixed_kind, seed, mode);
    CMat sum = CMat::Zero(n, n);
    Rng rng(trial_seed(seed, 0x15071));
    for (int d = 0; d < draws; ++d) {
        CMat fresh = gaussian_dictionary(n, rng);
        const Ensemble ens = mirrored
                                 ? base.with_dictionaries(base.phi(), std::move(fresh))
                                 : base.with_dictionaries(std::move(fresh), base.psi());
        sum += adjoint_apply(ens, forward_matrix(ens, x));
    }
    IsotropyResult result;
    result.draws = draws;
    result.mean = sum / static_cast<double>(draws);
    if (mirrored) {
        const CMat phi = base.phi_matrix();
        result.target = phi.adjoint() * phi * x;
    } else {
        const CMat psi = base.psi_matrix();
        result.target = x * (psi.adjoint() * psi).transpose();
    }
    result.rel_error = (result.mean - result.target).norm() / result.target.norm();
    return result;
}

double polarization_residual(const CMat& m_prime, const CMat& m, const CVec& xi,
                             PolarizationWiring wiring) {
    if (m.rows() != m_prime.rows() || m.cols() != m_prime.cols() || m.cols() != xi.size())
        throw ValidationError("polarization_residual: shape mismatch");
    const CVec a = m_prime * xi;
    const CVec b = m * xi;
    const std::array<cplx, 4> roots = {cplx(1, 0), cplx(-1, 0), cplx(0, 1), cplx(0, -1)};
    cplx sum = 0.0;
    for (const cplx alpha : roots) {
        const cplx weight = wiring == PolarizationWiring::alpha ? alpha : std::conj(alpha);
        sum += alpha * (b + weight * a).squaredNorm();
    }
    return std::abs(a.dot(b) - 0.25 * sum);
}

double exact_rip_small(const CMat& a, Eigen::Index s) {
    const auto n = a.cols();
    if (n > 16 || s > 4) throw ValidationError("exact_rip_small: requires n <= 16 and s <= 4");
    if (s < 1 || s > n) throw ValidationError("exact_rip_small: s must lie in [1, n]");
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(s));
    for (Eigen::Index i = 0; i < s; ++i) idx[static_cast<std::size_t>(i)] = i;
    double worst = 0.0;
    CMat sub(a.rows(), s);
    for (;;) {
        for (Eigen::Index i = 0; i < s; ++i) sub.col(i) = a.col(idx[static_cast<std::size_t>(i)]);
        const Eigen::SelfAdjointEigenSolver<CMat> es(sub.adjoint() * sub, Eigen::EigenvaluesOnly);
        const auto& ev = es.eigenvalues();
        worst = std::max({worst, std::abs(ev(0) - 1.0), std::abs(ev(s - 1) - 1.0)});
        // next combination in lexicographic order
        Eigen::Index i = s - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - s + i) --i;
        if (i < 0) break;
        ++idx[static_cast<std::size_t>(i)];
        for (Eigen::Index j = i + 1; j < s; ++j)
            idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
    return worst;
}

}  // namespace sbd
