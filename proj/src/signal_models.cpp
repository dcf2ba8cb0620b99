#include "sbd/signal_models.hpp"

#include "sbd/dft.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace sbd {

Signal::Signal(CVec entries) : x_(std::move(entries)) {
    if (x_.size() == 0) throw ValidationError("signal must have positive length");
    if (!x_.allFinite()) throw ValidationError("signal entries must be finite");
    fx_ = dft::forward(x_);
    norm1_ = x_.cwiseAbs().sum();
    norm2_ = x_.norm();
    norm_inf_ = x_.cwiseAbs().maxCoeff();
    spec_norm2_ = fx_.norm();
    spec_norm_inf_ = fx_.cwiseAbs().maxCoeff();
}

Signal Signal::basis(Eigen::Index n, Eigen::Index index) {
    CVec e = CVec::Zero(n);
    e(index) = 1.0;
    return Signal(std::move(e));
}

std::string_view to_string(SparsityFlavor f) {
    return f == SparsityFlavor::exact ? "exact" : "approximate";
}

std::string_view to_string(Side s) { return s == Side::left ? "left" : "right"; }

SparsityFlavor parse_flavor(std::string_view text) {
    if (text == "exact") return SparsityFlavor::exact;
    if (text == "approximate") return SparsityFlavor::approximate;
    throw ValidationError("flavor: expected exact|approximate, got '" + std::string(text) + "'");
}

Side parse_side(std::string_view text) {
    if (text == "left") return Side::left;
    if (text == "right") return Side::right;
    throw ValidationError("side: expected left|right, got '" + std::string(text) + "'");
}

void ModelSpec::validate() const {
    if (n < 1) throw ValidationError("n must be positive");
    if (s < 1 || s > n) throw ValidationError("s must lie in [1, n]");
    if (mu && (!(*mu >= 1.0) || *mu > static_cast<double>(n)))
        throw ValidationError("mu must lie in [1, n]");
}

double spectral_flatness(const Signal& x) {
    if (x.is_zero()) throw DomainError("spectral flatness of the zero vector is undefined");
    const double peak = x.spectrum_norm_inf();
    const double energy = x.spectrum_norm2();
    return static_cast<double>(x.n()) * (peak / energy) * (peak / energy);
}

std::vector<Eigen::Index> support(const CVec& x) {
    std::vector<Eigen::Index> idx;
    if (x.size() == 0) return idx;
    const double cutoff = kZeroTolerance * x.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (std::abs(x(i)) > cutoff) idx.push_back(i);
    return idx;
}

bool in_gamma(const Signal& x, Eigen::Index s) {
    if (x.is_zero()) return true;
    return static_cast<Eigen::Index>(support(x.entries()).size()) <= s;
}

bool in_tilde_gamma(const Signal& x, Eigen::Index s) {
    if (x.is_zero()) throw DomainError("approximate sparsity test of the zero vector");
    // relative slack absorbs rounding in the equality case of 1-sparse vectors
    return x.norm1() <= std::sqrt(static_cast<double>(s)) * x.norm2() * (1.0 + 1e-12);
}

bool satisfies(const Signal& x, const ModelSpec& spec) {
    if (x.n() != spec.n || x.is_zero()) return false;
    const bool sparse = spec.flavor == SparsityFlavor::exact ? in_gamma(x, spec.s)
                                                             : in_tilde_gamma(x, spec.s);
    if (!sparse) return false;
    return !spec.mu || spectral_flatness(x) <= *spec.mu + kFlatnessSlack;
}

CVec hard_threshold(const CVec& x, Eigen::Index s) {
    const auto n = x.size();
    if (s >= n) return x;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    // stable sort keeps lower indices first among equal moduli
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return std::abs(x(a)) > std::abs(x(b));
    });
    CVec out = CVec::Zero(n);
    for (Eigen::Index k = 0; k < std::max<Eigen::Index>(s, 0); ++k) {
        const auto i = order[static_cast<std::size_t>(k)];
        out(i) = x(i);
    }
    return out;
}

Signal hard_threshold(const Signal& x, Eigen::Index s) {
    return Signal(hard_threshold(x.entries(), s));
}

namespace {

double magnitude_flatness(const RVec& a) {
    const double energy = a.squaredNorm();
    const double peak = a.maxCoeff();
    return static_cast<double>(a.size()) * peak * peak / energy;
}

// Magnitude profile with sf <= mu obtained by clipping at the largest feasible level, or by
// blending toward the flat profile when clipping cannot reach mu.
RVec flatten_magnitudes(const RVec& a, double mu) {
    const auto n = a.size();
    const double top = a.maxCoeff();
    Eigen::Index nonzero = 0;
    for (Eigen::Index k = 0; k < n; ++k)
        if (a(k) > 0.0) ++nonzero;

    const auto clip_ratio = [&](double tau) {
        const double kept = a.cwiseMin(tau).squaredNorm();
        return static_cast<double>(n) * tau * tau / kept;
    };

    if (static_cast<double>(n) < mu * static_cast<double>(nonzero)) {
        double lo = 0.0;
        double hi = top;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= 0.0) break;
            if (clip_ratio(mid) <= mu) lo = mid;
            else hi = mid;
        }
        if (lo > 0.0) return a.cwiseMin(lo);
    }

    const RVec flat = RVec::Constant(n, a.norm() / std::sqrt(static_cast<double>(n)));
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (magnitude_flatness((1.0 - mid) * a + mid * flat) <= mu) hi = mid;
        else lo = mid;
    }
    return (1.0 - hi) * a + hi * flat;
}

}  // namespace

Signal project_flat(const Signal& x, double mu, int max_rounds) {
    if (x.is_zero()) throw DomainError("project_flat: zero vector");
    if (!(mu >= 1.0) || mu > static_cast<double>(x.n()))
        throw DomainError("project_flat: mu must lie in [1, n]");
    if (spectral_flatness(x) <= mu + kFlatnessSlack) return x;

    const double target_norm = x.norm2();
    Signal current = x;
    for (int round = 0; round < max_rounds; ++round) {
        const CVec& spec = current.spectrum();
        const RVec mags = spec.cwiseAbs();
        const RVec flat = flatten_magnitudes(mags, mu);
        CVec out(spec.size());
        for (Eigen::Index k = 0; k < spec.size(); ++k)
            out(k) = mags(k) > 0.0 ? spec(k) * (flat(k) / mags(k)) : cplx(flat(k), 0.0);
        CVec y = dft::inverse(out);
        y *= target_norm / y.norm();
        current = Signal(std::move(y));
        if (spectral_flatness(current) <= mu + kFlatnessSlack) return current;
    }
    throw NumericError("project_flat: flatness bound not reached within the round cap",
                       current.entries());
}

namespace {

std::vector<Eigen::Index> random_support(Eigen::Index n, Eigen::Index s, Rng& rng) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    for (Eigen::Index k = 0; k < s; ++k) {
        std::uniform_int_distribution<Eigen::Index> pick(k, n - 1);
        std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(rng))]);
    }
    idx.resize(static_cast<std::size_t>(s));
    return idx;
}

CVec draw_candidate(const ModelSpec& spec, Rng& rng) {
    CVec x = CVec::Zero(spec.n);
    for (const auto i : random_support(spec.n, spec.s, rng)) x(i) = complex_gaussian(rng);
    if (spec.flavor == SparsityFlavor::approximate && spec.s < spec.n) {
        const double head = x.norm();
        CVec tail = complex_gaussian_vector(rng, spec.n);
        for (Eigen::Index i = 0; i < spec.n; ++i)
            if (x(i) != cplx{}) tail(i) = 0.0;
        const double tail_norm = tail.norm();
        if (tail_norm > 0.0) x += tail * (0.05 * head / tail_norm);
    }
    return x;
}

Signal normalized(const CVec& x) { return Signal(x / x.norm()); }

// Smallest blend (1 - t) x + t * spike (spike on x's largest entry) that meets the flatness
// bound. Support and sparsity are preserved and t = 1 always works since sf(spike) = 1.
std::optional<Signal> spike_repair(const CVec& x, const ModelSpec& spec) {
    Eigen::Index top = 0;
    x.cwiseAbs().maxCoeff(&top);
    CVec spike = CVec::Zero(x.size());
    spike(top) = x(top);
    const auto blended = [&](double t) { return normalized((1.0 - t) * x + t * spike); };
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (satisfies(blended(mid), spec)) hi = mid;
        else lo = mid;
    }
    Signal out = blended(hi);
    if (satisfies(out, spec)) return out;
    return std::nullopt;
}

// Repairs a sparsity violation without leaving the model's sparsity flavor.
CVec enforce_sparsity(const CVec& x, const ModelSpec& spec) {
    if (spec.flavor == SparsityFlavor::exact) return hard_threshold(x, spec.s);
    const double l1 = x.cwiseAbs().sum();
    if (l1 <= std::sqrt(static_cast<double>(spec.s)) * x.norm()) return x;
    return hard_threshold(x, spec.s);
}

}  // namespace

Signal sample_model(const ModelSpec& spec, Rng& rng, const SamplerLimits& limits) {
    spec.validate();
    CVec last;
    for (int attempt = 0; attempt < limits.support_retries; ++attempt) {
        CVec x = enforce_sparsity(draw_candidate(spec, rng), spec);
        if (x.norm() == 0.0) continue;
        if (!spec.mu) return normalized(x);

        for (int round = 0; round < limits.rounds; ++round) {
            Signal candidate = normalized(x);
            if (satisfies(candidate, spec)) return candidate;
            Signal flat = project_flat(candidate, *spec.mu);
            if (satisfies(flat, spec)) return flat;
            x = enforce_sparsity(flat.entries(), spec);
            last = x;
        }
        if (limits.spike_repair && x.norm() > 0.0)
            if (auto repaired = spike_repair(x, spec)) return *repaired;
    }
    throw NumericError("sample_model: joint sparsity/flatness membership not reached", last);
}

namespace {

// Gram-Schmidt against u restricted to w's support; keeps the support intact.
CVec restricted_gram_schmidt(const CVec& u, CVec w) {
    CVec u_restricted = CVec::Zero(u.size());
    for (const auto i : support(w)) u_restricted(i) = u(i);
    const double r_sq = u_restricted.squaredNorm();
    if (r_sq > 0.0) w -= (u_restricted.dot(w) / r_sq) * u_restricted;
    return w;
}

bool orthogonal_member(const CVec& u, const CVec& w, const ModelSpec& spec) {
    const double wn = w.norm();
    if (wn == 0.0) return false;
    Signal ws(w / wn);
    return satisfies(ws, spec) && std::abs(u.dot(ws.entries())) <= 1e-10 * u.norm();
}

// Blends w toward a spike e_j chosen where u vanishes (so the spike is orthogonal to u and
// perfectly flat), or where |u_j| is smallest otherwise.
std::optional<Signal> orthogonal_spike_repair(const CVec& u, const CVec& w, const ModelSpec& spec) {
    const double cutoff = kZeroTolerance * u.cwiseAbs().maxCoeff();
    const auto w_support = support(w);
    Eigen::Index pick = -1;
    for (const auto i : w_support)
        if (std::abs(u(i)) <= cutoff) { pick = i; break; }
    if (pick < 0) {
        const bool room = spec.flavor == SparsityFlavor::approximate ||
                          static_cast<Eigen::Index>(w_support.size()) < spec.s;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            const bool in_support = std::find(w_support.begin(), w_support.end(), i) != w_support.end();
            if (!in_support && !room) continue;
            if (std::abs(u(i)) < best) { best = std::abs(u(i)); pick = i; }
        }
    }
    if (pick < 0) return std::nullopt;
    CVec spike = CVec::Zero(u.size());
    spike(pick) = w.norm();
    const auto candidate = [&](double t) {
        return restricted_gram_schmidt(u, (1.0 - t) * w + t * spike);
    };
    if (!orthogonal_member(u, candidate(1.0), spec)) return std::nullopt;
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (orthogonal_member(u, candidate(mid), spec)) hi = mid;
        else lo = mid;
    }
    const CVec out = candidate(hi);
    return Signal(out / out.norm());
}

}  // namespace

Signal orthogonalize_pair(const Signal& u, const Signal& u_hat, const ModelSpec& spec,
                          int max_rounds) {
    if (u.is_zero()) throw DomainError("orthogonalize_pair: u is zero");
    const CVec& uu = u.entries();

    CVec w = u_hat.entries() - (uu.dot(u_hat.entries()) / uu.squaredNorm()) * uu;
    if (w.norm() <= 1e-12 * u_hat.norm2())
        throw DomainError("orthogonalize_pair: u_hat is parallel to u");

    for (int round = 0; round < max_rounds; ++round) {
        w = enforce_sparsity(w, spec);
        if (spec.mu) {
            Signal ws(w / w.norm());
            if (spectral_flatness(ws) > *spec.mu + kFlatnessSlack)
                w = enforce_sparsity(project_flat(ws, *spec.mu).entries(), spec);
        }
        w = restricted_gram_schmidt(uu, w);
        const double wn = w.norm();
        if (wn <= 1e-12)
            throw DomainError("orthogonalize_pair: u_hat collapses onto u on its support");
        w /= wn;
        if (orthogonal_member(uu, w, spec)) return Signal(w);
        if (spec.mu)
            if (auto repaired = orthogonal_spike_repair(uu, w, spec)) return *repaired;
    }
    throw NumericError("orthogonalize_pair: model membership not reached", w);
}

}  // namespace sbd
