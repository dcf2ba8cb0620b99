#include "sbd/entropy_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sbd::bounds {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

double log_factor(double k, double n) {
    return std::max(std::log(n / k + 1.0) / k, 1.0 / n);
}

}  // namespace

void BoundQuery::validate() const {
    require(n >= 1 && m >= 1 && k >= 1 && s >= 1 && s1 >= 1 && s2 >= 1,
            "bound query: integer arguments must be positive");
    require(mu >= 1.0 && mu1 >= 1.0 && mu2 >= 1.0, "bound query: mu values must be >= 1");
    require(delta > 0.0 && delta < 1.0, "bound query: delta must lie in (0, 1)");
    require(p >= 1.0, "bound query: p must be >= 1");
    require(norm_t_1_to_inf > 0.0, "bound query: norm_t_1_to_inf must be positive");
    require(c > 0.0, "bound query: constant C must be positive");
}

double solve_a() {
    auto g = [](double a) { return std::log(a + 1.0) - 1.0 / a; };
    double lo = 1.0;
    double hi = 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if (std::abs(gm) <= 1e-15 || hi - lo <= std::numeric_limits<double>::epsilon()) return mid;
        (gm < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double maurey_f(double k, double n, double p) {
    if (!(k >= 1.0 && n >= 1.0 && p >= 1.0))
        throw DomainError("maurey_f: requires k, n >= 1 and p >= 1");
    const double decay = std::exp2(-std::max(k / n, 1.0));
    return decay * std::min(1.0, std::pow(log_factor(k, n), 1.0 - 1.0 / p));
}

double maurey_h(double k, double n, double m) {
    if (!(k >= 1.0 && n >= 1.0 && m >= 1.0 && m <= n))
        throw DomainError("maurey_h: requires k, n, m >= 1 and m <= n");
    const double decay = std::exp2(-std::max({k / n, k / m, 1.0}));
    const double middle = std::max(1.0, std::sqrt(std::log(m / k + 1.0)));
    return decay * middle * std::min(1.0, std::sqrt(log_factor(k, n)));
}

double dudley_sparse_bound(double s, double n) {
    if (!(s > 0.0 && n > 1.0)) throw DomainError("dudley_sparse_bound: requires s > 0, n > 1");
    return std::sqrt(s) * std::pow(std::log(n), 1.5);
}

double dudley_fourier_bound(double s, double n, double m, double norm_t) {
    if (!(s > 0.0 && n > 1.0 && m >= 1.0 && norm_t > 0.0))
        throw DomainError("dudley_fourier_bound: requires s > 0, n > 1, m >= 1, normT > 0");
    return norm_t * std::sqrt(s) * std::sqrt(std::log(m)) * std::pow(std::log(n), 1.5);
}

double gamma2_bound(double s1, double s2, double mu, double m, double n) {
    if (!(s1 > 0.0 && s2 > 0.0 && mu > 0.0 && m > 0.0 && n > 1.0))
        throw DomainError("gamma2_bound: arguments must be positive and n > 1");
    return std::sqrt((mu * s1 + s2) / m) * std::pow(std::log(n), 2.5);
}

double gamma2_assembled(double s1, double s2, double mu, double m, double n, double c) {
    if (!(c > 0.0)) throw DomainError("gamma2_assembled: c must be positive");
    const double log_n = std::log(n);
    const double norm_t = c * std::sqrt(log_n) / std::sqrt(n);
    const double fourier_term = 2.0 * std::sqrt(n / m) * dudley_fourier_bound(s2, n, n, norm_t);
    const double sparse_term = 2.0 * std::sqrt(mu / m) * dudley_sparse_bound(s1, n) * std::sqrt(log_n);
    return fourier_term + sparse_term;
}

SampleComplexity sample_complexity(const BoundQuery& q, Complexity which) {
    q.validate();
    const double s1 = static_cast<double>(q.s1);
    const double s2 = static_cast<double>(q.s2);
    double comb = 0.0;
    switch (which) {
        case Complexity::thm1a: comb = s1 + q.mu1 * s2; break;
        case Complexity::thm1b: comb = q.mu2 * s1 + s2; break;
        case Complexity::thm3: comb = q.mu2 * s1 + q.mu1 * s2; break;
    }
    const double value = q.c * comb * std::pow(std::log(static_cast<double>(q.n)), 5) / (q.delta * q.delta);
    if (!std::isfinite(value) || value > 9.0e18) throw NumericError("sample_complexity: overflow", CVec());
    SampleComplexity out;
    out.m = static_cast<std::int64_t>(std::ceil(value));
    out.feasible = out.m <= q.n;
    return out;
}

double angle_preservation_bound(double delta) {
    if (!(delta >= 0.0 && delta < 1.0))
        throw DomainError("angle_preservation_bound: delta must lie in [0, 1)");
    const double value = 2.0 * delta * std::sqrt(1.0 + delta) / (1.0 + std::sqrt(1.0 - delta));
    if (value > 2.0 * std::sqrt(2.0) * delta * (1.0 + 1e-15))
        throw NumericError("angle_preservation_bound: exceeds 2 sqrt(2) delta", CVec());
    return value;
}

DyadicChain dyadic_chain_check(const std::vector<double>& e) {
    require(!e.empty(), "dyadic_chain_check: empty sequence");
    for (std::size_t i = 0; i < e.size(); ++i) {
        require(std::isfinite(e[i]) && e[i] >= 0.0, "dyadic_chain_check: entries must be finite and >= 0");
        if (i > 0) require(e[i] <= e[i - 1], "dyadic_chain_check: sequence must be nonincreasing");
    }
    const double log2 = std::log(2.0);
    DyadicChain out;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double k = static_cast<double>(i + 1);
        const double next = i + 1 < e.size() ? e[i + 1] : 0.0;
        out.integral += (e[i] - next) * std::sqrt(k * log2);
        out.weighted_sum += e[i] / std::sqrt(k);
    }
    out.weighted_sum *= std::sqrt(log2);
    out.holds = out.integral <= out.weighted_sum * (1.0 + 1e-12);
    return out;
}

namespace {

double distance(const RVec& a, const RVec& b, Norm norm) {
    const RVec d = a - b;
    switch (norm) {
        case Norm::l1: return d.lpNorm<1>();
        case Norm::l2: return d.norm();
        case Norm::linf: return d.lpNorm<Eigen::Infinity>();
    }
    return d.norm();
}

}  // namespace

std::size_t greedy_cover(const std::vector<RVec>& points, double eps, Norm norm) {
    require(!points.empty(), "greedy_cover: empty point set");
    require(eps > 0.0, "greedy_cover: eps must be positive");
    const std::size_t dim = static_cast<std::size_t>(points.front().size());
    for (const auto& p : points)
        require(static_cast<std::size_t>(p.size()) == dim && p.allFinite(),
                "greedy_cover: points must be finite and share a dimension");

    std::vector<double> nearest(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) nearest[i] = distance(points[i], points[0], norm);
    std::size_t centers = 1;
    while (true) {
        const auto far = std::max_element(nearest.begin(), nearest.end());
        if (*far <= eps) return centers;
        const RVec& c = points[static_cast<std::size_t>(far - nearest.begin())];
        ++centers;
        for (std::size_t i = 0; i < points.size(); ++i)
            nearest[i] = std::min(nearest[i], distance(points[i], c, norm));
    }
}

}  // namespace sbd::bounds
