// Closed-form calculators for the entropy, chaining and sample-complexity bounds.
//
// All "up to an absolute constant" bounds are returned with constant 1; callers multiply by
// their own constant. Logarithms are natural.
#pragma once

#include "sbd/types.hpp"

#include <cstdint>
#include <vector>

namespace sbd::bounds {

struct BoundQuery {
    std::int64_t n = 128;
    std::int64_t m = 64;
    std::int64_t k = 1;
    std::int64_t s = 2;
    std::int64_t s1 = 2;
    std::int64_t s2 = 2;
    double mu = 1.0;
    double mu1 = 1.0;
    double mu2 = 1.0;
    double delta = 0.5;
    double p = 2.0;
    double norm_t_1_to_inf = 1.0;
    double c = 1.0;  // absolute constant applied to sample_complexity

    void validate() const;
};

/// Root of log(a + 1) = 1/a, found by bisection on (1, 2).
double solve_a();

/// 2^{-max(k/n, 1)} * min{1, max[log(n/k + 1)/k, 1/n]^{1 - 1/p}}
double maurey_f(double k, double n, double p);

/// 2^{-max(k/n, k/m, 1)} * max[1, log^{1/2}(m/k + 1)] * min{1, max[log(n/k + 1)/k, 1/n]^{1/2}}
double maurey_h(double k, double n, double m);

/// sqrt(s) * log^{3/2} n
double dudley_sparse_bound(double s, double n);

/// normT * sqrt(s) * log^{1/2} m * log^{3/2} n
double dudley_fourier_bound(double s, double n, double m, double norm_t);

/// sqrt((mu s1 + s2) / m) * log^{5/2} n
double gamma2_bound(double s1, double s2, double mu, double m, double n);

/// The chaining bound reassembled from its two covering-number pieces:
///   2 sqrt(n/m) * dudley_fourier_bound(s2, n, n, c sqrt(log n)/sqrt(n))
/// + 2 sqrt(mu/m) * dudley_sparse_bound(s1, n) * sqrt(log n)
/// which is at most 2 sqrt(2) max(c, 1) * gamma2_bound(s1, s2, mu, m, n).
double gamma2_assembled(double s1, double s2, double mu, double m, double n, double c);

enum class Complexity { thm1a, thm1b, thm3 };

struct SampleComplexity {
    std::int64_t m = 0;
    bool feasible = true;  // false when m > n, i.e. the guarantee is vacuous at this n
};

/// ceil(C * delta^{-2} * combination * log^5 n) with combination
///   thm1a: s1 + mu1 s2,  thm1b: mu2 s1 + s2,  thm3: mu2 s1 + mu1 s2.
SampleComplexity sample_complexity(const BoundQuery& q, Complexity which);

/// 2 delta sqrt(1 + delta) / (1 + sqrt(1 - delta)); DomainError unless 0 <= delta < 1.
double angle_preservation_bound(double delta);

struct DyadicChain {
    double integral = 0.0;    // integral of sqrt(log N(eps)) over eps
    double weighted_sum = 0.0;  // sqrt(log 2) * sum_k e_k / sqrt(k)
    bool holds = false;
};

/// Treats e as the dyadic entropy numbers of a synthetic body (N(eps) = 2^k on
/// [e_{k+1}, e_k), N = 1 above e_1, e_k = 0 past the end) and compares the entropy integral with
/// the weighted sum. ValidationError for empty, negative or increasing input.
DyadicChain dyadic_chain_check(const std::vector<double>& e);

enum class Norm { l1, l2, linf };

/// Size of a greedy eps-net of a finite sample built by farthest-point traversal from the first
/// point: the shortest traversal prefix whose covering radius is at most eps. Nonincreasing in
/// eps; equals 1 once eps reaches the largest distance from the first point.
std::size_t greedy_cover(const std::vector<RVec>& points, double eps, Norm norm = Norm::l2);

}  // namespace sbd::bounds
