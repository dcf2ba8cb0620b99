// Common numeric aliases, error types and seeded randomness used across the library.
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace sbd {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

using Rng = std::mt19937_64;

/// Input outside the mathematical domain of an operation (zero vector, delta >= 1, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Malformed arguments or configuration. The CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An iterative method failed to reach its target. Carries the last iterate when one exists.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what, CVec last_iterate = {})
        : std::runtime_error(what), last_iterate_(std::move(last_iterate)) {}

    const CVec& last_iterate() const noexcept { return last_iterate_; }

private:
    CVec last_iterate_;
};

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of trial `index` under base seed `base`: base xor index, then mixed.
constexpr std::uint64_t trial_seed(std::uint64_t base, std::uint64_t index) noexcept {
    return mix64(base ^ index);
}

/// Circularly-symmetric complex Gaussian CN(0, variance).
inline cplx complex_gaussian(Rng& rng, double variance = 1.0) {
    std::normal_distribution<double> nd(0.0, std::sqrt(variance / 2.0));
    const double re = nd(rng);
    const double im = nd(rng);
    return {re, im};
}

inline CVec complex_gaussian_vector(Rng& rng, Eigen::Index n, double variance = 1.0) {
    CVec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = complex_gaussian(rng, variance);
    return v;
}

inline CMat complex_gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                                    double variance = 1.0) {
    CMat a(rows, cols);
    // column-major fill order is part of the seed contract
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) a(i, j) = complex_gaussian(rng, variance);
    return a;
}

}  // namespace sbd
