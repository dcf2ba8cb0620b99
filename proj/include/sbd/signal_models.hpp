// Signal containers and the restricted signal sets used throughout the library:
//
//   Gamma_s        exactly s-sparse vectors
//   tilde Gamma_s  approximately s-sparse vectors, ||x||_1 <= sqrt(s) ||x||_2
//   C_mu           vectors whose spectral flatness n ||Fx||_inf^2 / ||Fx||_2^2 is at most mu
//
// Membership tests, projections and Monte Carlo samplers live here.
#pragma once

#include "sbd/types.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace sbd {

/// Complex signal of length n with its unitary DFT and norms precomputed.
class Signal {
public:
    Signal() = default;
    /// Throws ValidationError on empty input or non-finite entries.
    explicit Signal(CVec entries);

    static Signal basis(Eigen::Index n, Eigen::Index index);

    Eigen::Index n() const noexcept { return x_.size(); }
    const CVec& entries() const noexcept { return x_; }
    const CVec& spectrum() const noexcept { return fx_; }

    double norm1() const noexcept { return norm1_; }
    double norm2() const noexcept { return norm2_; }
    double norm_inf() const noexcept { return norm_inf_; }
    double spectrum_norm2() const noexcept { return spec_norm2_; }
    double spectrum_norm_inf() const noexcept { return spec_norm_inf_; }

    bool is_zero() const noexcept { return norm_inf_ == 0.0; }

private:
    CVec x_;
    CVec fx_;
    double norm1_ = 0.0;
    double norm2_ = 0.0;
    double norm_inf_ = 0.0;
    double spec_norm2_ = 0.0;
    double spec_norm_inf_ = 0.0;
};

enum class SparsityFlavor { exact, approximate };
enum class Side { left, right };

std::string_view to_string(SparsityFlavor f);
std::string_view to_string(Side s);
SparsityFlavor parse_flavor(std::string_view text);
Side parse_side(std::string_view text);

/// Description of a restricted set: Gamma_s or tilde Gamma_s, optionally intersected with C_mu.
struct ModelSpec {
    Eigen::Index n = 1;
    Eigen::Index s = 1;
    std::optional<double> mu;
    SparsityFlavor flavor = SparsityFlavor::exact;
    Side side = Side::left;

    /// Throws ValidationError naming the offending field.
    void validate() const;
};

/// Entries with modulus at or below this fraction of ||x||_inf count as zero.
inline constexpr double kZeroTolerance = 1e-12;
/// Slack allowed on flatness constraints after floating-point projection.
inline constexpr double kFlatnessSlack = 1e-9;

/// n ||Fx||_inf^2 / ||Fx||_2^2, in [1, n]. DomainError for the zero vector.
double spectral_flatness(const Signal& x);

bool in_gamma(const Signal& x, Eigen::Index s);

/// ||x||_1 <= sqrt(s) ||x||_2. DomainError for the zero vector.
bool in_tilde_gamma(const Signal& x, Eigen::Index s);

/// Membership in the set described by `spec` (sparsity flavor plus optional flatness bound).
bool satisfies(const Signal& x, const ModelSpec& spec);

/// Indices of the entries counted as nonzero by in_gamma.
std::vector<Eigen::Index> support(const CVec& x);

/// Keeps the s largest-modulus entries (ties go to the lower index), zeroes the rest.
CVec hard_threshold(const CVec& x, Eigen::Index s);
Signal hard_threshold(const Signal& x, Eigen::Index s);

/// Feasibility map into C_mu that preserves ||x||_2 and the DFT phases of nonzero bins.
/// Identity when x already satisfies the bound. Throws DomainError for zero x or mu outside
/// [1, n], and NumericError (carrying the last iterate) when the refinement cap is hit.
Signal project_flat(const Signal& x, double mu, int max_rounds = 100);

struct SamplerLimits {
    int rounds = 50;          // alternations of project_flat and hard_threshold per support
    int support_retries = 20;  // fresh supports before giving up
    bool spike_repair = true;  // blend toward the dominant spike when alternation stalls
};

/// Unit-norm draw from the model set described by `spec`.
/// Throws NumericError when joint membership cannot be reached within the limits.
Signal sample_model(const ModelSpec& spec, Rng& rng, const SamplerLimits& limits = {});

/// Returns a unit vector built from u_hat that is orthogonal to u and still satisfies `spec`.
/// Throws DomainError when u_hat is parallel to u, NumericError when the membership loop fails.
Signal orthogonalize_pair(const Signal& u, const Signal& u_hat, const ModelSpec& spec,
                          int max_rounds = 50);

}  // namespace sbd
