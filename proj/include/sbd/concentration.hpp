// Monte Carlo estimates of restricted isometry / angle-preserving / orthogonality constants of
// the lifted operator, plus exact checks of the algebraic identities behind them.
//
// Every estimate is a sample maximum and therefore a lower bound on the true restricted
// supremum. Trials draw from per-trial seeds (trial_seed(base, t)) and are reduced in trial
// order, so reports do not depend on the worker count.
#pragma once

#include "sbd/operator.hpp"
#include "sbd/signal_models.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace sbd {

struct Witness {
    std::size_t trial = 0;
    CVec u, u_hat, v, v_hat;
};

struct EstimateReport {
    std::string kind;  // rip | rap | rop-both | rop-either | rip-matrix
    Eigen::Index n = 0;
    Eigen::Index m = 0;
    Eigen::Index s1 = 0;
    Eigen::Index s2 = 0;
    std::optional<double> mu1;
    std::optional<double> mu2;

    double delta_hat = 0.0;
    int trials = 0;
    double q50 = 0.0;
    double q90 = 0.0;
    double q99 = 0.0;
    double max_standard_error = 0.0;  // bootstrap standard error of the sample maximum
    int resampled = 0;                 // ROP draws that needed a fresh u_hat / v_hat
    int failed = 0;                    // trials with no admissible sample (excluded from values)
    double max_orthogonality_residual = 0.0;  // ROP: max relative |<u, u_hat>|, |<v, v_hat>| enforced
    Witness witness;
    std::uint64_t seed = 0;
    double wall_time = 0.0;

    std::vector<double> values;  // per-trial deviations in trial order
};

struct EstimatorOptions {
    int trials = 1000;
    std::uint64_t seed = 0;
    int workers = 1;
};

enum class Orthogonality { both, either };

/// max over sampled u v^T of | ||A(u v^T)||^2 - ||u v^T||_F^2 | / ||u v^T||_F^2
EstimateReport estimate_rip(const Ensemble& ens, const ModelSpec& spec_u, const ModelSpec& spec_v,
                            const EstimatorOptions& opts);

/// Same statistic for a plain m x n matrix over the vectors of `spec`.
EstimateReport estimate_rip_matrix(const CMat& a, const ModelSpec& spec, const EstimatorOptions& opts);

/// max | <A(u_hat v_hat^T), A(u v^T)> - <u_hat v_hat^T, u v^T> | / (||u_hat v_hat^T||_F ||u v^T||_F).
/// With force_diagonal the sampled u_hat, v_hat are replaced by u, v; the statistic then matches
/// estimate_rip on the same sample stream.
EstimateReport estimate_rap(const Ensemble& ens, const ModelSpec& spec_u, const ModelSpec& spec_v,
                            const EstimatorOptions& opts, bool force_diagonal = false);

/// max | <A(u_hat v_hat^T), A(u v^T)> | / norms over orthogonalized pairs.
/// `both`: <u, u_hat> = 0 and <v, v_hat> = 0. `either`: exactly one of them, alternating by
/// trial parity (even trials orthogonalize the u side).
/// With `decoupled`, each trial draws i.i.d. copies Phi~, Psi~ and evaluates
/// < A_{Phi~,Psi}(u_hat v_hat^T), A_{Phi,Psi~}(u v^T) >.
EstimateReport estimate_rop(const Ensemble& ens, const ModelSpec& spec_u, const ModelSpec& spec_v,
                            const EstimatorOptions& opts, Orthogonality orthogonality,
                            bool decoupled = false);

/// Signed value <A'(u_hat v_hat^T), A''(u v^T)> / norms for a single 4-tuple; the building block
/// of the RAP/ROP estimators, exposed for replay and distribution tests.
cplx cross_correlation(const Ensemble& hat_side, const Ensemble& plain_side, const CVec& u,
                       const CVec& u_hat, const CVec& v, const CVec& v_hat);

struct IsotropyResult {
    double rel_error = 0.0;
    int draws = 0;
    CMat mean;
    CMat target;
};

/// Averages A^*A(X) over `draws` fresh Gaussian Phi (Omega and Psi fixed from `seed`) and
/// compares against X (Psi^* Psi)^T. With `mirrored`, averages over Psi with Phi fixed and
/// compares against Phi^* Phi X. Requires n <= 64.
IsotropyResult isotropy_check(Eigen::Index n, Eigen::Index m, DictionaryKind fixed_kind,
                              const CMat& x, int draws, std::uint64_t seed, bool mirrored = false,
                              OmegaMode mode = OmegaMode::without_replacement);

/// Wiring of the unit-root weights inside the norm terms.
enum class PolarizationWiring { alpha, conj_alpha };

/// | <M' xi, M xi> - (1/4) sum_{alpha in {1,-1,i,-i}} alpha ||(M + w(alpha) M') xi||^2 |
/// with w(alpha) = alpha (the exact identity for <a, b> = a^* b) or conj(alpha).
double polarization_residual(const CMat& m_prime, const CMat& m, const CVec& xi,
                             PolarizationWiring wiring = PolarizationWiring::alpha);

/// Exact (Gamma_s, delta)-RIP constant by support enumeration. Requires n <= 16 and s <= 4.
double exact_rip_small(const CMat& a, Eigen::Index s);

/// Linear-interpolation quantile of an unsorted sample.
double quantile(std::vector<double> values, double q);

}  // namespace sbd
