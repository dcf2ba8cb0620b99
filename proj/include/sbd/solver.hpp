// Recovery of (u, v) from b = A(u v^T): spectral initialization followed by alternating
// least squares with hard thresholding, and the lifted success criterion.
#pragma once

#include "sbd/operator.hpp"
#include "sbd/signal_models.hpp"

#include <optional>
#include <vector>

namespace sbd {

enum class InitMethod {
    restricted,    // leading pair of A^*(b) restricted to the rows/columns with most s-sparse energy
    leading_pair,  // leading pair of the full A^*(b), then hard thresholding
};

struct SolveOptions {
    int max_outer_iters = 100;
    int inner_max_iters = 200;
    double inner_tol = 1e-10;
    double outer_tol = 1e-8;
    Eigen::Index s1 = 1;
    Eigen::Index s2 = 1;
    bool enforce_flatness = false;
    std::optional<double> mu1;
    std::optional<double> mu2;
    InitMethod init = InitMethod::restricted;
    std::uint64_t seed = 0;  // only used by the power iteration start vector (n > 256)

    void validate(Eigen::Index n) const;
};

/// Residuals around one half-step (one factor updated with the other fixed).
struct HalfStep {
    Side side = Side::left;
    double before = 0.0;  // ||A(u v^T) - b|| entering the half-step
    double ls = 0.0;      // after the unconstrained least-squares solve, before thresholding
    double after = 0.0;   // after thresholding and the support-restricted refit
};

struct SolveResult {
    Signal u_hat;
    Signal v_hat;
    std::optional<double> relative_error;  // set when the truth is supplied
    int iterations = 0;
    bool converged = false;
    double residual_norm = 0.0;  // ||A(u_hat v_hat^T) - b|| at exit
    std::vector<HalfStep> history;

    LiftedPoint lifted() const { return {u_hat.entries(), v_hat.entries()}; }
};

/// Rank-1 sparse estimate of A^*(b) ~ sigma u v^T (v is the conjugate right singular vector).
/// leading_pair: leading singular pair of A^*(b) (dense SVD at n <= 256, power iteration on the
/// implicit image otherwise), each factor hard-thresholded.
/// restricted (n <= 256, else falls back to leading_pair): keep the s1 rows whose s2 largest
/// entries carry the most energy and the s2 columns scored likewise, then take the leading pair
/// of that s1 x s2 block.
/// Both factors are returned with norm sqrt(sigma). DomainError for b = 0, ValidationError for
/// a length mismatch.
LiftedPoint spectral_init(const Ensemble& ens, const CVec& b, Eigen::Index s1, Eigen::Index s2,
                          std::uint64_t seed = 0, InitMethod method = InitMethod::restricted);

/// The dense step of spectral_init applied to an explicit image matrix.
LiftedPoint sparse_rank_one(const CMat& image, Eigen::Index s1, Eigen::Index s2,
                            InitMethod method = InitMethod::restricted);

/// Alternating minimization. Each half-step solves the least-squares problem in one factor by
/// CGLS (warm started at the current iterate), keeps the s largest entries, and refits on that
/// support. Stops when the relative change of u v^T drops below outer_tol.
/// NumericError (with the current u) if an inner solve breaks down.
SolveResult recover(const Ensemble& ens, const CVec& b, const SolveOptions& opts,
                    const std::optional<LiftedPoint>& truth = std::nullopt);

struct SuccessMetric {
    double rel_error = 0.0;    // ||X_hat - X||_F / ||X||_F
    double noise_ratio = 0.0;  // z_norm / ||A(X)||_2
};

/// Lifted error evaluated factor-wise (X is never materialized). `b` must have length m.
SuccessMetric success_metric(const LiftedPoint& p_hat, const LiftedPoint& p_true, const CVec& b,
                             double z_norm, const Ensemble& ens);

/// ||X_hat - X||_F / ||X||_F from factor inner products: with u_hat = c u + w, w orthogonal to u,
/// ||X_hat - X||^2 = ||u||^2 ||c v_hat - v||^2 + ||w||^2 ||v_hat||^2.
double lifted_relative_error(const LiftedPoint& p_hat, const LiftedPoint& p_true);

}  // namespace sbd
