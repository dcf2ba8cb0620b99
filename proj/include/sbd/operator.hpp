// The lifted subsampled-convolution operator
//
//   A(u v^T) = sqrt(n/m) S_Omega (Phi u (*) Psi v),
//
// its adjoint, the partial (one factor fixed) linear maps used by the solver, and explicit
// small-n matrices (M_l, R_{u,v}) used as oracles.
//
// Indices are 0-based in memory and 1-based in serialized records.
#pragma once

#include "sbd/signal_models.hpp"
#include "sbd/types.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sbd {

enum class DictionaryKind { gaussian, identity };
enum class OmegaMode { iid_uniform, without_replacement };

std::string_view to_string(DictionaryKind k);
std::string_view to_string(OmegaMode m);
DictionaryKind parse_dictionary_kind(std::string_view text);
OmegaMode parse_omega_mode(std::string_view text);

/// Sampling indices in [0, n). Throws ValidationError when m is out of range for the mode.
std::vector<Eigen::Index> sample_omega(Eigen::Index n, Eigen::Index m, OmegaMode mode, Rng& rng);

/// Dense n x n dictionary with entries i.i.d. CN(0, 1/n).
CMat gaussian_dictionary(Eigen::Index n, Rng& rng);

/// One measurement instance. Immutable after construction.
class Ensemble {
public:
    /// Draws Omega, Phi and Psi from independent streams derived from `seed`.
    static Ensemble generate(Eigen::Index n, Eigen::Index m, DictionaryKind phi_kind,
                             DictionaryKind psi_kind, std::uint64_t seed,
                             OmegaMode mode = OmegaMode::without_replacement);

    /// Explicit construction; an absent dictionary means identity.
    Ensemble(Eigen::Index n, std::vector<Eigen::Index> omega, std::optional<CMat> phi,
             std::optional<CMat> psi, std::uint64_t seed = 0);

    Eigen::Index n() const noexcept { return n_; }
    Eigen::Index m() const noexcept { return static_cast<Eigen::Index>(omega_.size()); }
    const std::vector<Eigen::Index>& omega() const noexcept { return omega_; }
    DictionaryKind phi_kind() const noexcept {
        return phi_ ? DictionaryKind::gaussian : DictionaryKind::identity;
    }
    DictionaryKind psi_kind() const noexcept {
        return psi_ ? DictionaryKind::gaussian : DictionaryKind::identity;
    }
    std::uint64_t seed() const noexcept { return seed_; }

    CVec apply_phi(const CVec& u) const { return phi_ ? CVec(*phi_ * u) : u; }
    CVec apply_psi(const CVec& v) const { return psi_ ? CVec(*psi_ * v) : v; }
    CVec apply_phi_adjoint(const CVec& x) const { return phi_ ? CVec(phi_->adjoint() * x) : x; }
    CVec apply_psi_adjoint(const CVec& y) const { return psi_ ? CVec(psi_->adjoint() * y) : y; }

    /// Stored dictionaries; nullopt means identity.
    const std::optional<CMat>& phi() const noexcept { return phi_; }
    const std::optional<CMat>& psi() const noexcept { return psi_; }

    /// Dense dictionaries (identity materialized on request).
    CMat phi_matrix() const;
    CMat psi_matrix() const;

    /// Adds each sample into its index: S_Omega^T b.
    CVec scatter(const CVec& b) const;
    /// Picks the sampled entries: S_Omega x.
    CVec gather(const CVec& x) const;

    /// {n, m, omega (1-based), phi_kind, psi_kind, seed}
    std::string to_json() const;
    /// Regenerates dictionaries from the stored seed.
    static Ensemble from_json(std::string_view text);

    /// Same Omega, fresh dictionaries (kinds preserved unless overridden).
    Ensemble with_dictionaries(std::optional<CMat> phi, std::optional<CMat> psi) const;

private:
    Eigen::Index n_;
    std::vector<Eigen::Index> omega_;
    std::optional<CMat> phi_;
    std::optional<CMat> psi_;
    std::uint64_t seed_;
};

/// Factored rank-1 point X = u v^T.
struct LiftedPoint {
    CVec u;
    CVec v;

    double frobenius_norm() const { return u.norm() * v.norm(); }
    CMat dense() const { return u * v.transpose(); }
};

/// Guards against accidental materialization.
inline constexpr Eigen::Index kMaxExplicitN = 256;
inline constexpr Eigen::Index kMaxRMatrixN = 64;

/// A(u v^T), O(n log n) plus the dictionary products.
CVec forward(const Ensemble& ens, const CVec& u, const CVec& v);
CVec forward(const Ensemble& ens, const LiftedPoint& p);

/// A(X) for a general n x n matrix, one rank-1 term per column.
CVec forward_matrix(const Ensemble& ens, const CMat& x);

/// M_l = (n / sqrt(m)) Phi^* F^* diag(f_{omega_l}) conj(F) conj(Psi), so that A(X)_l = <M_l, X>.
CMat measurement_matrix(const Ensemble& ens, Eigen::Index ell);

/// Dense A^*(b) = sum_l b_l M_l (n <= 256).
CMat adjoint_apply(const Ensemble& ens, const CVec& b);

/// Implicit A^*(b): exposes w -> (A^* b) w and w -> (A^* b)^* w at any n.
class AdjointImage {
public:
    AdjointImage(const Ensemble& ens, const CVec& b);

    CVec apply(const CVec& w) const;
    CVec apply_adjoint(const CVec& w) const;
    Eigen::Index n() const noexcept { return ens_->n(); }

private:
    const Ensemble* ens_;
    CVec g_;  // F S_Omega^T b
    double scale_;
};

/// The m x n linear map obtained by fixing one factor:
///   left:  u -> A(u fixed^T)
///   right: v -> A(fixed v^T)
class PartialOperator {
public:
    PartialOperator(const Ensemble& ens, Side side, const CVec& fixed);

    CVec apply(const CVec& x) const;
    CVec adjoint_apply(const CVec& b) const;

    Side side() const noexcept { return side_; }
    Eigen::Index rows() const noexcept { return ens_->m(); }
    Eigen::Index cols() const noexcept { return ens_->n(); }

private:
    const Ensemble* ens_;
    Side side_;
    CVec fixed_spectrum_;  // F (dictionary * fixed)
    double scale_;
};

PartialOperator partial_forward(const Ensemble& ens, Side side, const CVec& fixed);

/// sqrt(n/m) S_Omega F^* D_{F Psi v}, the m x n block of R_{u,v}.
CMat sampled_convolution_block(const Ensemble& ens, const CVec& v);

/// R_{u,v} = u^T (x) sqrt(n/m) S_Omega F^* D_{F Psi v}, an m x n^2 matrix (n <= 64).
CMat r_matrix(const Ensemble& ens, const LiftedPoint& p);

/// xi = sqrt(n) (I (x) F) vec(Phi), column-major vec, so that R_{u,v} xi = A(u v^T).
CVec chaos_vector(const Ensemble& ens);

}  // namespace sbd
