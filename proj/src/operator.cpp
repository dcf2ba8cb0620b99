#include "sbd/operator.hpp"

#include "sbd/dft.hpp"

#include <json.hpp>

#include <cmath>
#include <numeric>
#include <string>

namespace sbd {

std::string_view to_string(DictionaryKind k) {
    return k == DictionaryKind::gaussian ? "gaussian" : "identity";
}

std::string_view to_string(OmegaMode m) {
    return m == OmegaMode::iid_uniform ? "iid_uniform" : "without_replacement";
}

DictionaryKind parse_dictionary_kind(std::string_view text) {
    if (text == "gaussian") return DictionaryKind::gaussian;
    if (text == "identity") return DictionaryKind::identity;
    throw ValidationError("dictionary kind: expected gaussian|identity, got '" +
                          std::string(text) + "'");
}

OmegaMode parse_omega_mode(std::string_view text) {
    if (text == "iid_uniform") return OmegaMode::iid_uniform;
    if (text == "without_replacement") return OmegaMode::without_replacement;
    throw ValidationError("omega mode: expected iid_uniform|without_replacement, got '" +
                          std::string(text) + "'");
}

std::vector<Eigen::Index> sample_omega(Eigen::Index n, Eigen::Index m, OmegaMode mode, Rng& rng) {
    if (n < 1 || m < 1) throw ValidationError("sample_omega: n and m must be positive");
    if (mode == OmegaMode::iid_uniform) {
        std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(m));
        for (auto& i : idx) i = pick(rng);
        return idx;
    }
    if (m > n) throw ValidationError("sample_omega: m > n without replacement");
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    for (Eigen::Index k = 0; k < m; ++k) {
        std::uniform_int_distribution<Eigen::Index> pick(k, n - 1);
        std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(rng))]);
    }
    idx.resize(static_cast<std::size_t>(m));
    return idx;
}

CMat gaussian_dictionary(Eigen::Index n, Rng& rng) {
    return complex_gaussian_matrix(rng, n, n, 1.0 / static_cast<double>(n));
}

namespace {

// Independent streams so that Omega never shifts the dictionary draws.
constexpr std::uint64_t kOmegaStream = 0;
constexpr std::uint64_t kPhiStream = 1;
constexpr std::uint64_t kPsiStream = 2;

std::optional<CMat> draw_dictionary(DictionaryKind kind, Eigen::Index n, std::uint64_t seed,
                                    std::uint64_t stream) {
    if (kind == DictionaryKind::identity) return std::nullopt;
    Rng rng(trial_seed(seed, stream));
    return gaussian_dictionary(n, rng);
}

}  // namespace

Ensemble Ensemble::generate(Eigen::Index n, Eigen::Index m, DictionaryKind phi_kind,
                            DictionaryKind psi_kind, std::uint64_t seed, OmegaMode mode) {
    if (m > n) throw ValidationError("ensemble: m must not exceed n");
    Rng omega_rng(trial_seed(seed, kOmegaStream));
    auto omega = sample_omega(n, m, mode, omega_rng);
    return Ensemble(n, std::move(omega), draw_dictionary(phi_kind, n, seed, kPhiStream),
                    draw_dictionary(psi_kind, n, seed, kPsiStream), seed);
}

Ensemble::Ensemble(Eigen::Index n, std::vector<Eigen::Index> omega, std::optional<CMat> phi,
                   std::optional<CMat> psi, std::uint64_t seed)
    : n_(n), omega_(std::move(omega)), phi_(std::move(phi)), psi_(std::move(psi)), seed_(seed) {
    if (n_ < 1) throw ValidationError("ensemble: n must be positive");
    if (omega_.empty()) throw ValidationError("ensemble: omega must be nonempty");
    for (const auto i : omega_)
        if (i < 0 || i >= n_) throw ValidationError("ensemble: omega index out of range");
    for (const auto* d : {&phi_, &psi_})
        if (*d && ((*d)->rows() != n_ || (*d)->cols() != n_))
            throw ValidationError("ensemble: dictionaries must be n x n");
}

CMat Ensemble::phi_matrix() const { return phi_ ? *phi_ : CMat(CMat::Identity(n_, n_)); }
CMat Ensemble::psi_matrix() const { return psi_ ? *psi_ : CMat(CMat::Identity(n_, n_)); }

CVec Ensemble::scatter(const CVec& b) const {
    CVec z = CVec::Zero(n_);
    for (std::size_t l = 0; l < omega_.size(); ++l)
        z(omega_[l]) += b(static_cast<Eigen::Index>(l));
    return z;
}

CVec Ensemble::gather(const CVec& x) const {
    CVec out(m());
    for (std::size_t l = 0; l < omega_.size(); ++l)
        out(static_cast<Eigen::Index>(l)) = x(omega_[l]);
    return out;
}

std::string Ensemble::to_json() const {
    nlohmann::ordered_json j;
    j["n"] = n_;
    j["m"] = m();
    std::vector<Eigen::Index> one_based(omega_);
    for (auto& i : one_based) ++i;
    j["omega"] = one_based;
    j["phi_kind"] = std::string(to_string(phi_kind()));
    j["psi_kind"] = std::string(to_string(psi_kind()));
    j["seed"] = seed_;
    return j.dump();
}

Ensemble Ensemble::from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("ensemble record: ") + e.what());
    }
    for (const char* key : {"n", "m", "omega", "phi_kind", "psi_kind", "seed"})
        if (!j.contains(key)) throw ValidationError(std::string("ensemble record: missing ") + key);
    for (const auto& item : j.items()) {
        const auto& k = item.key();
        if (k != "n" && k != "m" && k != "omega" && k != "phi_kind" && k != "psi_kind" && k != "seed")
            throw ValidationError("ensemble record: unknown key " + k);
    }
    const auto n = j["n"].get<Eigen::Index>();
    auto omega = j["omega"].get<std::vector<Eigen::Index>>();
    if (static_cast<Eigen::Index>(omega.size()) != j["m"].get<Eigen::Index>())
        throw ValidationError("ensemble record: m does not match |omega|");
    for (auto& i : omega) --i;
    const auto seed = j["seed"].get<std::uint64_t>();
    const auto phi_kind = parse_dictionary_kind(j["phi_kind"].get<std::string>());
    const auto psi_kind = parse_dictionary_kind(j["psi_kind"].get<std::string>());
    return Ensemble(n, std::move(omega), draw_dictionary(phi_kind, n, seed, kPhiStream),
                    draw_dictionary(psi_kind, n, seed, kPsiStream), seed);
}

Ensemble Ensemble::with_dictionaries(std::optional<CMat> phi, std::optional<CMat> psi) const {
    return Ensemble(n_, omega_, std::move(phi), std::move(psi), seed_);
}

namespace {

double lifted_scale(const Ensemble& ens) {
    // n / sqrt(m): sqrt(n/m) from the sampling normalization times sqrt(n) from the
    // unitary-DFT convolution theorem.
    return static_cast<double>(ens.n()) / std::sqrt(static_cast<double>(ens.m()));
}

void check_length(const CVec& x, Eigen::Index n, const char* what) {
    if (x.size() != n) throw ValidationError(std::string(what) + ": dimension mismatch");
}

}  // namespace

CVec forward(const Ensemble& ens, const CVec& u, const CVec& v) {
    check_length(u, ens.n(), "forward(u)");
    check_length(v, ens.n(), "forward(v)");
    const CVec fx = dft::forward(ens.apply_phi(u));
    const CVec fy = dft::forward(ens.apply_psi(v));
    return lifted_scale(ens) * ens.gather(dft::inverse(fx.cwiseProduct(fy)));
}

CVec forward(const Ensemble& ens, const LiftedPoint& p) { return forward(ens, p.u, p.v); }

CVec forward_matrix(const Ensemble& ens, const CMat& x) {
    if (x.rows() != ens.n() || x.cols() != ens.n())
        throw ValidationError("forward_matrix: dimension mismatch");
    CVec out = CVec::Zero(ens.m());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        CVec e = CVec::Zero(ens.n());
        e(j) = 1.0;
        out += forward(ens, x.col(j), e);
    }
    return out;
}

namespace {

void check_explicit_guard(const Ensemble& ens, const char* what) {
    if (ens.n() > kMaxExplicitN)
        throw ValidationError(std::string(what) +
                              ": n exceeds the explicit-matrix guard; use the implicit operators");
}

// conj(F Psi), column by column.
CMat conj_fourier_psi(const Ensemble& ens) {
    const CMat psi = ens.psi_matrix();
    CMat out(ens.n(), ens.n());
    for (Eigen::Index j = 0; j < ens.n(); ++j) out.col(j) = dft::forward(psi.col(j)).conjugate();
    return out;
}

// Phi^* F^* D_g C for an n x n matrix C.
CMat phi_adjoint_fourier_diag(const Ensemble& ens, const CVec& g, const CMat& c) {
    CMat out(ens.n(), c.cols());
    for (Eigen::Index j = 0; j < c.cols(); ++j)
        out.col(j) = ens.apply_phi_adjoint(dft::inverse(g.cwiseProduct(c.col(j))));
    return out;
}

}  // namespace

CMat measurement_matrix(const Ensemble& ens, Eigen::Index ell) {
    check_explicit_guard(ens, "measurement_matrix");
    if (ell < 0 || ell >= ens.m()) throw ValidationError("measurement_matrix: ell out of range");
    const CMat f = dft::matrix(ens.n());
    const CVec f_col = f.col(ens.omega()[static_cast<std::size_t>(ell)]);
    return lifted_scale(ens) * phi_adjoint_fourier_diag(ens, f_col, conj_fourier_psi(ens));
}

CMat adjoint_apply(const Ensemble& ens, const CVec& b) {
    check_explicit_guard(ens, "adjoint_apply");
    check_length(b, ens.m(), "adjoint_apply(b)");
    const CVec g = dft::forward(ens.scatter(b));
    return lifted_scale(ens) * phi_adjoint_fourier_diag(ens, g, conj_fourier_psi(ens));
}

AdjointImage::AdjointImage(const Ensemble& ens, const CVec& b)
    : ens_(&ens), scale_(lifted_scale(ens)) {
    check_length(b, ens.m(), "AdjointImage(b)");
    g_ = dft::forward(ens.scatter(b));
}

CVec AdjointImage::apply(const CVec& w) const {
    check_length(w, ens_->n(), "AdjointImage::apply");
    const CVec fpsi = dft::forward(ens_->apply_psi(w.conjugate())).conjugate();
    return scale_ * ens_->apply_phi_adjoint(dft::inverse(g_.cwiseProduct(fpsi)));
}

CVec AdjointImage::apply_adjoint(const CVec& w) const {
    check_length(w, ens_->n(), "AdjointImage::apply_adjoint");
    const CVec t = dft::forward(g_.conjugate().cwiseProduct(dft::forward(ens_->apply_phi(w))));
    // Psi^T t = conj(Psi^* conj(t))
    return scale_ * ens_->apply_psi_adjoint(t.conjugate()).conjugate();
}

PartialOperator::PartialOperator(const Ensemble& ens, Side side, const CVec& fixed)
    : ens_(&ens), side_(side), scale_(lifted_scale(ens)) {
    check_length(fixed, ens.n(), "partial_forward(fixed)");
    if (fixed.cwiseAbs().maxCoeff() == 0.0)
        throw DomainError("partial_forward: fixed factor is zero");
    fixed_spectrum_ = dft::forward(side == Side::left ? ens.apply_psi(fixed) : ens.apply_phi(fixed));
}

CVec PartialOperator::apply(const CVec& x) const {
    check_length(x, ens_->n(), "PartialOperator::apply");
    const CVec mapped = side_ == Side::left ? ens_->apply_phi(x) : ens_->apply_psi(x);
    const CVec prod = fixed_spectrum_.cwiseProduct(dft::forward(mapped));
    return scale_ * ens_->gather(dft::inverse(prod));
}

CVec PartialOperator::adjoint_apply(const CVec& b) const {
    check_length(b, ens_->m(), "PartialOperator::adjoint_apply");
    const CVec t = dft::inverse(
        fixed_spectrum_.conjugate().cwiseProduct(dft::forward(ens_->scatter(b))));
    return scale_ * (side_ == Side::left ? ens_->apply_phi_adjoint(t) : ens_->apply_psi_adjoint(t));
}

PartialOperator partial_forward(const Ensemble& ens, Side side, const CVec& fixed) {
    return PartialOperator(ens, side, fixed);
}

CMat sampled_convolution_block(const Ensemble& ens, const CVec& v) {
    check_explicit_guard(ens, "sampled_convolution_block");
    check_length(v, ens.n(), "sampled_convolution_block(v)");
    const CVec d = dft::forward(ens.apply_psi(v));
    const double scale = std::sqrt(static_cast<double>(ens.n()) / static_cast<double>(ens.m()));
    CMat block(ens.m(), ens.n());
    // column k of F^* D_d is d_k times column k of F^*
    const CMat f_adj = dft::matrix(ens.n()).adjoint();
    for (Eigen::Index k = 0; k < ens.n(); ++k)
        block.col(k) = scale * d(k) * ens.gather(f_adj.col(k));
    return block;
}

CMat r_matrix(const Ensemble& ens, const LiftedPoint& p) {
    if (ens.n() > kMaxRMatrixN)
        throw ValidationError("r_matrix: n exceeds the R-matrix guard (64)");
    check_length(p.u, ens.n(), "r_matrix(u)");
    const CMat block = sampled_convolution_block(ens, p.v);
    const auto n = ens.n();
    CMat r(ens.m(), n * n);
    for (Eigen::Index j = 0; j < n; ++j) r.middleCols(j * n, n) = p.u(j) * block;
    return r;
}

CVec chaos_vector(const Ensemble& ens) {
    const auto n = ens.n();
    const CMat phi = ens.phi_matrix();
    CVec xi(n * n);
    const double root_n = std::sqrt(static_cast<double>(n));
    for (Eigen::Index j = 0; j < n; ++j) xi.segment(j * n, n) = root_n * dft::forward(phi.col(j));
    return xi;
}

}  // namespace sbd
