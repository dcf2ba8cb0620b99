#include <doctest.h>

#include "oracles.hpp"
#include "sbd/dft.hpp"
#include "sbd/operator.hpp"

#include <algorithm>
#include <cmath>
#include <set>

using namespace sbd;

namespace {

Ensemble random_ensemble(Eigen::Index n, Eigen::Index m, std::uint64_t seed,
                         OmegaMode mode = OmegaMode::without_replacement) {
    return Ensemble::generate(n, m, DictionaryKind::gaussian, DictionaryKind::gaussian, seed, mode);
}

double rel(const CVec& a, const CVec& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace

TEST_CASE("sample_omega") {
    Rng rng(1);
    auto perm = sample_omega(8, 8, OmegaMode::without_replacement, rng);
    std::sort(perm.begin(), perm.end());
    for (Eigen::Index i = 0; i < 8; ++i) CHECK(perm[static_cast<std::size_t>(i)] == i);

    const auto three = sample_omega(8, 3, OmegaMode::without_replacement, rng);
    CHECK(std::set<Eigen::Index>(three.begin(), three.end()).size() == 3);

    Rng a(42);
    Rng b(42);
    CHECK(sample_omega(4, 2, OmegaMode::iid_uniform, a) == sample_omega(4, 2, OmegaMode::iid_uniform, b));

    // repeats are allowed in the i.i.d. mode
    bool repeated = false;
    for (int t = 0; t < 100 && !repeated; ++t) {
        const auto idx = sample_omega(4, 4, OmegaMode::iid_uniform, rng);
        repeated = std::set<Eigen::Index>(idx.begin(), idx.end()).size() < 4;
    }
    CHECK(repeated);

    CHECK_THROWS_AS(sample_omega(4, 5, OmegaMode::without_replacement, rng), ValidationError);
}

TEST_CASE("ensemble seed determinism and serialization") {
    const auto a = random_ensemble(16, 6, 77);
    const auto b = random_ensemble(16, 6, 77);
    CHECK(a.omega() == b.omega());
    CHECK(a.phi_matrix() == b.phi_matrix());
    CHECK(a.psi_matrix() == b.psi_matrix());
    CHECK(random_ensemble(16, 6, 78).phi_matrix() != a.phi_matrix());

    const auto c = Ensemble::from_json(a.to_json());
    CHECK(c.omega() == a.omega());
    CHECK(c.phi_matrix() == a.phi_matrix());
    CHECK(c.psi_matrix() == a.psi_matrix());
    CHECK(c.to_json() == a.to_json());
    CHECK(a.to_json().find("\"omega\":[") != std::string::npos);

    CHECK_THROWS_AS(Ensemble::from_json(R"({"n":4,"m":1,"omega":[1],"phi_kind":"identity","psi_kind":"identity","seed":1,"extra":0})"),
                    ValidationError);
    CHECK_THROWS_AS(Ensemble::from_json(R"({"n":4,"m":2,"omega":[1],"phi_kind":"identity","psi_kind":"identity","seed":1})"),
                    ValidationError);
    CHECK_THROWS_AS(Ensemble::from_json(R"({"n":4,"m":1,"omega":[5],"phi_kind":"identity","psi_kind":"identity","seed":1})"),
                    ValidationError);
}

TEST_CASE("gaussian dictionaries have CN(0, 1/n) entries") {
    Rng rng(2);
    const CMat phi = gaussian_dictionary(200, rng);
    const double mean_sq = phi.cwiseAbs2().mean();
    CHECK(mean_sq == doctest::Approx(1.0 / 200.0).epsilon(0.02));
    CHECK(std::abs(phi.mean()) < 0.002);
    // real and imaginary parts carry equal variance
    CHECK(phi.real().squaredNorm() == doctest::Approx(phi.imag().squaredNorm()).epsilon(0.03));
}

TEST_CASE("forward") {
    SUBCASE("delta convolution with identity dictionaries") {
        Rng rng(0);
        const Ensemble ens(8, sample_omega(8, 4, OmegaMode::without_replacement, rng), std::nullopt,
                           std::nullopt);
        const CVec b = forward(ens, Signal::basis(8, 0).entries(), Signal::basis(8, 0).entries());
        for (Eigen::Index l = 0; l < 4; ++l) {
            const double expected = ens.omega()[static_cast<std::size_t>(l)] == 0 ? std::sqrt(2.0) : 0.0;
            CHECK(std::abs(b(l) - expected) <= 1e-14);
        }
    }
    SUBCASE("agrees with direct circular convolution for n <= 128") {
        Rng rng(10);
        for (Eigen::Index n : {1, 2, 3, 7, 16, 31, 64, 100, 128}) {
            const Eigen::Index m = std::max<Eigen::Index>(1, n / 2);
            const auto ens = random_ensemble(n, m, 1000 + static_cast<std::uint64_t>(n));
            const CVec u = complex_gaussian_vector(rng, n);
            const CVec v = complex_gaussian_vector(rng, n);
            const CVec expected =
                oracle::naive_forward(ens.phi_matrix(), ens.psi_matrix(), ens.omega(), u, v);
            CHECK(rel(forward(ens, u, v), expected) <= 1e-10);
        }
    }
    SUBCASE("bilinearity") {
        Rng rng(12);
        const auto ens = random_ensemble(32, 10, 5);
        const CVec u = complex_gaussian_vector(rng, 32);
        const CVec v = complex_gaussian_vector(rng, 32);
        const cplx alpha(0.3, -1.2);
        const cplx beta(-2.0, 0.5);
        CHECK(rel(forward(ens, alpha * u, beta * v), alpha * beta * forward(ens, u, v)) <= 1e-12);
        const CVec u2 = complex_gaussian_vector(rng, 32);
        CHECK(rel(forward(ens, u + u2, v), forward(ens, u, v) + forward(ens, u2, v)) <= 1e-12);
    }
    SUBCASE("dimension mismatch") {
        const auto ens = random_ensemble(8, 4, 3);
        CHECK_THROWS_AS(forward(ens, CVec::Ones(7), CVec::Ones(8)), ValidationError);
    }
}

TEST_CASE("measurement_matrix") {
    SUBCASE("identity dictionaries reproduce the sampled convolution") {
        Rng rng(14);
        const Ensemble ens(4, sample_omega(4, 3, OmegaMode::without_replacement, rng), std::nullopt,
                           std::nullopt);
        const CVec u = complex_gaussian_vector(rng, 4);
        const CVec v = complex_gaussian_vector(rng, 4);
        const CVec conv = oracle::naive_circular_convolution(u, v);
        for (Eigen::Index l = 0; l < 3; ++l) {
            const cplx expected = std::sqrt(4.0 / 3.0) * conv(ens.omega()[static_cast<std::size_t>(l)]);
            CHECK(std::abs(oracle::inner(measurement_matrix(ens, l), u * v.transpose()) - expected) <= 1e-12);
        }
    }
    SUBCASE("elementary matrices pick conjugated entries") {
        const auto ens = random_ensemble(6, 3, 9);
        const CMat m0 = measurement_matrix(ens, 1);
        for (Eigen::Index i = 0; i < 6; ++i)
            for (Eigen::Index j = 0; j < 6; ++j) {
                CMat e = CMat::Zero(6, 6);
                e(i, j) = 1.0;
                CHECK(std::abs(oracle::inner(m0, e) - std::conj(m0(i, j))) <= 1e-14);
            }
    }
    SUBCASE("entrywise agreement with forward at n = 16") {
        Rng rng(15);
        const auto ens = random_ensemble(16, 7, 21);
        for (int t = 0; t < 10; ++t) {
            const CVec u = complex_gaussian_vector(rng, 16);
            const CVec v = complex_gaussian_vector(rng, 16);
            const CVec b = forward(ens, u, v);
            for (Eigen::Index l = 0; l < 7; ++l)
                CHECK(std::abs(oracle::inner(measurement_matrix(ens, l), u * v.transpose()) - b(l)) <=
                      1e-10 * b.norm());
        }
    }
    SUBCASE("deterministic under a fixed seed") {
        const auto a = random_ensemble(8, 4, 31);
        const auto b = random_ensemble(8, 4, 31);
        double fa = 0.0;
        double fb = 0.0;
        for (Eigen::Index l = 0; l < 4; ++l) {
            fa += measurement_matrix(a, l).squaredNorm();
            fb += measurement_matrix(b, l).squaredNorm();
        }
        CHECK(std::isfinite(fa));
        CHECK(fa == fb);
    }
    SUBCASE("guards") {
        const auto big = Ensemble::generate(300, 2, DictionaryKind::identity, DictionaryKind::identity, 1);
        CHECK_THROWS_AS(measurement_matrix(big, 0), ValidationError);
        const auto ens = random_ensemble(6, 3, 9);
        CHECK_THROWS_AS(measurement_matrix(ens, 3), ValidationError);
    }
}

TEST_CASE("adjoint_apply") {
    SUBCASE("zero measurement") {
        const auto ens = random_ensemble(8, 3, 1);
        CHECK(adjoint_apply(ens, CVec::Zero(3)).norm() == 0.0);
    }
    SUBCASE("inner-product balance at n = 12, m = 5") {
        Rng rng(16);
        const auto ens = random_ensemble(12, 5, 17);
        for (int t = 0; t < 100; ++t) {
            const CMat x = complex_gaussian_matrix(rng, 12, 12);
            const CVec b = complex_gaussian_vector(rng, 5);
            const cplx lhs = forward_matrix(ens, x).dot(b);
            const cplx rhs = oracle::inner(x, adjoint_apply(ens, b));
            CHECK(std::abs(lhs - rhs) <= 1e-10 * x.norm() * b.norm());
        }
    }
    SUBCASE("equals the explicit sum of measurement matrices") {
        Rng rng(18);
        for (auto mode : {OmegaMode::without_replacement, OmegaMode::iid_uniform}) {
            const auto ens = random_ensemble(8, 6, 19, mode);
            const CVec b = complex_gaussian_vector(rng, 6);
            CMat expected = CMat::Zero(8, 8);
            for (Eigen::Index l = 0; l < 6; ++l) expected += b(l) * measurement_matrix(ens, l);
            CHECK((adjoint_apply(ens, b) - expected).norm() <= 1e-10 * expected.norm());
        }
    }
    SUBCASE("implicit actions match the dense matrix") {
        Rng rng(20);
        const auto ens = random_ensemble(20, 9, 23);
        const CVec b = complex_gaussian_vector(rng, 9);
        const CMat dense = adjoint_apply(ens, b);
        const AdjointImage image(ens, b);
        for (int t = 0; t < 10; ++t) {
            const CVec w = complex_gaussian_vector(rng, 20);
            CHECK(rel(image.apply(w), dense * w) <= 1e-11);
            CHECK(rel(image.apply_adjoint(w), dense.adjoint() * w) <= 1e-11);
        }
    }
}

TEST_CASE("partial_forward") {
    Rng rng(24);
    const auto ens = random_ensemble(32, 12, 25);
    const CVec fixed = complex_gaussian_vector(rng, 32);
    for (auto side : {Side::left, Side::right}) {
        const auto op = partial_forward(ens, side, fixed);
        for (int t = 0; t < 100; ++t) {
            const CVec x = complex_gaussian_vector(rng, 32);
            const CVec expected = side == Side::left ? forward(ens, x, fixed) : forward(ens, fixed, x);
            CHECK(rel(op.apply(x), expected) <= 1e-12);

            const CVec b = complex_gaussian_vector(rng, 12);
            CHECK(std::abs(op.apply(x).dot(b) - x.dot(op.adjoint_apply(b))) <= 1e-10 * x.norm() * b.norm());

            const CVec x2 = complex_gaussian_vector(rng, 32);
            CHECK(rel(op.apply(x + x2), op.apply(x) + op.apply(x2)) <= 1e-12);
        }
    }
    CHECK_THROWS_AS(partial_forward(ens, Side::left, CVec::Zero(32)), DomainError);
}

TEST_CASE("r_matrix") {
    Rng rng(26);
    SUBCASE("R xi reproduces forward at n = 8") {
        const auto ens = random_ensemble(8, 5, 27);
        const CVec xi = chaos_vector(ens);
        for (int t = 0; t < 20; ++t) {
            const LiftedPoint p{complex_gaussian_vector(rng, 8), complex_gaussian_vector(rng, 8)};
            CHECK((r_matrix(ens, p) * xi - forward(ens, p)).norm() <= 1e-10 * forward(ens, p).norm());
        }
    }
    SUBCASE("Frobenius identity (n/m) ||S F^* D||_F^2 = ||F Psi v||^2") {
        for (auto mode : {OmegaMode::without_replacement, OmegaMode::iid_uniform}) {
            const auto ens = random_ensemble(16, 6, 28, mode);
            for (int t = 0; t < 20; ++t) {
                const CVec v = complex_gaussian_vector(rng, 16);
                const double lhs = sampled_convolution_block(ens, v).squaredNorm();
                const double rhs = dft::forward(ens.apply_psi(v)).squaredNorm();
                CHECK(std::abs(lhs - rhs) <= 1e-10 * rhs);
            }
        }
    }
    SUBCASE("spectral norm factorizes as ||u|| times the block norm") {
        const auto ens = random_ensemble(8, 4, 29);
        const LiftedPoint p{complex_gaussian_vector(rng, 8), complex_gaussian_vector(rng, 8)};
        const double full = Eigen::JacobiSVD<CMat>(r_matrix(ens, p)).singularValues()(0);
        const double block = Eigen::JacobiSVD<CMat>(sampled_convolution_block(ens, p.v)).singularValues()(0);
        CHECK(full == doctest::Approx(p.u.norm() * block).epsilon(1e-10));
    }
    SUBCASE("guard") {
        const auto ens = Ensemble::generate(65, 4, DictionaryKind::identity, DictionaryKind::identity, 1);
        CHECK_THROWS_AS(r_matrix(ens, {CVec::Ones(65), CVec::Ones(65)}), ValidationError);
    }
}
