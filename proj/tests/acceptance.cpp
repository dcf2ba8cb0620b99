// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "sbd/concentration.hpp"
#include "sbd/entropy_bounds.hpp"
#include "sbd/harness.hpp"
#include "sbd/operator.hpp"
#include "sbd/signal_models.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace sbd;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c, d);
    return buf;
}

ModelSpec exact(Eigen::Index n, Eigen::Index s, std::optional<double> mu = std::nullopt,
                Side side = Side::left) {
    return {n, s, mu, SparsityFlavor::exact, side};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

double spectral_norm(const CMat& a) {
    // largest singular value via the small Gram matrix
    const CMat gram = a.rows() <= a.cols() ? CMat(a * a.adjoint()) : CMat(a.adjoint() * a);
    Eigen::SelfAdjointEigenSolver<CMat> eig(gram, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

// 1. <A(X), b> = <X, A*(b)> for random complex X and b.
Outcome adjoint_balance() {
    const auto ens = Ensemble::generate(12, 5, DictionaryKind::gaussian, DictionaryKind::gaussian, 101);
    Rng rng(1);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const CMat x = complex_gaussian_matrix(rng, 12, 12, 1.0);
        const CVec b = complex_gaussian_vector(rng, 5, 1.0);
        const cplx lhs = b.dot(forward_matrix(ens, x));
        const cplx rhs = adjoint_apply(ens, b).cwiseProduct(x.conjugate()).sum();
        worst = std::max(worst, std::abs(lhs - std::conj(rhs)) / (x.norm() * b.norm()));
    }
    return {worst <= 1e-10, fmt("max relative gap %.2e over 100 pairs", worst)};
}

// 2. Every sample equals <M_l, u v^T>, computed from the explicit matrices.
Outcome measurement_matrices() {
    const auto ens = Ensemble::generate(16, 8, DictionaryKind::gaussian, DictionaryKind::gaussian, 102);
    std::vector<CMat> ms;
    for (Eigen::Index l = 0; l < ens.m(); ++l) ms.push_back(measurement_matrix(ens, l));
    Rng rng(2);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const CVec u = complex_gaussian_vector(rng, 16, 1.0);
        const CVec v = complex_gaussian_vector(rng, 16, 1.0);
        const CVec fast = forward(ens, u, v);
        const CMat x = u * v.transpose();
        for (Eigen::Index l = 0; l < ens.m(); ++l) {
            const cplx explicit_value = ms[l].conjugate().cwiseProduct(x).sum();
            worst = std::max(worst, std::abs(fast(l) - explicit_value) / fast.norm());
        }
    }
    return {worst <= 1e-10, fmt("max relative gap %.2e over 50 points", worst)};
}

// 3. (n/m) ||S_Omega F* D_{F Psi v}||_F^2 = ||F Psi v||_2^2.
Outcome frobenius_identity() {
    Rng rng(3);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const auto ens = Ensemble::generate(32, 12, DictionaryKind::gaussian, DictionaryKind::gaussian,
                                            trial_seed(103, t));
        const CVec v = complex_gaussian_vector(rng, 32, 1.0);
        const double lhs = sampled_convolution_block(ens, v).squaredNorm();
        const double rhs = Signal(ens.apply_psi(v)).spectrum_norm2();
        worst = std::max(worst, std::abs(lhs - rhs * rhs) / (rhs * rhs));
    }
    return {worst <= 1e-10, fmt("max relative gap %.2e over 100 draws", worst)};
}

// 4. ||R_{u,v}||_{2->2} <= sqrt(sf(Psi v) / m) ||u||_2 when ||Psi v||_2 = 1.
Outcome spectral_bound() {
    Rng rng(4);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const Eigen::Index m = 4 + t % 20;
        const auto ens = Ensemble::generate(32, m, DictionaryKind::gaussian, DictionaryKind::gaussian,
                                            trial_seed(104, t));
        const CVec u = sample_model(exact(32, 1 + t % 6), rng).entries();
        CVec v = sample_model(exact(32, 1 + t % 5, std::nullopt, Side::right), rng).entries();
        v /= ens.apply_psi(v).norm();
        const double sf = spectral_flatness(Signal(ens.apply_psi(v)));
        const double bound = std::sqrt(sf / static_cast<double>(m)) * u.norm();
        worst = std::max(worst, spectral_norm(r_matrix(ens, {u, v})) / bound);
    }
    return {worst <= 1.0 + 1e-10, fmt("max ||R|| / bound = %.4f over 100 draws", worst)};
}

// 5. The polarization identity with the alpha wiring.
Outcome polarization() {
    Rng rng(5);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const CMat m = complex_gaussian_matrix(rng, 16, 16, 1.0);
        const CMat mp = complex_gaussian_matrix(rng, 16, 16, 1.0);
        const CVec xi = complex_gaussian_vector(rng, 16, 1.0);
        const double scale = (m * xi).norm() * (mp * xi).norm();
        worst = std::max(worst, polarization_residual(mp, m, xi) / scale);
    }
    return {worst <= 1e-10, fmt("max relative residual %.2e over 1000 instances", worst)};
}

// 6. E[A*A(X)] matches the isotropy target; error shrinks like 1/sqrt(draws).
Outcome isotropy() {
    Rng rng(6);
    const CMat x = complex_gaussian_matrix(rng, 16, 16, 1.0);
    bool pass = true;
    std::string detail;
    for (bool mirrored : {false, true}) {
        const auto coarse = isotropy_check(16, 8, DictionaryKind::gaussian, x, 5000, 106, mirrored);
        const auto fine = isotropy_check(16, 8, DictionaryKind::gaussian, x, 20000, 106, mirrored);
        const double ratio = fine.rel_error / coarse.rel_error;
        pass = pass && fine.rel_error < 0.05 && ratio >= 0.35 && ratio <= 0.7;
        detail += fmt(mirrored ? "mirrored err %.4f ratio %.3f" : "err %.4f ratio %.3f; ", fine.rel_error, ratio);
    }
    return {pass, detail};
}

// 7. Monte Carlo RIP lower-bounds the exact constant and reaches 60% of it.
Outcome rip_calibration() {
    bool pass = true;
    std::string detail;
    for (Eigen::Index m : {6, 9, 12}) {
        Rng rng(107 + m);
        const CMat a = complex_gaussian_matrix(rng, m, 12, 1.0 / static_cast<double>(m));
        const double truth = exact_rip_small(a, 2);
        const auto rep = estimate_rip_matrix(a, exact(12, 2), {10000, 7, 1});
        pass = pass && rep.delta_hat <= truth + 1e-12 && rep.delta_hat >= 0.6 * truth;
        detail += fmt("m=%.0f %.3f/%.3f ", static_cast<double>(m), rep.delta_hat, truth);
    }
    return {pass, detail + "(estimate/exact)"};
}

// 8. RAP deviation decays roughly like m^{-1/2}.
Outcome rap_scaling() {
    std::vector<double> lx, ly;
    for (Eigen::Index m : {16, 32, 64, 128}) {
        const auto ens = Ensemble::generate(128, m, DictionaryKind::gaussian, DictionaryKind::gaussian, 108 + m);
        const auto rep = estimate_rap(ens, exact(128, 2), exact(128, 2, 4.0, Side::right), {2000, 8, 1});
        lx.push_back(std::log(static_cast<double>(m)));
        ly.push_back(std::log(rep.delta_hat));
    }
    const double n = static_cast<double>(lx.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i] / n, my += ly[i] / n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    const double slope = sxy / sxx;
    return {slope >= -0.7 && slope <= -0.3, fmt("log-log slope %.3f", slope)};
}

// 9. Either-mode ROP is controlled by the RAP and both-mode ROP deviations.
Outcome either_bound() {
    const auto ens = Ensemble::generate(64, 32, DictionaryKind::gaussian, DictionaryKind::gaussian, 109);
    const auto su = exact(64, 8);
    const auto sv = exact(64, 8, 4.0, Side::right);
    const EstimatorOptions opts{2000, 9, 1};
    const auto rap = estimate_rap(ens, su, sv, opts);
    const auto both = estimate_rop(ens, su, sv, opts, Orthogonality::both);
    const auto either = estimate_rop(ens, su, sv, opts, Orthogonality::either);
    const double se = std::max({rap.max_standard_error, both.max_standard_error, either.max_standard_error});
    const double bound = 2.0 * std::max(rap.delta_hat, both.delta_hat) + 3.0 * se;
    return {either.delta_hat <= bound,
            fmt("either %.3f <= %.3f (rap %.3f, both %.3f)", either.delta_hat, bound, rap.delta_hat,
                both.delta_hat)};
}

// 10. Recovery succeeds more often as m grows and almost always at m = 64.
Outcome phase_transition() {
    const auto config = build_config({}, {{"kind", "recover"}, {"n", "128"}, {"m", "16,24,32,48,64"},
                                          {"s1", "3"}, {"s2", "3"}, {"mu1", "4"}, {"mu2", "4"},
                                          {"phi", "gaussian"}, {"psi", "gaussian"}, {"trials", "50"},
                                          {"seed", "110"}});
    std::vector<double> rate, se;
    std::string detail;
    for (const auto& cell : enumerate_cells(config)) {
        const auto summary = run_recover_cell(config, cell);
        rate.push_back(summary.success_rate);
        se.push_back(summary.success_se);
        detail += fmt("m=%.0f:%.2f ", static_cast<double>(cell.m), summary.success_rate);
    }
    bool pass = rate.size() == 5 && rate.back() >= 0.9;
    for (std::size_t i = 1; i < rate.size(); ++i)
        pass = pass && rate[i] >= rate[i - 1] - std::max(se[i], se[i - 1]);
    return {pass, detail};
}

// 11. Closed-form bound helpers.
Outcome formula_suite() {
    bool pass = true;
    const double a = bounds::solve_a();
    pass = pass && a > 1.0 && a < 2.0 && std::abs(std::log(a + 1.0) - 1.0 / a) <= 1e-12;

    std::vector<double> grid;
    for (double v = 1.0; v <= 1e4; v = std::max(v + 1.0, std::floor(v * 1.37))) grid.push_back(v);
    grid.push_back(1e4);
    int checked = 0;
    for (double n : grid) {
        for (double k : grid) {
            pass = pass && bounds::maurey_f(k, n, 2.0) <= std::sqrt(std::log(1.0 + n / k) / k);
            for (double m : grid) {
                if (m > n) break;
                pass = pass && bounds::maurey_h(k, n, m) <= std::sqrt(std::log(m / k + 1.0) * std::log(n / k + 1.0) / k);
                ++checked;
            }
        }
    }
    for (int i = 0; i < 100; ++i) {
        const double d = i / 100.0;
        pass = pass && bounds::angle_preservation_bound(d) <= 2.0 * std::sqrt(2.0) * d;
    }
    Rng rng(111);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> e(1 + rng() % 60);
        double cur = 10.0 * unif(rng);
        for (auto& x : e) {
            x = cur;
            cur *= unif(rng);
        }
        pass = pass && bounds::dyadic_chain_check(e).holds;
    }
    return {pass, fmt("a = %.6f, %.0f envelope points, 1000 dyadic sequences", a, checked)};
}

// 12. Sweep output is byte-identical across worker counts.
Outcome sweep_determinism() {
    const auto dir = std::filesystem::temp_directory_path();
    bool pass = true;
    std::string detail;
    for (const char* kind : {"rip", "rap", "rop", "recover"}) {
        std::string first;
        for (const char* workers : {"1", "4"}) {
            const auto out = (dir / (std::string("sbd_accept_") + kind + "_" + workers + ".csv")).string();
            const auto config = build_config({}, {{"kind", kind}, {"n", "32"}, {"m", "8,16"}, {"s1", "1,2"},
                                                  {"mu2", "none,4"}, {"trials", "20"}, {"seed", "112"},
                                                  {"workers", workers}, {"out", out}});
            write_sweep(config, run_sweep(config));
            const auto text = slurp(out);
            std::filesystem::remove(out);
            std::filesystem::remove(out + ".meta");
            if (first.empty()) first = text;
            else pass = pass && !text.empty() && text == first;
        }
        detail += std::string(kind) + " ";
    }
    return {pass, detail + "identical for 1 and 4 workers"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"adjoint balance", adjoint_balance},
        {"measurement matrices", measurement_matrices},
        {"Frobenius identity", frobenius_identity},
        {"spectral bound on R", spectral_bound},
        {"polarization", polarization},
        {"isotropy", isotropy},
        {"RIP calibration", rip_calibration},
        {"RAP scaling in m", rap_scaling},
        {"either-mode ROP bound", either_bound},
        {"recovery phase transition", phase_transition},
        {"bound formulas", formula_suite},
        {"sweep determinism", sweep_determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failures;
        std::printf("%s %2zu %-26s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
