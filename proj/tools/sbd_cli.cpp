// sbd: command-line front end for the estimators, recovery runs, sweeps and bound tables.
#include "sbd/harness.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace sbd;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

struct Flags {
    std::map<std::string, std::string> values;
    std::string config_path;
};

std::string flag_name(const std::string& key) {
    std::string out = "--";
    for (char ch : key) out += ch == '_' ? '-' : ch;
    return out;
}

void add_config_flags(CLI::App* cmd, Flags& flags, const std::vector<std::string>& hidden) {
    for (const auto& key : config_keys()) {
        if (std::find(hidden.begin(), hidden.end(), key) != hidden.end()) continue;
        cmd->add_option_function<std::string>(
            flag_name(key), [&flags, key](const std::string& v) { flags.values[key] = v; },
            "config key '" + key + "' (lists are comma-separated)");
    }
    cmd->add_option("--config", flags.config_path, "key = value config file; flags override it");
}

SweepConfig resolve(const Flags& flags, std::map<std::string, std::string> forced) {
    std::map<std::string, std::string> file;
    if (!flags.config_path.empty()) file = read_config_file(flags.config_path);
    auto merged = flags.values;
    for (const auto& [k, v] : forced) {
        const auto it = merged.find(k);
        if (it != merged.end() && it->second != v)
            throw ValidationError(k + ": fixed to '" + v + "' by this subcommand");
        merged[k] = v;
    }
    std::vector<ConfigProvenance> provenance;
    SweepConfig config = build_config(file, merged, &provenance);
    for (const auto& p : provenance)
        if (!forced.count(p.key)) std::cerr << "[config] " << p.key << " = " << p.value << " (" << p.source << ")\n";
    return config;
}

void emit(const SweepConfig& config, const CsvTable& table) {
    if (config.out.empty()) {
        write_csv(std::cout, table);
        return;
    }
    std::ofstream out(config.out, std::ios::binary);
    if (!out) throw ValidationError("out: cannot write '" + config.out + "'");
    write_csv(out, table);
}

int run_table(const Flags& flags, const std::string& kind) {
    const SweepConfig config = resolve(flags, {{"kind", kind}});
    const auto output = run_sweep(config, true);
    emit(config, output.table);
    return 0;
}

std::vector<cplx> read_complex_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("measurements: cannot read '" + path + "'");
    std::vector<cplx> values;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty() || line[0] == '#') continue;
        std::stringstream fields(line);
        std::string re;
        std::string im;
        std::getline(fields, re, ',');
        std::getline(fields, im, ',');
        try {
            values.emplace_back(std::stod(re), im.empty() ? 0.0 : std::stod(im));
        } catch (const std::exception&) {
            if (number == 1) continue;  // header
            throw ValidationError("measurements: line " + std::to_string(number) + " is not 're,im'");
        }
    }
    return values;
}

int run_recover(const Flags& flags, const std::string& ensemble_path, const std::string& measurements_path) {
    const SweepConfig config = resolve(flags, {{"kind", "recover"}});
    if (ensemble_path.empty() != measurements_path.empty())
        throw ValidationError("recover: --ensemble and --measurements go together");

    if (!ensemble_path.empty()) {
        std::ifstream in(ensemble_path);
        if (!in) throw ValidationError("ensemble: cannot read '" + ensemble_path + "'");
        std::stringstream text;
        text << in.rdbuf();
        const Ensemble ens = Ensemble::from_json(text.str());
        const auto values = read_complex_csv(measurements_path);
        const CVec b = Eigen::Map<const CVec>(values.data(), static_cast<Eigen::Index>(values.size()));
        SolveOptions opts;
        opts.s1 = config.s1.front();
        opts.s2 = config.s2.front();
        opts.max_outer_iters = config.max_iters;
        const auto r = recover(ens, b, opts);
        std::cerr << "[recover] iterations " << r.iterations << ", converged " << (r.converged ? "yes" : "no")
                  << ", residual " << format_double(r.residual_norm) << "\n";
        CsvTable table;
        table.header = {"index", "u_re", "u_im", "v_re", "v_im"};
        for (Eigen::Index i = 0; i < ens.n(); ++i) {
            const cplx u = r.u_hat.entries()(i);
            const cplx v = r.v_hat.entries()(i);
            table.rows.push_back({std::to_string(i), format_double(u.real()), format_double(u.imag()),
                                  format_double(v.real()), format_double(v.imag())});
        }
        emit(config, table);
        return r.converged ? 0 : kExitNumeric;
    }

    CsvTable table;
    table.header = solve_header();
    for (const auto& cell : enumerate_cells(config)) {
        const auto summary = run_recover_cell(config, cell, true);
        for (std::size_t t = 0; t < summary.runs.size(); ++t)
            table.rows.push_back(solve_row(config.n, cell.m, cell, summary.seeds[t], summary.runs[t]));
        std::cerr << "[recover] m = " << cell.m << ": " << summary.successes << "/" << summary.trials
                  << " within " << format_double(config.success_tol) << "\n";
    }
    emit(config, table);
    return 0;
}

int run_sweep_command(const Flags& flags) {
    const SweepConfig config = resolve(flags, {});
    if (config.out.empty()) throw ValidationError("out: sweep needs an output path");
    const auto output = run_sweep(config, false);
    write_sweep(config, output);
    std::cerr << "[sweep] wrote " << output.table.rows.size() << " rows to " << config.out << " (+ .meta)\n";
    return 0;
}

int run_selftest() {
    int failures = 0;
    auto report = [&](const std::string& name, bool ok, const std::string& detail) {
        std::cout << (ok ? "PASS " : "FAIL ") << name << " " << detail << "\n";
        if (!ok) ++failures;
    };

    const auto ens = Ensemble::generate(12, 5, DictionaryKind::gaussian, DictionaryKind::gaussian, 1);
    Rng rng(2);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        const CMat x = complex_gaussian_matrix(rng, 12, 12);
        const CVec b = complex_gaussian_vector(rng, 5);
        const cplx lhs = forward_matrix(ens, x).dot(b);
        const cplx rhs = (x.conjugate().cwiseProduct(adjoint_apply(ens, b))).sum();
        worst = std::max(worst, std::abs(lhs - rhs) / (x.norm() * b.norm()));
    }
    report("adjoint-balance", worst <= 1e-10, "max relative gap " + format_double(worst));

    worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        const CMat m = complex_gaussian_matrix(rng, 16, 16);
        const CMat mp = complex_gaussian_matrix(rng, 16, 16);
        const CVec xi = complex_gaussian_vector(rng, 16);
        worst = std::max(worst, polarization_residual(mp, m, xi) / ((m * xi).norm() * (mp * xi).norm()));
    }
    report("polarization", worst <= 1e-10, "max relative residual " + format_double(worst));

    const double a = bounds::solve_a();
    const double residual = std::abs(std::log(a + 1.0) - 1.0 / a);
    report("solve-a", residual <= 1e-12 && a > 1.0 && a < 2.0, "a = " + format_double(a));

    const auto planted = Ensemble::generate(64, 48, DictionaryKind::gaussian, DictionaryKind::gaussian, 3);
    const ModelSpec spec{64, 2, std::nullopt, SparsityFlavor::exact, Side::left};
    const LiftedPoint truth{sample_model(spec, rng).entries(), sample_model(spec, rng).entries()};
    SolveOptions opts;
    opts.s1 = 2;
    opts.s2 = 2;
    const auto r = recover(planted, forward(planted, truth), opts, truth);
    report("recover", *r.relative_error <= 1e-4, "relative error " + format_double(*r.relative_error));

    return failures == 0 ? 0 : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse blind deconvolution: lifted-operator estimators, recovery and bounds"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    Flags flags;
    std::string ensemble_path;
    std::string measurements_path;

    auto* rip = app.add_subcommand("rip-estimate", "Monte Carlo RIP constant of the lifted operator");
    add_config_flags(rip, flags, {"kind", "delta", "orthogonality", "decoupled", "draws", "mirrored",
                                  "success_tol", "max_iters", "C"});
    auto* rap = app.add_subcommand("rap-estimate", "Monte Carlo restricted angle-preserving constant");
    add_config_flags(rap, flags, {"kind", "delta", "orthogonality", "decoupled", "draws", "mirrored",
                                  "success_tol", "max_iters", "C"});
    auto* rop = app.add_subcommand("rop-estimate", "Monte Carlo restricted orthogonality constant");
    add_config_flags(rop, flags, {"kind", "delta", "draws", "mirrored", "success_tol", "max_iters", "C"});
    auto* iso = app.add_subcommand("isotropy", "Monte Carlo check of E A*A(X) against the dictionary Gram target");
    add_config_flags(iso, flags, {"kind", "s1", "s2", "mu1", "mu2", "delta", "flavor", "orthogonality",
                                  "decoupled", "success_tol", "max_iters", "C", "trials"});
    auto* rec = app.add_subcommand("recover", "Planted recovery trials, or a solve from given data");
    add_config_flags(rec, flags, {"kind", "delta", "orthogonality", "decoupled", "draws", "mirrored", "C"});
    rec->add_option("--ensemble", ensemble_path, "ensemble JSON to solve against");
    rec->add_option("--measurements", measurements_path, "CSV of measurements (re,im per line)");
    auto* sweep = app.add_subcommand("sweep", "Grid sweep to CSV with a .meta sidecar");
    add_config_flags(sweep, flags, {});
    auto* bnd = app.add_subcommand("bounds", "Sample-complexity and chaining-bound table");
    add_config_flags(bnd, flags, {"kind", "phi", "psi", "omega", "flavor", "trials", "seed", "workers",
                                  "orthogonality", "decoupled", "draws", "mirrored", "success_tol", "max_iters"});
    auto* self = app.add_subcommand("selftest", "Quick identity and recovery checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (rip->parsed()) return run_table(flags, "rip");
        if (rap->parsed()) return run_table(flags, "rap");
        if (rop->parsed()) return run_table(flags, "rop");
        if (iso->parsed()) return run_table(flags, "isotropy");
        if (rec->parsed()) return run_recover(flags, ensemble_path, measurements_path);
        if (sweep->parsed()) return run_sweep_command(flags);
        if (bnd->parsed()) return run_table(flags, "bounds");
        if (self->parsed()) return run_selftest();
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
