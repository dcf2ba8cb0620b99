#include "sbd/harness.hpp"

#include "sbd/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sbd {

namespace {

constexpr const char* kNA = "NA";

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void fail(const std::string& key, const std::string& what) {
    throw ValidationError(key + ": " + what);
}

long long parse_integer(const std::string& key, const std::string& text) {
    long long value = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) fail(key, "expected an integer, got '" + text + "'");
    return value;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
    std::uint64_t value = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) fail(key, "expected a nonnegative integer, got '" + text + "'");
    return value;
}

double parse_real(const std::string& key, const std::string& text) {
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || !std::isfinite(value))
        fail(key, "expected a finite number, got '" + text + "'");
    return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    fail(key, "expected true|false, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& key, const std::string& text) {
    std::vector<std::string> items;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) fail(key, "malformed list '" + text + "' (empty item)");
        items.push_back(item);
    }
    if (items.empty() || text.back() == ',') fail(key, "malformed list '" + text + "'");
    return items;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& key, const std::string& text, Parse&& parse) {
    std::vector<T> out;
    for (const auto& item : split_list(key, text)) out.push_back(parse(key, item));
    return out;
}

std::optional<double> parse_mu(const std::string& key, const std::string& text) {
    if (text == "none") return std::nullopt;
    return parse_real(key, text);
}

template <typename Fn>
auto wrap_enum(const std::string& key, const std::string& text, Fn&& fn) {
    try {
        return fn(text);
    } catch (const ValidationError& e) {
        fail(key, e.what());
    }
}

Orthogonality parse_orthogonality(const std::string& key, const std::string& text) {
    if (text == "both") return Orthogonality::both;
    if (text == "either") return Orthogonality::either;
    fail(key, "expected both|either, got '" + text + "'");
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
    return out;
}

std::string mu_text(const std::optional<double>& mu) { return mu ? format_double(*mu) : "none"; }

void apply_key(SweepConfig& c, const std::string& key, const std::string& value) {
    auto to_index = [](const std::string& k, const std::string& t) {
        return static_cast<Eigen::Index>(parse_integer(k, t));
    };
    if (key == "kind") c.kind = wrap_enum(key, value, parse_experiment_kind);
    else if (key == "n") c.n = to_index(key, value);
    else if (key == "m") c.m = parse_list<Eigen::Index>(key, value, to_index);
    else if (key == "s1") c.s1 = parse_list<Eigen::Index>(key, value, to_index);
    else if (key == "s2") c.s2 = parse_list<Eigen::Index>(key, value, to_index);
    else if (key == "mu1") c.mu1 = parse_list<std::optional<double>>(key, value, parse_mu);
    else if (key == "mu2") c.mu2 = parse_list<std::optional<double>>(key, value, parse_mu);
    else if (key == "delta") c.delta = parse_list<double>(key, value, parse_real);
    else if (key == "phi") c.phi = wrap_enum(key, value, parse_dictionary_kind);
    else if (key == "psi") c.psi = wrap_enum(key, value, parse_dictionary_kind);
    else if (key == "omega") c.omega = wrap_enum(key, value, parse_omega_mode);
    else if (key == "flavor") c.flavor = wrap_enum(key, value, parse_flavor);
    else if (key == "trials") c.trials = static_cast<int>(parse_integer(key, value));
    else if (key == "seed") c.seed = parse_unsigned(key, value);
    else if (key == "workers") c.workers = static_cast<int>(parse_integer(key, value));
    else if (key == "orthogonality") c.orthogonality = parse_orthogonality(key, value);
    else if (key == "decoupled") c.decoupled = parse_bool(key, value);
    else if (key == "draws") c.draws = static_cast<int>(parse_integer(key, value));
    else if (key == "mirrored") c.mirrored = parse_bool(key, value);
    else if (key == "success_tol") c.success_tol = parse_real(key, value);
    else if (key == "max_iters") c.max_iters = static_cast<int>(parse_integer(key, value));
    else if (key == "C") c.constant = parse_real(key, value);
    else if (key == "out") c.out = value;
    else fail(key, "unknown config key");
}

bool uses_sparsity(ExperimentKind k) { return k != ExperimentKind::isotropy; }

}  // namespace

std::string_view to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::rip: return "rip";
        case ExperimentKind::rap: return "rap";
        case ExperimentKind::rop: return "rop";
        case ExperimentKind::isotropy: return "isotropy";
        case ExperimentKind::recover: return "recover";
        case ExperimentKind::bounds: return "bounds";
    }
    return "rip";
}

ExperimentKind parse_experiment_kind(std::string_view text) {
    for (auto k : {ExperimentKind::rip, ExperimentKind::rap, ExperimentKind::rop, ExperimentKind::isotropy,
                   ExperimentKind::recover, ExperimentKind::bounds})
        if (to_string(k) == text) return k;
    throw ValidationError("expected rip|rap|rop|isotropy|recover|bounds, got '" + std::string(text) + "'");
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "kind", "n", "m", "s1", "s2", "mu1", "mu2", "delta", "phi", "psi", "omega", "flavor",
        "trials", "seed", "workers", "orthogonality", "decoupled", "draws", "mirrored",
        "success_tol", "max_iters", "C", "out"};
    return keys;
}

void SweepConfig::validate() const {
    if (n < 2) fail("n", "must be at least 2");
    if (m.empty()) fail("m", "empty grid");
    if (s1.empty()) fail("s1", "empty grid");
    if (s2.empty()) fail("s2", "empty grid");
    if (mu1.empty()) fail("mu1", "empty grid");
    if (mu2.empty()) fail("mu2", "empty grid");
    if (delta.empty()) fail("delta", "empty grid");
    for (auto v : m) if (v < 1) fail("m", "entries must be positive");
    for (auto v : s1) if (v < 1) fail("s1", "entries must be positive");
    for (auto v : s2) if (v < 1) fail("s2", "entries must be positive");
    for (const auto& v : mu1) if (v && *v < 1.0) fail("mu1", "entries must be >= 1 or none");
    for (const auto& v : mu2) if (v && *v < 1.0) fail("mu2", "entries must be >= 1 or none");
    for (auto v : delta) if (!(v > 0.0 && v < 1.0)) fail("delta", "entries must lie in (0, 1)");
    if (trials < 1) fail("trials", "must be at least 1");
    if (workers < 1) fail("workers", "must be at least 1");
    if (draws < 1) fail("draws", "must be at least 1");
    if (!(success_tol > 0.0)) fail("success_tol", "must be positive");
    if (max_iters < 1) fail("max_iters", "must be at least 1");
    if (!(constant > 0.0)) fail("C", "must be positive");
    if (kind == ExperimentKind::isotropy && n > kMaxRMatrixN) fail("n", "isotropy requires n <= 64");
    if ((kind == ExperimentKind::recover) && n > kMaxExplicitN * 16) fail("n", "recover requires n <= 4096");
    if (decoupled && (phi != DictionaryKind::gaussian || psi != DictionaryKind::gaussian))
        fail("decoupled", "needs phi = psi = gaussian");
}

std::map<std::string, std::string> parse_config_text(const std::string& text, const std::string& origin) {
    std::map<std::string, std::string> values;
    std::stringstream in(text);
    std::string line;
    int number = 0;
    const auto& keys = config_keys();
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = origin + ":" + std::to_string(number);
        if (eq == std::string::npos) throw ValidationError(where + ": expected key = value");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            throw ValidationError(where + ": unknown config key '" + key + "'");
        if (value.empty()) throw ValidationError(where + ": " + key + ": empty value");
        if (!values.emplace(key, value).second)
            throw ValidationError(where + ": duplicate key '" + key + "'");
    }
    return values;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot read '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), path);
}

SweepConfig build_config(const std::map<std::string, std::string>& file_values,
                         const std::map<std::string, std::string>& flag_values,
                         std::vector<ConfigProvenance>* provenance) {
    SweepConfig config;
    const auto& keys = config_keys();
    for (const auto& source : {&file_values, &flag_values})
        for (const auto& [key, value] : *source)
            if (std::find(keys.begin(), keys.end(), key) == keys.end())
                throw ValidationError(key + ": unknown config key");
    for (const auto& key : keys) {
        const auto f = file_values.find(key);
        const auto g = flag_values.find(key);
        if (g != flag_values.end()) {
            apply_key(config, key, g->second);
            if (provenance) {
                std::string source = "flag";
                if (f != file_values.end() && f->second != g->second)
                    source = "flag (overrides file value '" + f->second + "')";
                provenance->push_back({key, g->second, source});
            }
        } else if (f != file_values.end()) {
            apply_key(config, key, f->second);
            if (provenance) provenance->push_back({key, f->second, "file"});
        }
    }
    config.validate();
    return config;
}

std::string render_config(const SweepConfig& c) {
    auto list = [](const auto& values, auto&& fmt) {
        std::vector<std::string> items;
        for (const auto& v : values) items.push_back(fmt(v));
        return join(items);
    };
    auto integer = [](Eigen::Index v) { return std::to_string(v); };
    std::ostringstream out;
    out << "kind = " << to_string(c.kind) << "\n"
        << "n = " << c.n << "\n"
        << "m = " << list(c.m, integer) << "\n"
        << "s1 = " << list(c.s1, integer) << "\n"
        << "s2 = " << list(c.s2, integer) << "\n"
        << "mu1 = " << list(c.mu1, mu_text) << "\n"
        << "mu2 = " << list(c.mu2, mu_text) << "\n"
        << "delta = " << list(c.delta, format_double) << "\n"
        << "phi = " << to_string(c.phi) << "\n"
        << "psi = " << to_string(c.psi) << "\n"
        << "omega = " << to_string(c.omega) << "\n"
        << "flavor = " << to_string(c.flavor) << "\n"
        << "trials = " << c.trials << "\n"
        << "seed = " << c.seed << "\n"
        << "workers = " << c.workers << "\n"
        << "orthogonality = " << (c.orthogonality == Orthogonality::both ? "both" : "either") << "\n"
        << "decoupled = " << (c.decoupled ? "true" : "false") << "\n"
        << "draws = " << c.draws << "\n"
        << "mirrored = " << (c.mirrored ? "true" : "false") << "\n"
        << "success_tol = " << format_double(c.success_tol) << "\n"
        << "max_iters = " << c.max_iters << "\n"
        << "C = " << format_double(c.constant) << "\n";
    if (!c.out.empty()) out << "out = " << c.out << "\n";
    return out.str();
}

std::vector<Cell> enumerate_cells(const SweepConfig& c) {
    const bool sparse = uses_sparsity(c.kind);
    const std::size_t n_s1 = sparse ? c.s1.size() : 1;
    const std::size_t n_s2 = sparse ? c.s2.size() : 1;
    const std::size_t n_mu1 = sparse ? c.mu1.size() : 1;
    const std::size_t n_mu2 = sparse ? c.mu2.size() : 1;
    const std::size_t n_delta = c.kind == ExperimentKind::bounds ? c.delta.size() : 1;
    std::vector<Cell> cells;
    for (auto m : c.m)
        for (std::size_t a = 0; a < n_s1; ++a)
            for (std::size_t b = 0; b < n_s2; ++b)
                for (std::size_t d = 0; d < n_mu1; ++d)
                    for (std::size_t e = 0; e < n_mu2; ++e)
                        for (std::size_t f = 0; f < n_delta; ++f) {
                            Cell cell;
                            cell.index = cells.size();
                            cell.m = m;
                            cell.s1 = c.s1[a];
                            cell.s2 = c.s2[b];
                            cell.mu1 = c.mu1[d];
                            cell.mu2 = c.mu2[e];
                            cell.delta = c.delta[f];
                            cells.push_back(cell);
                        }
    return cells;
}

std::uint64_t cell_seed(const SweepConfig& config, const Cell& cell) {
    auto mix_mu = [](const std::optional<double>& mu) {
        return mu ? std::bit_cast<std::uint64_t>(*mu) : std::uint64_t{0x6e6f6e65};  // "none"
    };
    std::uint64_t h = mix64(config.seed ^ 0x5357454550ULL);
    for (std::uint64_t part : std::initializer_list<std::uint64_t>{static_cast<std::uint64_t>(cell.m), static_cast<std::uint64_t>(cell.s1),
                               static_cast<std::uint64_t>(cell.s2), mix_mu(cell.mu1), mix_mu(cell.mu2),
                               std::bit_cast<std::uint64_t>(cell.delta)})
        h = mix64(h ^ part);
    return h;
}

std::string format_double(double value) {
    if (std::isnan(value)) return kNA;
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    return ec == std::errc() ? std::string(buffer, ptr) : std::string(kNA);
}

void write_csv(std::ostream& out, const CsvTable& table) {
    auto field = [](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string quoted = "\"";
        for (char ch : s) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        return quoted + "\"";
    };
    auto line = [&](const std::vector<std::string>& items) {
        for (std::size_t i = 0; i < items.size(); ++i) out << (i ? "," : "") << field(items[i]);
        out << "\n";
    };
    line(table.header);
    for (const auto& row : table.rows) line(row);
}

std::vector<std::string> estimator_header() {
    return {"kind", "n", "m", "s1", "s2", "mu1", "mu2", "trials", "delta_hat", "q50", "q90", "q99",
            "seed", "wall_time", "note"};
}

std::vector<std::string> estimator_row(const EstimateReport& r, bool record_wall_time, const std::string& note) {
    return {r.kind,
            std::to_string(r.n),
            std::to_string(r.m),
            std::to_string(r.s1),
            std::to_string(r.s2),
            mu_text(r.mu1),
            mu_text(r.mu2),
            std::to_string(r.trials),
            format_double(r.delta_hat),
            format_double(r.q50),
            format_double(r.q90),
            format_double(r.q99),
            std::to_string(r.seed),
            record_wall_time ? format_double(r.wall_time) : kNA,
            note};
}

std::vector<std::string> solve_header() {
    return {"n", "m", "s1", "s2", "mu1", "mu2", "seed", "rel_error", "iterations", "converged", "residual_norm"};
}

std::vector<std::string> solve_row(Eigen::Index n, Eigen::Index m, const Cell& cell, std::uint64_t seed,
                                   const SolveResult& r) {
    return {std::to_string(n),
            std::to_string(m),
            std::to_string(cell.s1),
            std::to_string(cell.s2),
            mu_text(cell.mu1),
            mu_text(cell.mu2),
            std::to_string(seed),
            r.relative_error ? format_double(*r.relative_error) : kNA,
            std::to_string(r.iterations),
            r.converged ? "true" : "false",
            format_double(r.residual_norm)};
}

namespace {

ModelSpec left_spec(const SweepConfig& c, const Cell& cell) {
    return {c.n, cell.s1, cell.mu1, c.flavor, Side::left};
}

ModelSpec right_spec(const SweepConfig& c, const Cell& cell) {
    return {c.n, cell.s2, cell.mu2, c.flavor, Side::right};
}

// Reason a cell cannot run, or empty.
std::string infeasibility(const SweepConfig& c, const Cell& cell) {
    if (c.omega == OmegaMode::without_replacement && cell.m > c.n)
        return "m exceeds n under sampling without replacement";
    if (!uses_sparsity(c.kind)) return {};
    try {
        left_spec(c, cell).validate();
        right_spec(c, cell).validate();
    } catch (const ValidationError& e) {
        return e.what();
    }
    return {};
}

std::vector<std::string> na_row(const std::vector<std::string>& header, std::vector<std::string> prefix,
                                std::uint64_t seed, const std::string& note) {
    prefix.resize(header.size(), kNA);
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == "seed") prefix[i] = std::to_string(seed);
    prefix.back() = note;
    return prefix;
}

std::vector<std::string> isotropy_header() {
    return {"kind", "n", "m", "fixed", "mirrored", "draws", "rel_error", "seed", "wall_time", "note"};
}

std::vector<std::string> recover_header() {
    return {"kind", "n", "m", "s1", "s2", "mu1", "mu2", "trials", "successes", "success_rate", "success_se",
            "median_rel_error", "seed", "wall_time", "note"};
}

std::vector<std::string> bounds_header() {
    return {"n", "m", "s1", "s2", "mu1", "mu2", "delta", "C", "m_thm1a", "feasible_thm1a", "m_thm1b",
            "feasible_thm1b", "m_thm3", "feasible_thm3", "gamma2_bound", "dudley_sparse", "dudley_fourier",
            "angle_bound", "note"};
}

std::vector<std::string> header_for(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::isotropy: return isotropy_header();
        case ExperimentKind::recover: return recover_header();
        case ExperimentKind::bounds: return bounds_header();
        default: return estimator_header();
    }
}

std::string estimator_kind(const SweepConfig& c) {
    switch (c.kind) {
        case ExperimentKind::rap: return "rap";
        case ExperimentKind::rop: return c.orthogonality == Orthogonality::both ? "rop-both" : "rop-either";
        default: return "rip";
    }
}

std::vector<std::string> bounds_row(const SweepConfig& c, const Cell& cell) {
    bounds::BoundQuery q;
    const double n = static_cast<double>(c.n);
    q.n = c.n;
    q.m = cell.m;
    q.s1 = cell.s1;
    q.s2 = cell.s2;
    q.mu1 = cell.mu1.value_or(n);
    q.mu2 = cell.mu2.value_or(n);
    q.delta = cell.delta;
    q.c = c.constant;
    std::vector<std::string> row = {std::to_string(c.n), std::to_string(cell.m), std::to_string(cell.s1),
                                    std::to_string(cell.s2), mu_text(cell.mu1), mu_text(cell.mu2),
                                    format_double(cell.delta), format_double(c.constant)};
    for (auto which : {bounds::Complexity::thm1a, bounds::Complexity::thm1b, bounds::Complexity::thm3}) {
        const auto sc = bounds::sample_complexity(q, which);
        row.push_back(std::to_string(sc.m));
        row.push_back(sc.feasible ? "true" : "false");
    }
    const double m = static_cast<double>(cell.m);
    const double s1 = static_cast<double>(cell.s1);
    const double s2 = static_cast<double>(cell.s2);
    row.push_back(format_double(bounds::gamma2_bound(s1, s2, q.mu1, m, n)));
    row.push_back(format_double(bounds::dudley_sparse_bound(s1, n)));
    row.push_back(format_double(bounds::dudley_fourier_bound(s2, n, m, 1.0 / std::sqrt(n))));
    row.push_back(format_double(bounds::angle_preservation_bound(cell.delta)));
    row.push_back(cell.mu1 && cell.mu2 ? "" : "mu = none evaluated as mu = n");
    return row;
}

std::vector<std::string> run_cell(const SweepConfig& c, const Cell& cell, bool record_wall_time, double& wall) {
    const auto start = std::chrono::steady_clock::now();
    const auto header = header_for(c.kind);
    const std::uint64_t seed = cell_seed(c, cell);
    const std::string reason = infeasibility(c, cell);
    std::vector<std::string> prefix;
    switch (c.kind) {
        case ExperimentKind::isotropy:
            prefix = {"isotropy", std::to_string(c.n), std::to_string(cell.m)};
            break;
        case ExperimentKind::recover:
        case ExperimentKind::rip:
        case ExperimentKind::rap:
        case ExperimentKind::rop:
            prefix = {c.kind == ExperimentKind::recover ? "recover" : estimator_kind(c), std::to_string(c.n),
                      std::to_string(cell.m), std::to_string(cell.s1), std::to_string(cell.s2),
                      mu_text(cell.mu1), mu_text(cell.mu2), std::to_string(c.trials)};
            break;
        case ExperimentKind::bounds:
            prefix = {std::to_string(c.n), std::to_string(cell.m), std::to_string(cell.s1),
                      std::to_string(cell.s2), mu_text(cell.mu1), mu_text(cell.mu2), format_double(cell.delta),
                      format_double(c.constant)};
            break;
    }
    if (!reason.empty()) {
        wall = 0.0;
        return na_row(header, prefix, c.seed, "skipped: " + reason);
    }

    std::vector<std::string> row;
    try {
        switch (c.kind) {
            case ExperimentKind::rip:
            case ExperimentKind::rap:
            case ExperimentKind::rop: {
                const auto ens = Ensemble::generate(c.n, cell.m, c.phi, c.psi, seed, c.omega);
                EstimatorOptions opts;
                opts.trials = c.trials;
                opts.seed = trial_seed(seed, 1);
                opts.workers = 1;
                EstimateReport report;
                if (c.kind == ExperimentKind::rip) report = estimate_rip(ens, left_spec(c, cell), right_spec(c, cell), opts);
                else if (c.kind == ExperimentKind::rap) report = estimate_rap(ens, left_spec(c, cell), right_spec(c, cell), opts);
                else
                    report = estimate_rop(ens, left_spec(c, cell), right_spec(c, cell), opts, c.orthogonality,
                                          c.decoupled);
                report.seed = c.seed;
                std::string note;
                if (report.failed > 0) note = std::to_string(report.failed) + " trials had no admissible sample";
                row = estimator_row(report, record_wall_time, note);
                break;
            }
            case ExperimentKind::isotropy: {
                Rng rng(trial_seed(seed, 2));
                const CMat x = complex_gaussian_matrix(rng, c.n, c.n);
                const auto fixed = c.mirrored ? c.phi : c.psi;
                const auto r = isotropy_check(c.n, cell.m, fixed, x, c.draws, seed, c.mirrored, c.omega);
                row = {"isotropy", std::to_string(c.n), std::to_string(cell.m), std::string(to_string(fixed)),
                       c.mirrored ? "true" : "false", std::to_string(c.draws), format_double(r.rel_error),
                       std::to_string(c.seed), kNA, ""};
                break;
            }
            case ExperimentKind::recover: {
                SweepConfig inner = c;
                inner.workers = 1;
                const auto summary = run_recover_cell(inner, cell);
                row = prefix;
                row.push_back(std::to_string(summary.successes));
                row.push_back(format_double(summary.success_rate));
                row.push_back(format_double(summary.success_se));
                row.push_back(format_double(summary.median_rel_error));
                row.push_back(std::to_string(c.seed));
                row.push_back(kNA);
                row.push_back("");
                break;
            }
            case ExperimentKind::bounds: row = bounds_row(c, cell); break;
        }
    } catch (const NumericError& e) {
        row = na_row(header, prefix, c.seed, std::string("numeric failure: ") + e.what());
    } catch (const DomainError& e) {
        row = na_row(header, prefix, c.seed, std::string("skipped: ") + e.what());
    }
    wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (record_wall_time && c.kind != ExperimentKind::bounds) {
        const auto pos = static_cast<std::size_t>(std::find(header.begin(), header.end(), "wall_time") - header.begin());
        if (pos < row.size()) row[pos] = format_double(wall);
    }
    return row;
}

}  // namespace

RecoverSummary run_recover_cell(const SweepConfig& c, const Cell& cell, bool keep_runs) {
    const std::uint64_t seed = cell_seed(c, cell);
    const ModelSpec su = left_spec(c, cell);
    const ModelSpec sv = right_spec(c, cell);
    su.validate();
    sv.validate();
    SolveOptions opts;
    opts.s1 = cell.s1;
    opts.s2 = cell.s2;
    opts.max_outer_iters = c.max_iters;

    struct Trial {
        double error = std::numeric_limits<double>::infinity();
        SolveResult result;
        std::uint64_t seed = 0;
    };
    const auto trials = parallel_map(static_cast<std::size_t>(c.trials), c.workers, [&](std::size_t t) {
        Trial out;
        out.seed = trial_seed(seed, t);
        const auto ens = Ensemble::generate(c.n, cell.m, c.phi, c.psi, out.seed, c.omega);
        Rng rng(trial_seed(out.seed, 99));
        const LiftedPoint truth{sample_model(su, rng).entries(), sample_model(sv, rng).entries()};
        try {
            out.result = recover(ens, forward(ens, truth), opts, truth);
            out.error = *out.result.relative_error;
        } catch (const NumericError&) {
        }
        return out;
    });

    RecoverSummary summary;
    summary.trials = c.trials;
    std::vector<double> errors;
    for (const auto& t : trials) {
        errors.push_back(t.error);
        if (t.error <= c.success_tol) ++summary.successes;
        if (keep_runs) {
            summary.runs.push_back(t.result);
            summary.seeds.push_back(t.seed);
        }
    }
    const double p = static_cast<double>(summary.successes) / static_cast<double>(summary.trials);
    summary.success_rate = p;
    summary.success_se = std::sqrt(p * (1.0 - p) / static_cast<double>(summary.trials));
    std::sort(errors.begin(), errors.end());
    const std::size_t mid = errors.size() / 2;
    summary.median_rel_error = errors.size() % 2 ? errors[mid] : 0.5 * (errors[mid - 1] + errors[mid]);
    return summary;
}

SweepOutput run_sweep(const SweepConfig& config, bool record_wall_time) {
    config.validate();
    const auto cells = enumerate_cells(config);
    struct Done {
        std::vector<std::string> row;
        double wall = 0.0;
    };
    const auto done = parallel_map(cells.size(), config.workers, [&](std::size_t i) {
        Done d;
        d.row = run_cell(config, cells[i], record_wall_time, d.wall);
        return d;
    });
    SweepOutput out;
    out.table.header = header_for(config.kind);
    for (const auto& d : done) {
        out.table.rows.push_back(d.row);
        out.cell_wall_time.push_back(d.wall);
    }
    return out;
}

void write_sweep(const SweepConfig& config, const SweepOutput& output) {
    if (config.out.empty()) throw ValidationError("out: a path is required to write a sweep");
    std::ofstream csv(config.out, std::ios::binary);
    if (!csv) throw ValidationError("out: cannot write '" + config.out + "'");
    write_csv(csv, output.table);
    csv.close();
    if (!csv) throw ValidationError("out: write to '" + config.out + "' failed");

    nlohmann::json meta;
    meta["tool"] = "sbd";
    meta["version"] = kToolVersion;
    meta["config"] = render_config(config);
    nlohmann::json cells = nlohmann::json::array();
    const auto grid = enumerate_cells(config);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        cells.push_back({{"index", grid[i].index},
                         {"m", grid[i].m},
                         {"s1", grid[i].s1},
                         {"s2", grid[i].s2},
                         {"mu1", mu_text(grid[i].mu1)},
                         {"mu2", mu_text(grid[i].mu2)},
                         {"delta", grid[i].delta},
                         {"cell_seed", cell_seed(config, grid[i])},
                         {"wall_time", i < output.cell_wall_time.size() ? output.cell_wall_time[i] : 0.0}});
    }
    meta["cells"] = cells;
    std::ofstream side(config.out + ".meta", std::ios::binary);
    if (!side) throw ValidationError("out: cannot write '" + config.out + ".meta'");
    side << meta.dump(2) << "\n";
}

}  // namespace sbd
