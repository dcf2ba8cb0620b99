// Configuration, seeded sweeps and CSV output for the command-line tool.
#pragma once

#include "sbd/concentration.hpp"
#include "sbd/entropy_bounds.hpp"
#include "sbd/operator.hpp"
#include "sbd/signal_models.hpp"
#include "sbd/solver.hpp"

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace sbd {

inline constexpr const char* kToolVersion = "1.0.0";

enum class ExperimentKind { rip, rap, rop, isotropy, recover, bounds };

std::string_view to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(std::string_view text);

struct SweepConfig {
    ExperimentKind kind = ExperimentKind::rip;
    Eigen::Index n = 64;
    DictionaryKind phi = DictionaryKind::gaussian;
    DictionaryKind psi = DictionaryKind::gaussian;
    OmegaMode omega = OmegaMode::without_replacement;
    SparsityFlavor flavor = SparsityFlavor::exact;

    std::vector<Eigen::Index> m{32};
    std::vector<Eigen::Index> s1{2};
    std::vector<Eigen::Index> s2{2};
    std::vector<std::optional<double>> mu1{std::nullopt};  // "none" drops the flatness constraint
    std::vector<std::optional<double>> mu2{std::nullopt};
    std::vector<double> delta{0.5};  // bounds only

    int trials = 200;
    std::uint64_t seed = 0;
    int workers = 1;

    Orthogonality orthogonality = Orthogonality::both;  // rop
    bool decoupled = false;                             // rop
    int draws = 2000;                                   // isotropy
    bool mirrored = false;                              // isotropy
    double success_tol = 1e-4;                          // recover
    int max_iters = 100;                                // recover
    double constant = 1.0;                              // bounds: absolute constant C
    std::string out;                                    // empty: stdout

    /// Throws ValidationError naming the offending field.
    void validate() const;
};

/// Keys accepted in config files and as --key flags.
const std::vector<std::string>& config_keys();

/// Parses `key = value` lines ('#' starts a comment). Unknown keys and duplicates are errors.
std::map<std::string, std::string> parse_config_text(const std::string& text, const std::string& origin);
std::map<std::string, std::string> read_config_file(const std::string& path);

struct ConfigProvenance {
    std::string key;
    std::string value;
    std::string source;  // "file", "flag", or "flag (overrides file value ...)"
};

/// Applies file values, then flag values, onto the defaults. Validation errors name the key.
SweepConfig build_config(const std::map<std::string, std::string>& file_values,
                         const std::map<std::string, std::string>& flag_values,
                         std::vector<ConfigProvenance>* provenance = nullptr);

/// Flat key=value rendering of a config (round-trips through parse_config_text).
std::string render_config(const SweepConfig& config);

struct Cell {
    std::size_t index = 0;
    Eigen::Index m = 0;
    Eigen::Index s1 = 0;
    Eigen::Index s2 = 0;
    std::optional<double> mu1;
    std::optional<double> mu2;
    double delta = 0.0;
};

/// Grid cells in row order (m, s1, s2, mu1, mu2, delta; last varies fastest). Kinds that do
/// not use a grid axis collapse it to its first value.
std::vector<Cell> enumerate_cells(const SweepConfig& config);

/// Seed of a cell: the base seed hashed with the cell coordinates (independent of grid order).
std::uint64_t cell_seed(const SweepConfig& config, const Cell& cell);

struct RecoverSummary {
    int trials = 0;
    int successes = 0;
    double success_rate = 0.0;
    double success_se = 0.0;  // binomial standard error
    double median_rel_error = 0.0;
    std::vector<SolveResult> runs;
    std::vector<std::uint64_t> seeds;
};

/// Planted noiseless recovery trials for one cell (a fresh ensemble and planted pair per trial).
RecoverSummary run_recover_cell(const SweepConfig& config, const Cell& cell, bool keep_runs = false);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

void write_csv(std::ostream& out, const CsvTable& table);
std::string format_double(double value);

struct SweepOutput {
    CsvTable table;
    std::vector<double> cell_wall_time;
};

/// Runs every cell (cells in parallel on `workers` threads, trials within a cell sequential)
/// and assembles the rows in grid order. Infeasible cells keep their row with NA values and a
/// reason in the note column. With record_wall_time = false the wall_time column holds NA so
/// reruns are byte-identical; timings stay in cell_wall_time.
SweepOutput run_sweep(const SweepConfig& config, bool record_wall_time = false);

/// Writes the CSV to config.out and the metadata sidecar to config.out + ".meta" (JSON with the
/// config, tool version and per-cell timings). ValidationError if the path is not writable.
void write_sweep(const SweepConfig& config, const SweepOutput& output);

/// Estimator CSV row in the column order of estimator_header().
std::vector<std::string> estimator_header();
std::vector<std::string> estimator_row(const EstimateReport& report, bool record_wall_time,
                                       const std::string& note = "");

/// Per-solve CSV row.
std::vector<std::string> solve_header();
std::vector<std::string> solve_row(Eigen::Index n, Eigen::Index m, const Cell& cell, std::uint64_t seed,
                                   const SolveResult& result);

}  // namespace sbd
