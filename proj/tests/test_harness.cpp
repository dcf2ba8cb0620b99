#include <doctest.h>

#include "sbd/harness.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace sbd;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("sbd_test_" + name)).string();
}

std::string csv_text(const CsvTable& t) {
    std::ostringstream out;
    write_csv(out, t);
    return out.str();
}

}  // namespace

TEST_CASE("config: minimal flags give a valid config with defaults") {
    const auto c = build_config({}, {{"n", "32"}, {"m", "16"}, {"kind", "rap"}});
    CHECK(c.kind == ExperimentKind::rap);
    CHECK(c.n == 32);
    CHECK(c.m == std::vector<Eigen::Index>{16});
    CHECK(c.s1 == std::vector<Eigen::Index>{2});
    CHECK_FALSE(c.mu1.front().has_value());
    CHECK(c.trials == 200);
    CHECK(c.phi == DictionaryKind::gaussian);
}

TEST_CASE("config: file parsing, lists and precedence") {
    const auto file = parse_config_text("# comment\nn = 64\nm = 16, 32,64  # grid\nmu2 = none,4\nseed = 9\n", "cfg");
    CHECK(file.at("m") == "16, 32,64");
    std::vector<ConfigProvenance> log;
    const auto c = build_config(file, {{"seed", "11"}, {"trials", "50"}}, &log);
    CHECK(c.m == std::vector<Eigen::Index>{16, 32, 64});
    CHECK(c.mu2.size() == 2);
    CHECK_FALSE(c.mu2[0].has_value());
    CHECK(*c.mu2[1] == 4.0);
    CHECK(c.seed == 11);
    CHECK(c.trials == 50);
    bool logged = false;
    for (const auto& p : log)
        if (p.key == "seed") {
            logged = true;
            CHECK(p.value == "11");
            CHECK(p.source.find("overrides file value '9'") != std::string::npos);
        }
    CHECK(logged);

    // rendering round-trips
    const auto again = build_config(parse_config_text(render_config(c), "render"), {});
    CHECK(render_config(again) == render_config(c));
}

TEST_CASE("config: errors name the offending field") {
    auto message = [](auto&& fn) -> std::string {
        try {
            fn();
        } catch (const ValidationError& e) {
            return e.what();
        }
        return "";
    };
    CHECK(message([] { parse_config_text("n = 4\nbogus = 1\n", "f"); }).find("bogus") != std::string::npos);
    CHECK(message([] { parse_config_text("n 4\n", "f"); }).find("f:1") != std::string::npos);
    CHECK(message([] { parse_config_text("n = 4\nn = 5\n", "f"); }).find("duplicate") != std::string::npos);
    CHECK(message([] { build_config({}, {{"m", "16,,32"}}); }).rfind("m:", 0) == 0);
    CHECK(message([] { build_config({}, {{"m", "16,32,"}}); }).rfind("m:", 0) == 0);
    CHECK(message([] { build_config({}, {{"s1", "two"}}); }).rfind("s1:", 0) == 0);
    CHECK(message([] { build_config({}, {{"mu1", "0.5"}}); }).rfind("mu1:", 0) == 0);
    CHECK(message([] { build_config({}, {{"delta", "1.5"}}); }).rfind("delta:", 0) == 0);
    CHECK(message([] { build_config({}, {{"trials", "0"}}); }).rfind("trials:", 0) == 0);
    CHECK(message([] { build_config({}, {{"phi", "fourier"}}); }).rfind("phi:", 0) == 0);
    CHECK(message([] { build_config({}, {{"kind", "isotropy"}, {"n", "128"}}); }).rfind("n:", 0) == 0);
    CHECK(message([] { build_config({{"extra", "1"}}, {}); }).find("extra") != std::string::npos);
    CHECK_THROWS_AS(read_config_file("/nonexistent/dir/cfg"), ValidationError);
}

TEST_CASE("cells: grid order and order-independent seeds") {
    auto c = build_config({}, {{"m", "8,16"}, {"s1", "1,2"}, {"mu2", "none,3"}});
    const auto cells = enumerate_cells(c);
    REQUIRE(cells.size() == 8);
    CHECK(cells[0].m == 8);
    CHECK(cells[1].mu2 == std::optional<double>(3.0));
    CHECK(cells[2].s1 == 2);
    CHECK(cells[4].m == 16);

    auto reordered = build_config({}, {{"m", "16,8"}, {"s1", "2,1"}, {"mu2", "3,none"}});
    for (const auto& a : cells) {
        bool found = false;
        for (const auto& b : enumerate_cells(reordered))
            if (a.m == b.m && a.s1 == b.s1 && a.mu2 == b.mu2) {
                CHECK(cell_seed(c, a) == cell_seed(reordered, b));
                found = true;
            }
        CHECK(found);
    }
    CHECK(cell_seed(c, cells[0]) != cell_seed(c, cells[1]));
    c.seed = 1;
    CHECK(cell_seed(c, cells[0]) != cell_seed(reordered, enumerate_cells(reordered)[7]));

    const auto iso = build_config({}, {{"kind", "isotropy"}, {"n", "16"}, {"m", "4,8"}, {"s1", "1,2,3"}});
    CHECK(enumerate_cells(iso).size() == 2);
}

TEST_CASE("csv: quoting and number formatting") {
    CsvTable t;
    t.header = {"a", "b"};
    t.rows = {{"x,y", "say \"hi\""}, {format_double(0.1), format_double(std::nan(""))}};
    CHECK(csv_text(t) == "a,b\n\"x,y\",\"say \"\"hi\"\"\"\n0.1,NA\n");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("sweep: a one-cell sweep is a single estimator call") {
    const auto c = build_config({}, {{"n", "32"}, {"m", "16"}, {"s1", "2"}, {"s2", "3"}, {"mu2", "4"},
                                     {"trials", "50"}, {"seed", "5"}});
    const auto out = run_sweep(c);
    REQUIRE(out.table.rows.size() == 1);
    const auto cell = enumerate_cells(c).front();
    const auto seed = cell_seed(c, cell);
    const auto ens = Ensemble::generate(32, 16, c.phi, c.psi, seed, c.omega);
    EstimatorOptions opts;
    opts.trials = 50;
    opts.seed = trial_seed(seed, 1);
    auto direct = estimate_rip(ens, {32, 2, std::nullopt, SparsityFlavor::exact, Side::left},
                               {32, 3, 4.0, SparsityFlavor::exact, Side::right}, opts);
    direct.seed = 5;
    CHECK(out.table.rows.front() == estimator_row(direct, false));
    CHECK(out.table.header == estimator_header());
}

TEST_CASE("sweep: infeasible cells are flagged and skipped") {
    const auto c = build_config({}, {{"n", "16"}, {"m", "8,32"}, {"s1", "2,20"}, {"trials", "5"}, {"seed", "4"}});
    const auto out = run_sweep(c);
    REQUIRE(out.table.rows.size() == 4);
    CHECK(out.table.rows[0].back().empty());
    CHECK(out.table.rows[1].back().find("skipped") == 0);
    CHECK(out.table.rows[2].back().find("m exceeds n") != std::string::npos);
    CHECK(out.table.rows[1][8] == "NA");
    CHECK(out.table.rows[1][12] == "4");
}

TEST_CASE("sweep: byte-identical reruns across worker counts, with sidecar") {
    for (const char* kind : {"rip", "rap", "rop", "isotropy", "recover", "bounds"}) {
        std::map<std::string, std::string> flags = {{"kind", kind}, {"n", "16"}, {"m", "4,8"}, {"s1", "1,2"},
                                                    {"trials", "6"}, {"seed", "21"}, {"draws", "20"}};
        flags["out"] = temp_path(std::string(kind) + "_a.csv");
        auto a = build_config({}, flags);
        write_sweep(a, run_sweep(a));
        flags["out"] = temp_path(std::string(kind) + "_b.csv");
        flags["workers"] = "3";
        auto b = build_config({}, flags);
        write_sweep(b, run_sweep(b));
        const auto first = slurp(a.out);
        CHECK(!first.empty());
        CHECK(first == slurp(b.out));
        const auto meta = slurp(a.out + ".meta");
        CHECK(meta.find(kToolVersion) != std::string::npos);
        CHECK(meta.find("cell_seed") != std::string::npos);
        std::filesystem::remove(a.out);
        std::filesystem::remove(b.out);
        std::filesystem::remove(a.out + ".meta");
        std::filesystem::remove(b.out + ".meta");
    }
    auto bad = build_config({}, {{"out", "/nonexistent/dir/out.csv"}, {"trials", "2"}});
    CHECK_THROWS_AS(write_sweep(bad, run_sweep(bad)), ValidationError);
}

TEST_CASE("sweep: delta_hat decreases along an m grid") {
    const auto c = build_config({}, {{"kind", "rap"}, {"n", "64"}, {"m", "8,16,32,64"}, {"mu2", "4"},
                                     {"trials", "300"}, {"seed", "2"}});
    const auto out = run_sweep(c);
    std::vector<double> delta;
    std::vector<double> q90;
    for (const auto& row : out.table.rows) {
        delta.push_back(std::stod(row[8]));
        q90.push_back(std::stod(row[10]));
    }
    for (std::size_t i = 1; i < delta.size(); ++i) CHECK(delta[i] <= delta[i - 1] + (delta[i - 1] - q90[i - 1]));
    CHECK(delta.back() < delta.front());
}

TEST_CASE("recover cell summary") {
    const auto c = build_config({}, {{"kind", "recover"}, {"n", "32"}, {"m", "24"}, {"trials", "8"}, {"seed", "3"}});
    const auto cell = enumerate_cells(c).front();
    const auto summary = run_recover_cell(c, cell, true);
    CHECK(summary.trials == 8);
    CHECK(summary.runs.size() == 8);
    CHECK(summary.success_rate == doctest::Approx(summary.successes / 8.0));
    CHECK(summary.successes >= 5);
    const auto row = solve_row(32, 24, cell, summary.seeds[0], summary.runs[0]);
    CHECK(row.size() == solve_header().size());
}
