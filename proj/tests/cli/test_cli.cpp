#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "cli/svg.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace bsqz::cli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "bsqz-test-cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

using Rows = std::vector<std::map<std::string, std::string>>;

Rows read_csv(const fs::path& p) {
    std::istringstream in(slurp(p));
    std::string line;
    std::getline(in, line);
    std::vector<std::string> header;
    {
        std::istringstream h(line);
        std::string cell;
        while (std::getline(h, cell, ',')) header.push_back(cell);
    }
    Rows rows;
    while (std::getline(in, line)) {
        std::istringstream r(line);
        std::string cell;
        std::map<std::string, std::string> row;
        for (std::size_t i = 0; std::getline(r, cell, ','); ++i) row[header.at(i)] = cell;
        rows.push_back(row);
    }
    return rows;
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "bsqz");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

ExperimentConfig small(const std::string& out) {
    ExperimentConfig c;
    c.model = "synth:k=3,n=12,seed=2";
    c.seed = 5;
    c.out = out;
    c.sampler.m = 150;
    c.eval.trajectories = 60;
    c.eval.horizon = 40;
    return c;
}

// Sparse near-deterministic model on which lossy VDC compression blows up the value iteration.
std::string sparse_model_text(std::uint64_t seed) {
    const std::size_t n = 10, A = 3, Z = 4;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<std::vector<std::vector<double>>> T(A), O(A);
    for (std::size_t a = 0; a < A; ++a) {
        T[a].assign(n, std::vector<double>(n, 0.0));
        O[a].assign(n, std::vector<double>(Z, 0.0));
        for (std::size_t s = 0; s < n; ++s) {
            const std::size_t s1 = rng() % n, s2 = rng() % n;
            const double p = u(rng);
            T[a][s][s1] += p;
            T[a][s][s2] += 1 - p;
            O[a][s][rng() % Z] += 0.9;
            O[a][s][rng() % Z] += 0.1;
        }
    }
    std::ostringstream os;
    os.precision(17);
    os << "discount: 0.95\nvalues: reward\nstates: " << n << "\nactions: " << A << "\nobservations: " << Z << "\n";
    for (std::size_t a = 0; a < A; ++a) {
        os << "T: " << a << "\n";
        for (const auto& row : T[a]) {
            for (double v : row) os << v << ' ';
            os << "\n";
        }
        os << "O: " << a << "\n";
        for (const auto& row : O[a]) {
            for (double v : row) os << v << ' ';
            os << "\n";
        }
    }
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const double r = (u(rng) < 0.1 ? 1.0 : 0.0) - (u(rng) < 0.1 ? 1.0 : 0.0);
            os << "R: " << a << " : " << s << " : * : * " << r << "\n";
        }
    return os.str();
}

}  // namespace

TEST_CASE("config round trips through its text form") {
    ExperimentConfig c;
    c.model = "models/x.POMDP";
    c.seed = 42;
    c.sampler.seed = 7;
    c.compress.method = "pnmf";
    c.compress.k = 9;
    c.compress.lambda = "auto";
    c.compress.tau = 0.1;
    c.solver.synchronous = true;
    c.eval.discounted = false;
    c.report.values = {2, 4, 8};
    const auto back = ExperimentConfig::parse(c.serialise());
    CHECK(back.serialise() == c.serialise());
    CHECK(config_hash(back) == config_hash(c));
    CHECK(back.sampler_seed() == 7);
    CHECK(back.compress_seed() == 43);
    CHECK(back.solver_seed() == 44);
    ExperimentConfig d = c;
    d.compress.k = 10;
    CHECK(config_hash(d) != config_hash(c));
    for (const auto& key : ExperimentConfig::keys()) CHECK_NOTHROW(back.get(key));
}

TEST_CASE("config parsing and overrides") {
    const auto c = ExperimentConfig::parse("# comment\nmodel = a.POMDP\n\nsolver.points = 50   \ncompress.method=vdc\n");
    CHECK(c.model == "a.POMDP");
    CHECK(c.solver.points == 50);
    CHECK(c.compress.method == "vdc");
    try {
        ExperimentConfig::parse("model = a\nsolver.nope = 1\n");
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK_THROWS_AS(ExperimentConfig::parse("sampler.m = many\n"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::parse("just words\n"), ConfigError);
    ExperimentConfig o;
    apply_override(o, "eval.repeats=3");
    CHECK(o.eval.repeats == 3);
    CHECK_THROWS_AS(apply_override(o, "eval.repeats"), ConfigError);
    o.compress.method = "zip";
    CHECK_THROWS_AS(o.validate(), ConfigError);
    CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("exit codes") {
    const auto dir = fresh_dir("exit");
    CHECK(cli({"compress", "--set", "model=" + (dir / "missing.POMDP").string(), "--out", dir.string()}) == kExitConfig);
    CHECK(cli({"frobnicate"}) == kExitConfig);
    CHECK(cli({"solve", "--set", "sampler.q=1"}) == kExitConfig);
    CHECK(cli({"solve", "--config", (dir / "absent.cfg").string()}) == kExitConfig);
    CHECK(cli({"diagnose", "--set", "model=synth:k=2,n=4,seed=1", "--out", dir.string()}) == kExitConfig);
    std::ofstream(dir / "bad.POMDP") << "discount: 0.9\nstates: 2\nactions: 1\nobservations: 1\nT: 0\n0.5 0.2\n0 1\nO: * uniform\n";
    CHECK(cli({"solve", "--set", "model=" + (dir / "bad.POMDP").string(), "--out", dir.string()}) == kExitConfig);
}

TEST_CASE("compress with P-NMF on a low-rank model") {
    const auto dir = fresh_dir("compress");
    auto c = small(dir.string());
    c.compress.method = "pnmf";
    c.compress.k = 3;
    c.compress.restarts = 3;
    std::ostringstream log;
    REQUIRE(run_command("compress", c, log) == kExitOk);
    const auto errors = read_csv(dir / "errors.csv");
    REQUIRE(errors.size() == 1);
    CHECK(std::stod(errors[0].at("belief_residual")) <= 1e-4);
    CHECK(errors[0].at("nonnegative") == "true");
    CHECK(fs::exists(dir / "basis.bin"));
    CHECK(fs::exists(dir / "compressed.bin"));
    CHECK(read_csv(dir / "compress_trace.csv").size() > 1);
    const auto manifest = slurp(dir / "manifest.json");
    CHECK(manifest.find("config_hash") != std::string::npos);
    CHECK(manifest.find("wall_seconds") != std::string::npos);
}

TEST_CASE("report table matches the per-repeat rewards") {
    const auto dir = fresh_dir("report");
    auto c = small(dir.string());
    c.compress.method = "pnmf";
    c.compress.k = 3;
    c.report.values = {2, 3};
    std::ostringstream log;
    REQUIRE(run_command("report", c, log) == kExitOk);
    const auto table = read_csv(dir / "table.csv");
    const auto reps = read_csv(dir / "table_repeats.csv");
    REQUIRE(table.size() == 2);
    for (const auto& row : table) {
        std::vector<double> xs;
        for (const auto& r : reps)
            if (r.at("policy") == row.at("policy")) xs.push_back(std::stod(r.at("mean_reward")));
        REQUIRE(xs.size() == 5);
        double mean = 0;
        for (double x : xs) mean += x / 5.0;
        double ss = 0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        const double sd = std::sqrt(ss / 4.0);
        CHECK(std::stod(row.at("mean")) == doctest::Approx(mean).epsilon(1e-12));
        CHECK(std::stod(row.at("std")) == doctest::Approx(sd).epsilon(1e-10));
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.4g\xC2\xB1%.2g", mean, sd);
        CHECK(row.at("mean_pm_std") == buf);
    }
    for (const char* f : {"figure1.csv", "figure1.svg", "figure2.csv", "figure2.svg"}) CHECK(fs::exists(dir / f));
    CHECK(read_csv(dir / "figure1.csv").size() == 2);
    CHECK(slurp(dir / "figure2.svg").rfind("<svg", 0) == 0);
}

TEST_CASE("solving with a diverging VDC basis ends the trace with the verdict") {
    const auto dir = fresh_dir("diverge");
    std::ofstream(dir / "sparse.POMDP") << sparse_model_text(2);
    ExperimentConfig c;
    c.model = (dir / "sparse.POMDP").string();
    c.out = dir.string();
    c.sampler.m = 100;
    c.compress.method = "vdc";
    c.compress.vdc_mode = "lossy";
    c.compress.k = 3;
    std::ostringstream log;
    REQUIRE(run_command("solve", c, log) == kExitOk);
    const auto trace = read_csv(dir / "trace.csv");
    REQUIRE(!trace.empty());
    CHECK(trace.back().at("status") == "diverged");
    CHECK(std::stod(read_csv(dir / "errors.csv")[0].at("contraction_margin")) > 1.0);
}

TEST_CASE("identical configs give byte-identical outputs") {
    const auto a = fresh_dir("det-a"), b = fresh_dir("det-b");
    auto ca = small(a.string());
    ca.compress.method = "onmf";
    ca.compress.k = 3;
    ca.compress.max_iters = 200;
    auto cb = ca;
    cb.out = b.string();
    std::ostringstream log;
    REQUIRE(run_command("eval", ca, log) == kExitOk);
    REQUIRE(cli({"eval", "--config", (a / "config.txt").string(), "--out", b.string(), "--threads", "1"}) == kExitOk);
    int compared = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        const auto ext = e.path().extension();
        if (ext != ".csv" && ext != ".bin") continue;
        CHECK_MESSAGE(slurp(e.path()) == slurp(b / e.path().filename()), e.path().filename().string());
        ++compared;
    }
    CHECK(compared >= 5);
}

TEST_CASE("svg charts") {
    const auto svg = line_chart({"t", "x", "y", true, 300, 200}, {{"a", {1, 2, 3}, {1, 10, 100}}, {"b", {1, 2}, {0, NAN}}});
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK(svg.find("nan") == std::string::npos);
}
