#include "oracles.hpp"

#include "qkr/cli.hpp"
#include "qkr/io.hpp"

#include <doctest.h>
#include <json.hpp>

#include <fstream>
#include <sstream>

using namespace qkr;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream(path) << text;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* kSmallConfig = R"({
  "kick_strength": 3.1,
  "hbar_eff": 0.8,
  "seed": 4,
  "run": {"n_kicks": 12, "record": [3, 6, 12], "samples": 150, "points": 4000,
          "grid": {"p_max": 60, "spacing": 0.8}, "portrait": {"bins_x": 16, "bins_p": 16, "superpose": 3}}
})";

struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& tag) : dir(oracle::scratch_dir(tag)) {}
    ~Scratch() { fs::remove_all(dir); }
};

}  // namespace

TEST_CASE("record list parsing") {
    CHECK(cli::parse_record_list("1-3,7,10") == std::vector<std::uint64_t>{1, 2, 3, 7, 10});
    CHECK(cli::parse_record_list("20") == std::vector<std::uint64_t>{20});
    CHECK_THROWS_AS(cli::parse_record_list("5-2"), ConfigError);
    CHECK_THROWS_AS(cli::parse_record_list("x"), ConfigError);
    CHECK_THROWS_AS(cli::parse_record_list("-3"), ConfigError);
}

TEST_CASE("distribution CSV round trip and malformed input") {
    Scratch s("csv");
    MomentumDistribution d;
    d.grid = MomentumGrid::symmetric(2.0, 0.5);
    d.density = Eigen::ArrayXd::LinSpaced(d.grid.size, 0.1, 0.9);
    d.n_kicks = 7;
    d.n_samples = 99;
    CHECK_THROWS_AS(write_distribution_csv(s.dir / "d.csv", d, "abc"), IoError);
    fs::create_directories(s.dir);
    write_distribution_csv(s.dir / "d.csv", d, "abc");
    const auto back = read_distribution_csv(s.dir / "d.csv");
    CHECK(back.grid == d.grid);
    CHECK((back.density == d.density).all());
    CHECK(back.n_kicks == 7);
    CHECK(back.n_samples == 99);
    CHECK(slurp(s.dir / "d.csv").rfind("# digest=abc ", 0) == 0);

    write(s.dir / "bad.csv", "# digest=x\np,density\n0,1\n1,abc\n2,1\n");
    try {
        read_distribution_csv(s.dir / "bad.csv");
        FAIL("malformed row accepted");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("bad.csv:4") != std::string::npos);
    }
    write(s.dir / "header.csv", "p,dens\n0,1\n");
    CHECK_THROWS_AS(read_distribution_csv(s.dir / "header.csv"), IoError);
    write(s.dir / "gap.csv", "p,density\n0,1\n1,1\n3,1\n");
    CHECK_THROWS_AS(read_distribution_csv(s.dir / "gap.csv"), IoError);
}

TEST_CASE("missing configuration fails before any output") {
    Scratch s("missing");
    cli::RunOptions opts;
    opts.config = s.dir / "nope.json";
    opts.out = s.dir / "out";
    std::ostringstream log;
    CHECK(cli::cmd_classical(opts, log) == cli::kConfigError);
    CHECK(cli::cmd_quantum(opts, log) == cli::kConfigError);
    CHECK_FALSE(fs::exists(opts.out));
    CHECK(log.str().find("nope.json") != std::string::npos);

    write(s.dir / "typo.json", R"({"kick_strength": 3.1, "hbar": 0.8, "run": {"n_kicks": 1}})");
    opts.config = s.dir / "typo.json";
    CHECK(cli::cmd_quantum(opts, log) == cli::kConfigError);
    CHECK_FALSE(fs::exists(opts.out));
}

TEST_CASE("classical and quantum runs write a consistent manifest") {
    Scratch s("runs");
    write(s.dir / "small.json", kSmallConfig);
    for (const std::string engine : {"classical", "quantum"}) {
        cli::RunOptions opts;
        opts.config = s.dir / "small.json";
        opts.out = s.dir / engine;
        std::ostringstream log;
        const int code = engine == "classical" ? cli::cmd_classical(opts, log) : cli::cmd_quantum(opts, log);
        REQUIRE_MESSAGE(code == 0, log.str());

        const json manifest = json::parse(slurp(opts.out / "manifest.json"));
        const std::string digest = manifest.at("digest");
        CHECK(manifest.at("engine") == engine);
        CHECK(manifest.at("record") == json({3, 6, 12}));
        REQUIRE(manifest.at("files").size() >= 7);
        for (const std::string file : manifest.at("files")) {
            CAPTURE(file);
            REQUIRE(fs::exists(opts.out / file));
            CHECK(slurp(opts.out / file).rfind("# digest=" + digest, 0) == 0);
        }
        const auto d = read_distribution_csv(opts.out / (engine + "_distribution_n12.csv"));
        CHECK(d.n_kicks == 12);
        CHECK(d.integral() == doctest::Approx(1.0).epsilon(1e-9));
        const auto series = read_series_csv(opts.out / (engine + "_series_energy.csv"));
        CHECK(series.kicks == std::vector<std::uint64_t>{3, 6, 12});
    }
    CHECK(fs::exists(s.dir / "classical" / "classical_portrait.csv"));
}

TEST_CASE("zero-kick classical run reproduces the initial Gaussian") {
    Scratch s("zero");
    write(s.dir / "zero.json", R"({"kick_strength": 3.1, "hbar_eff": 0.8, "seed": 1,
        "run": {"n_kicks": 0, "points": 200000, "grid": {"p_max": 12, "spacing": 0.4}}})");
    cli::RunOptions opts;
    opts.config = s.dir / "zero.json";
    opts.out = s.dir / "out";
    std::ostringstream log;
    REQUIRE(cli::cmd_classical(opts, log) == 0);
    const auto d = read_distribution_csv(opts.out / "classical_distribution_n0.csv");
    const double sigma = 1.65 * 0.8;
    const Eigen::ArrayXd p = d.momenta();
    const Eigen::ArrayXd gauss = (-p.square() / (2 * sigma * sigma)).exp() / (sigma * std::sqrt(kTwoPi));
    CHECK((d.density - gauss).abs().maxCoeff() < 0.01);
}

TEST_CASE("repeated runs are byte-identical") {
    Scratch s("repeat");
    write(s.dir / "small.json", kSmallConfig);
    auto run = [&](const std::string& name, std::size_t threads, bool reproducible) {
        cli::RunOptions opts;
        opts.config = s.dir / "small.json";
        opts.out = s.dir / name;
        opts.threads = threads;
        opts.reproducible_reduction = reproducible;
        std::ostringstream log;
        REQUIRE(cli::cmd_quantum(opts, log) == 0);
        REQUIRE(cli::cmd_classical(opts, log) == 0);
        return opts.out;
    };
    auto same_data = [](const fs::path& a, const fs::path& b) {
        for (const auto& entry : fs::directory_iterator(a)) {
            if (entry.path().extension() != ".csv") continue;
            CAPTURE(entry.path().filename().string());
            CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
        }
    };
    same_data(run("a", 2, false), run("b", 2, false));
    same_data(run("c", 1, true), run("d", 3, true));
}

TEST_CASE("analyze") {
    Scratch s("analyze");
    fs::create_directories(s.dir);
    MomentumDistribution even;
    even.grid = MomentumGrid::symmetric(10.0, 0.5);
    even.density = (-even.momenta().abs()).exp();
    even.density /= even.integral();
    write_distribution_csv(s.dir / "even.csv", even, "x");

    cli::AnalyzeOptions a;
    a.kind = "asymmetry";
    a.inputs = {s.dir / "even.csv"};
    std::ostringstream log, report;
    REQUIRE(cli::cmd_analyze(a, log, report) == 0);
    const json r = json::parse(report.str());
    CHECK(r.at("value").get<double>() < 1e-12);
    CHECK(r.at("inputs")[0].at("digest") == file_digest(s.dir / "even.csv"));

    a.kind = "moments";
    a.out = s.dir / "moments.json";
    REQUIRE(cli::cmd_analyze(a, log, report) == 0);
    CHECK(std::abs(json::parse(slurp(a.out)).at("mean").get<double>()) < 1e-14);

    TimeSeries series;
    for (std::uint64_t n = 1; n <= 60; ++n) series.push(n, 0.5 * std::pow(double(n), 1.35));
    write_series_csv(s.dir / "series.csv", series, "x", "right_energy");
    a.kind = "power-law";
    a.inputs = {s.dir / "series.csv"};
    REQUIRE(cli::cmd_analyze(a, log, report) == 0);
    const json fit = json::parse(slurp(a.out));
    CHECK(fit.at("estimate").get<double>() == doctest::Approx(1.35).epsilon(1e-10));
    CHECK(fit.at("window") == json({5.0, 50.0}));

    a.window = {100, 200};
    CHECK(cli::cmd_analyze(a, log, report) == cli::kNumericalError);

    a.kind = "bogus";
    CHECK(cli::cmd_analyze(a, log, report) == cli::kConfigError);

    write(s.dir / "broken.csv", "p,density\n0,1\n0.5,oops\n");
    a.kind = "asymmetry";
    a.inputs = {s.dir / "broken.csv"};
    std::ostringstream err;
    CHECK(cli::cmd_analyze(a, err, report) == cli::kIoError);
    CHECK(err.str().find("broken.csv:3") != std::string::npos);
}

TEST_CASE("gogolin tabulation") {
    Scratch s("gogolin");
    fs::create_directories(s.dir);
    cli::GogolinOptions g;
    g.xi = 1.0;
    g.p_min = -100.0;
    g.p_max = 100.0;
    g.spacing = 0.01;
    g.out = s.dir / "g.csv";
    std::ostringstream log;
    REQUIRE(cli::cmd_gogolin(g, log) == 0);
    const auto d = read_distribution_csv(g.out);
    // Simpson on each half line; the density has a kink at p = 0.
    const Eigen::Index mid = d.grid.size / 2;
    REQUIRE(d.grid.at(mid) == 0.0);
    auto half = [&](Eigen::Index from, Eigen::Index step) {
        double sum = d.density(from) + d.density(from + step * mid);
        for (Eigen::Index i = 1; i < mid; ++i) sum += d.density(from + step * i) * (i % 2 ? 4.0 : 2.0);
        return sum * d.grid.spacing / 3.0;
    };
    CHECK(half(mid, 1) + half(mid, -1) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(d.density(mid) == doctest::Approx(static_cast<double>(oracle::gogolin_point(0.0L, 1.0L))).epsilon(1e-8));

    g.xi = 0.0;
    CHECK(cli::cmd_gogolin(g, log) == cli::kConfigError);
    g.xi = 35.0;
    g.out = s.dir / "no" / "such" / "dir" / "g.csv";
    CHECK(cli::cmd_gogolin(g, log) == cli::kIoError);
}
