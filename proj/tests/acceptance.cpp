// End-to-end acceptance runner: one PASS/FAIL line per criterion.
// Simulations go through the same entry points as the command-line tool and
// are read back from the CSV files they write.

#include "oracles.hpp"

#include "qkr/analysis.hpp"
#include "qkr/classical.hpp"
#include "qkr/cli.hpp"
#include "qkr/config.hpp"
#include "qkr/io.hpp"
#include "qkr/parallel.hpp"
#include "qkr/quadrature.hpp"
#include "qkr/quantum.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

using namespace qkr;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
    int criterion;
    bool pass;
    std::string detail;
};

std::vector<Outcome> outcomes;

void report(int criterion, bool pass, const std::string& detail) {
    outcomes.push_back({criterion, pass, detail});
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Run {
    fs::path dir;
    std::string engine;
    double seconds = 0.0;
    json manifest;

    MomentumDistribution at(std::uint64_t n) const {
        return read_distribution_csv(dir / (engine + "_distribution_n" + std::to_string(n) + ".csv"));
    }
    TimeSeries series(const std::string& name) const {
        return read_series_csv(dir / (engine + "_series_" + name + ".csv"));
    }
};

Run execute(const std::string& engine, const RunConfig& cfg, const fs::path& dir, std::size_t threads) {
    fs::create_directories(dir);
    const fs::path config_path = dir.string() + ".json";
    write_text_atomic(config_path, config_to_json(cfg).dump(2));
    cli::RunOptions opts;
    opts.config = config_path;
    opts.out = dir;
    opts.threads = threads;
    opts.reproducible_reduction = true;
    const auto t0 = std::chrono::steady_clock::now();
    const int code = engine == "classical" ? cli::cmd_classical(opts, std::cerr) : cli::cmd_quantum(opts, std::cerr);
    Run run{dir, engine, seconds_since(t0), {}};
    if (code != 0) throw std::runtime_error(engine + " run in " + dir.string() + " exited with " + std::to_string(code));
    run.manifest = json::parse(slurp(dir / "manifest.json"));
    return run;
}

// Worst |<p>| / (4 std / sqrt(N)) over every recorded time of a run.
struct CurrentCheck {
    double worst_ratio = 0.0;
    std::string where;
};

void current_check(const Run& run, std::size_t n_eff, CurrentCheck& acc) {
    for (const auto& entry : run.manifest.at("zero_current")) {
        const auto n = entry.at("n").get<std::uint64_t>();
        const Moments m = moments(run.at(n));
        const double sd = std::sqrt(std::max(0.0, m.energy - m.mean * m.mean));
        const double ratio = std::abs(m.mean) / (4.0 * sd / std::sqrt(double(n_eff)));
        if (ratio > acc.worst_ratio) {
            acc.worst_ratio = ratio;
            acc.where = fmt("%s n=%llu <p>=%.4g bound=%.4g", (run.dir.filename().string()).c_str(),
                            static_cast<unsigned long long>(n), m.mean, 4.0 * sd / std::sqrt(double(n_eff)));
        }
    }
}

void oracle_suite() {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::string> failures;
    auto expect = [&](bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    };
    const SimParams ratchet = make_params(3.1, 0.8, ratchet_phase_sequence());

    {  // unitarity
        const SimParams p = make_params(3.1, 1.3, ratchet_phase_sequence());
        const auto stats = propagate(initial_state(0.4, p, 256), p, 1000, std::vector<std::uint64_t>{1000},
                                     [](std::uint64_t, const QuantumState&) {});
        expect(stats.max_norm_drift < 1e-10, fmt("norm drift %.3g over 1000 kicks", stats.max_norm_drift));
    }
    for (double ratio : {0.5, 3.875, 10.0}) {  // single kick against J_m
        const SimParams p = make_params(ratio * 0.8, 0.8, ratchet_phase_sequence());
        const auto s = floquet_step(initial_state(0.0, p, 256), p, 1);
        double worst = 0.0;
        for (Eigen::Index k = 0; k < s.size(); ++k) {
            const double j = static_cast<double>(oracle::bessel_j(static_cast<int>(s.lattice_index(k)), ratio));
            worst = std::max(worst, std::abs(std::norm(s.amplitudes(k)) - j * j));
        }
        expect(worst < 1e-8, fmt("Bessel density error %.3g at K/hbar=%g", worst, ratio));
    }
    for (double xi : {1.0, 35.0, 200.0}) {  // normalization
        const double mass = static_cast<double>(oracle::gogolin_total_mass(xi));
        const double own =
            2.0 * integrate_adaptive([xi](double p) { return gogolin_density(p, xi); }, 0.0, 320.0 * xi, 1e-10).value;
        expect(std::abs(mass - 1.0) < 1e-6 && std::abs(own - 1.0) < 1e-6,
               fmt("Gogolin mass %.10f / %.10f at xi=%g", mass, own, xi));
    }
    for (double p : {0.0, 0.3, 5.0, 60.0, 400.0}) {  // scaling
        const double lhs = gogolin_density(p, 35.0);
        const double rhs = gogolin_density(p / 35.0, 1.0) / 35.0;
        expect(std::abs(lhs - rhs) <= 1e-8 * rhs, fmt("Gogolin scaling off at p=%g", p));
    }
    {  // Jacobian
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> ux(0.0, kTwoPi), up(-20.0, 20.0);
        double worst = 0.0;
        const double h = 1e-6;
        for (int i = 0; i < 1000; ++i) {
            const PhasePoint<double> q{ux(rng), up(rng)};
            auto f = [&](double dx, double dp) {
                return kick_map_step(PhasePoint<double>{q.x + dx, q.p + dp}, ratchet, std::uint64_t(i));
            };
            const auto xp = f(h, 0), xm = f(-h, 0), pp = f(0, h), pm = f(0, -h);
            const double det = ((xp.x - xm.x) * (pp.p - pm.p) - (pp.x - pm.x) * (xp.p - xm.p)) / (4 * h * h);
            worst = std::max(worst, std::abs(det - 1.0));
        }
        expect(worst < 1e-6, fmt("Jacobian deviation %.3g", worst));
    }
    {  // power law
        TimeSeries s;
        for (std::uint64_t n = 1; n <= 60; ++n) s.push(n, 2.7 * std::pow(double(n), 1.35));
        const double z = fit_power_law(s, {5, 50}).estimate;
        expect(std::abs(z - 1.35) < 1e-10, fmt("power-law fit %.15g", z));
    }
    {  // grid doubling
        const Eigen::Index m = grid_size_for(ratchet, 15, ratchet.sigma);
        const std::vector<std::uint64_t> rec = {15};
        const auto a = propagate(initial_state(0.53, ratchet, m), ratchet, 15, rec);
        const auto b = propagate(initial_state(0.53, ratchet, 2 * m), ratchet, 15, rec);
        std::map<long, double> da, db;
        for (Eigen::Index k = 0; k < a[0].momenta.size(); ++k) da[std::lround(a[0].momenta(k) / 0.8 * 1e6)] += a[0].density(k);
        for (Eigen::Index k = 0; k < b[0].momenta.size(); ++k) db[std::lround(b[0].momenta(k) / 0.8 * 1e6)] += b[0].density(k);
        double l1 = 0.0;
        for (const auto& [k, v] : db) l1 += std::abs(v - (da.count(k) ? da[k] : 0.0));
        expect(l1 < 1e-6, fmt("grid doubling L1 %.3g", l1));
    }
    const double secs = seconds_since(t0);
    expect(secs < 30.0, fmt("suite took %.1f s", secs));
    std::string detail = fmt("oracle/property suite in %.1f s", secs);
    for (const auto& f : failures) detail += "; " + f;
    report(8, failures.empty(), detail);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance runner"};
    fs::path work = fs::temp_directory_path() / "qkr-acceptance";
    std::size_t threads = 0;
    std::size_t long_samples = 2000;
    app.add_option("--work", work, "scratch directory for run outputs");
    app.add_option("--threads", threads, "worker threads (0 = all cores)");
    app.add_option("--long-samples", long_samples, "quasi-momentum samples for the 10^4-kick run");
    CLI11_PARSE(app, argc, argv);
    threads = resolve_threads(threads);
    fs::remove_all(work);
    fs::create_directories(work);
    std::printf("acceptance: %zu worker thread(s), scratch %s\n", threads, work.string().c_str());

    try {
        // 1, 2: ballistic peak and classical/quantum overlap after 15 kicks.
        const RunConfig fig1 = preset_config("fig1");
        const Run q1 = execute("quantum", fig1, work / "fig1-quantum", threads);
        const Run c1 = execute("classical", fig1, work / "fig1-classical", threads);
        const auto dq = q1.at(15);
        const auto dc = c1.at(15);
        const double hbar = fig1.params.hbar_eff;
        const Peak pq = track_peak(dq, 15, std::numbers::pi / 3);
        const Peak pc = track_peak(dc, 15, std::numbers::pi / 3);
        report(1,
               std::abs(pq.location + 31.2) <= hbar && std::abs(pc.location + 31.2) <= hbar &&
                   q1.seconds + c1.seconds <= 60.0,
               fmt("peak quantum %.3f (pop %.3f), classical %.3f (pop %.3f), target -31.2 +- %.2f; "
                   "runtime %.1f s + %.1f s on %zu thread(s), limit 60 s",
                   pq.location, pq.population, pc.location, pc.population, hbar, q1.seconds, c1.seconds, threads));
        const double l1 = l1_distance(dq, dc);
        report(2, l1 < 0.1, fmt("L1(quantum, classical) at n=15 = %.4f, limit 0.1", l1));

        // 3: anomalous diffusion exponent of the right-side energy.
        const RunConfig fig2 = preset_config("fig2");
        const Run q2 = execute("quantum", fig2, work / "fig2-quantum", threads);
        const Run c2 = execute("classical", fig2, work / "fig2-classical", threads);
        const FitResult zq = fit_power_law(q2.series("right_energy"), {5, 50});
        const FitResult zc = fit_power_law(c2.series("right_energy"), {5, 50});
        report(3,
               std::abs(zq.estimate - 1.35) <= 0.10 && std::abs(zc.estimate - 1.35) <= 0.10 &&
                   q2.seconds + c2.seconds <= 300.0,
               fmt("zeta quantum %.3f +- %.3f, classical %.3f +- %.3f, target 1.35 +- 0.10; runtime %.1f s, limit 300 s",
                   zq.estimate, zq.std_error, zc.estimate, zc.std_error, q2.seconds + c2.seconds));
        {
            for (const auto* run : {&q2, &c2}) {
                std::vector<MomentumDistribution> fronts;
                for (std::uint64_t n = 5; n <= 50; n += 5) fronts.push_back(run->at(n));
                const FitResult fr = front_exponent_check(fronts);
                const FitResult& z = run == &q2 ? zq : zc;
                std::printf("info: %s front exponent %.3f +- %.3f vs zeta/2 = %.3f +- %.3f\n", run->engine.c_str(),
                            fr.estimate, fr.std_error, z.estimate / 2, z.std_error / 2);
            }
        }

        // 5: accelerator-mode threshold.
        const auto above = find_accelerator_orbit(make_params(3.1, 0.8, ratchet_phase_sequence()));
        const auto below = find_accelerator_orbit(make_params(1.0, 0.8, ratchet_phase_sequence()));
        report(5, above.has_value() && !below.has_value(),
               above ? fmt("K=3.1 orbit at (%.6f, %.6f), residual %.2g, %s; K=1.0 %s", above->center.x, above->center.p,
                           above->residual, above->stable ? "elliptic" : "hyperbolic",
                           below ? "orbit found" : "no orbit")
                     : std::string("no orbit at K=3.1"));

        // 6, 7: localization at hbar = 1.3.
        RunConfig fig3 = preset_config("fig3");
        fig3.run.samples = long_samples;
        const Run q3 = execute("quantum", fig3, work / "fig3-quantum", threads);
        const double a20 = asymmetry(q3.at(20)), a200 = asymmetry(q3.at(200)), a10k = asymmetry(q3.at(10000));
        const auto energy = q3.series("energy");
        auto energy_at = [&](std::uint64_t n) {
            for (std::size_t i = 0; i < energy.size(); ++i)
                if (energy.kicks[i] == n) return energy.values[i];
            throw std::runtime_error("energy not recorded at n=" + std::to_string(n));
        };
        const double e5k = energy_at(5000), e10k = energy_at(10000);
        const double change = std::abs(e10k - e5k) / e5k;
        std::string sizes;
        for (const auto& [size, count] : q3.manifest.at("lattice").at("final_sizes").items())
            sizes += (sizes.empty() ? "" : ",") + size + "x" + std::to_string(count.get<int>());
        report(6,
               long_samples >= 2000 && a10k < 0.05 && a20 > a200 && a200 > a10k && change < 0.05 &&
                   q3.seconds <= 3600.0,
               fmt("%zu samples; A(20)=%.4f A(200)=%.4f A(1e4)=%.4f; <p^2>(5e3)=%.1f <p^2>(1e4)=%.1f change %.2f%%; "
                   "lattice sizes %s; runtime %.0f s, limit 3600 s",
                   long_samples, a20, a200, a10k, e5k, e10k, 100 * change, sizes.c_str(), q3.seconds));
        const FitResult xi = fit_gogolin(q3.at(10000));
        report(7, std::abs(xi.estimate - 35.0) <= 0.15 * 35.0,
               fmt("xi = %.2f +- %.2f over %g <= |p| <= %g (%zu points), target 35 +- 15%%", xi.estimate, xi.std_error,
                   xi.window.lo, xi.window.hi, xi.n_points));

        // 4: zero current over every run and recorded time.
        CurrentCheck current;
        current_check(q1, fig1.run.samples, current);
        current_check(c1, fig1.run.points, current);
        current_check(q2, fig2.run.samples, current);
        current_check(c2, fig2.run.points, current);
        current_check(q3, fig3.run.samples, current);
        report(4, current.worst_ratio < 1.0,
               fmt("worst |<p>| / bound = %.2f at %s", current.worst_ratio, current.where.c_str()));

        oracle_suite();

        // 9: byte-identical repeats.
        RunConfig small = preset_config("fig1");
        small.run.samples = 500;
        small.run.points = 20000;
        bool identical = true;
        std::size_t compared = 0;
        for (const std::string engine : {"quantum", "classical"}) {
            const Run a = execute(engine, small, work / ("repeat-a-" + engine), threads);
            const Run b = execute(engine, small, work / ("repeat-b-" + engine), threads);
            for (const std::string file : a.manifest.at("files")) {
                identical = identical && slurp(a.dir / file) == slurp(b.dir / file);
                ++compared;
            }
        }
        report(9, identical, fmt("%zu data files compared across two runs with seed %llu", compared,
                                  static_cast<unsigned long long>(small.params.seed)));
    } catch (const std::exception& e) {
        std::printf("FAIL acceptance runner aborted: %s\n", e.what());
        return 1;
    }

    std::size_t failed = 0;
    for (const auto& o : outcomes) failed += o.pass ? 0 : 1;
    std::printf("acceptance: %zu of %zu criteria passed\n", outcomes.size() - failed, outcomes.size());
    return failed == 0 ? 0 : 1;
}
