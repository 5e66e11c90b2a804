#include "qkr/cli.hpp"

#include "qkr/classical.hpp"
#include "qkr/config.hpp"
#include "qkr/io.hpp"
#include "qkr/parallel.hpp"
#include "qkr/quantum.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

namespace qkr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename Body>
int guarded(std::ostream& log, Body&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        log << "configuration error: " << e.what() << '\n';
        return kConfigError;
    } catch (const NumericalError& e) {
        log << "numerical failure: " << e.what() << '\n';
        return kNumericalError;
    } catch (const IoError& e) {
        log << "i/o failure: " << e.what() << '\n';
        return kIoError;
    } catch (const fs::filesystem_error& e) {
        log << "i/o failure: " << e.what() << '\n';
        return kIoError;
    } catch (const std::exception& e) {
        log << "numerical failure: " << e.what() << '\n';
        return kNumericalError;
    }
}

RunConfig resolve(const RunOptions& options) {
    RunConfig cfg = options.preset.empty() ? load_config(options.config) : preset_config(options.preset);
    if (options.seed_override) cfg.params.seed = *options.seed_override;
    if (options.record) {
        auto r = *options.record;
        if (r.empty()) throw ConfigError("--record list is empty");
        if (!std::is_sorted(r.begin(), r.end()) || std::adjacent_find(r.begin(), r.end()) != r.end())
            throw ConfigError("--record must be strictly increasing");
        cfg.run.record = r;
        cfg.run.n_kicks = std::max(cfg.run.n_kicks, r.back());
    }
    if (options.out.empty()) throw ConfigError("--out directory is required");
    return cfg;
}

void prepare_output(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    // A manifest from an earlier run would vouch for files this run is about to replace.
    fs::remove(dir / "manifest.json", ec);
}

json grid_json(const MomentumGrid& g) {
    return {{"origin", g.origin}, {"spacing", g.spacing}, {"size", g.size}};
}

struct SeriesSet {
    TimeSeries energy, right_energy, mean, asymmetry;
    json zero_current = json::array();

    void add(const MomentumDistribution& d, double effective_samples) {
        const Moments m = moments(d);
        energy.push(d.n_kicks, m.energy);
        right_energy.push(d.n_kicks, qkr::right_energy(d));
        mean.push(d.n_kicks, m.mean);
        asymmetry.push(d.n_kicks, qkr::asymmetry(d));
        const double spread = std::sqrt(std::max(0.0, m.energy - m.mean * m.mean));
        const double tolerance = 4.0 * spread / std::sqrt(effective_samples);
        zero_current.push_back({{"n", d.n_kicks}, {"mean", m.mean}, {"tolerance", tolerance},
                                {"within", std::abs(m.mean) < tolerance}});
    }

    void write(const fs::path& dir, std::string_view prefix, std::string_view digest, json& files) const {
        const std::pair<const char*, const TimeSeries*> all[] = {
            {"energy", &energy}, {"right_energy", &right_energy}, {"mean", &mean}, {"asymmetry", &asymmetry}};
        for (const auto& [name, series] : all) {
            const std::string file = std::string(prefix) + "_series_" + name + ".csv";
            write_series_csv(dir / file, *series, digest, name);
            files.push_back(file);
        }
    }
};

json base_manifest(const RunConfig& cfg, const RunOptions& options, std::string_view engine,
                   std::string_view digest) {
    return {
        {"digest", digest},
        {"engine", engine},
        {"config", config_to_json(cfg)},
        {"seed", cfg.params.seed},
        {"threads", resolve_threads(options.threads)},
        {"reproducible_reduction", options.reproducible_reduction},
        {"n_kicks", cfg.run.n_kicks},
        {"record", cfg.run.record},
        {"kick_indexing", "first delivered kick has index 0 and phase phases[0]"},
    };
}

}  // namespace

int cmd_classical(const RunOptions& options, std::ostream& log) {
    return guarded(log, [&] {
        const auto start = std::chrono::steady_clock::now();
        const RunConfig cfg = resolve(options);
        const SimParams& params = cfg.params;
        const std::string digest = config_digest(cfg, "classical");
        const MomentumGrid grid = MomentumGrid::symmetric(cfg.run.grid.p_max, cfg.run.grid.spacing);
        prepare_output(options.out);

        json files = json::array();
        SeriesSet series;
        ClassicalEnsemble ensemble = sample_initial_ensemble(cfg.run.points, params);
        for (std::uint64_t r : cfg.run.record) {
            ensemble = evolve(std::move(ensemble), params, r - ensemble.n_kicks_applied, options.threads);
            const MomentumDistribution d = momentum_histogram(ensemble, grid);
            const std::string file = "classical_distribution_n" + std::to_string(r) + ".csv";
            write_distribution_csv(options.out / file, d, digest);
            files.push_back(file);
            series.add(d, static_cast<double>(cfg.run.points));
        }
        series.write(options.out, "classical", digest, files);

        ensemble = evolve(std::move(ensemble), params, cfg.run.n_kicks - ensemble.n_kicks_applied, options.threads);
        PhasePortrait portrait = folded_phase_portrait(ensemble, cfg.run.portrait_bins_x, cfg.run.portrait_bins_p);
        for (unsigned i = 1; i < cfg.run.portrait_superpose; ++i) {
            ensemble = evolve(std::move(ensemble), params, 1, options.threads);
            portrait += folded_phase_portrait(ensemble, cfg.run.portrait_bins_x, cfg.run.portrait_bins_p);
        }
        write_portrait_csv(options.out / "classical_portrait.csv", portrait, digest);
        files.push_back("classical_portrait.csv");

        json manifest = base_manifest(cfg, options, "classical", digest);
        manifest["points"] = cfg.run.points;
        manifest["grid"] = grid_json(grid);
        manifest["portrait"] = {{"bins_x", cfg.run.portrait_bins_x},
                                {"bins_p", cfg.run.portrait_bins_p},
                                {"kicks", json::array()}};
        for (unsigned i = 0; i < cfg.run.portrait_superpose; ++i)
            manifest["portrait"]["kicks"].push_back(cfg.run.n_kicks + i);
        manifest["zero_current"] = series.zero_current;
        manifest["files"] = files;
        manifest["wall_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_text_atomic(options.out / "manifest.json", manifest.dump(2) + "\n");
        log << "classical run " << digest << ": " << files.size() << " files in " << options.out.string() << '\n';
        return int(kSuccess);
    });
}

int cmd_quantum(const RunOptions& options, std::ostream& log) {
    return guarded(log, [&] {
        const auto start = std::chrono::steady_clock::now();
        const RunConfig cfg = resolve(options);
        const std::string digest = config_digest(cfg, "quantum");
        const MomentumGrid grid = MomentumGrid::symmetric(cfg.run.grid.p_max, cfg.run.grid.spacing);
        prepare_output(options.out);

        MonteCarloOptions mc;
        mc.threads = options.threads;
        mc.reproducible_reduction = options.reproducible_reduction;
        const MonteCarloResult result = monte_carlo_distribution(cfg.params, cfg.run.samples, cfg.run.n_kicks,
                                                                 cfg.run.record, grid, mc);

        json files = json::array();
        SeriesSet series;
        for (const auto& d : result.distributions) {
            const std::string file = "quantum_distribution_n" + std::to_string(d.n_kicks) + ".csv";
            write_distribution_csv(options.out / file, d, digest);
            files.push_back(file);
            series.add(d, static_cast<double>(cfg.run.samples));
        }
        series.write(options.out, "quantum", digest, files);

        json manifest = base_manifest(cfg, options, "quantum", digest);
        manifest["samples"] = cfg.run.samples;
        manifest["grid"] = grid_json(grid);
        json sizes = json::object();
        for (const auto& [size, count] : result.final_sizes) sizes[std::to_string(size)] = count;
        manifest["lattice"] = {{"initial_size", result.initial_size}, {"final_sizes", sizes},
                               {"max_norm_drift", result.max_norm_drift}};
        manifest["lattice_moments"] = {{"mean", result.mean}, {"energy", result.energy}};
        manifest["zero_current"] = series.zero_current;
        manifest["files"] = files;
        manifest["wall_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_text_atomic(options.out / "manifest.json", manifest.dump(2) + "\n");
        log << "quantum run " << digest << ": " << files.size() << " files in " << options.out.string() << '\n';
        return int(kSuccess);
    });
}

namespace {

json fit_json(const FitResult& f) {
    return {{"estimate", f.estimate},
            {"std_error", f.std_error},
            {"window", {f.window.lo, f.window.hi}},
            {"residual_norm", f.residual_norm},
            {"n_points", f.n_points}};
}

}  // namespace

int cmd_analyze(const AnalyzeOptions& options, std::ostream& log, std::ostream& report_sink) {
    return guarded(log, [&] {
        if (options.inputs.empty()) throw ConfigError("analyze needs at least one --input");
        json report = {{"kind", options.kind}, {"inputs", json::array()}};
        for (const auto& in : options.inputs)
            report["inputs"].push_back({{"path", in.string()}, {"digest", file_digest(in)}});

        auto single = [&] {
            if (options.inputs.size() != 1) throw ConfigError(options.kind + " takes exactly one --input");
            return read_distribution_csv(options.inputs.front());
        };

        if (options.kind == "power-law") {
            if (options.inputs.size() != 1) throw ConfigError("power-law takes exactly one --input");
            report.update(fit_json(fit_power_law(read_series_csv(options.inputs.front()), options.window)));
        } else if (options.kind == "gogolin") {
            GogolinFitOptions g;
            g.p_window = options.p_window;
            g.p_exclude = options.p_exclude;
            report.update(fit_json(fit_gogolin(single(), g)));
        } else if (options.kind == "peak") {
            const auto d = single();
            const std::uint64_t n = options.kicks.value_or(d.n_kicks);
            const Peak peak = track_peak(d, n, options.halfwidth);
            report.update({{"n_kicks", n}, {"location", peak.location}, {"population", peak.population},
                           {"halfwidth", peak.halfwidth}});
        } else if (options.kind == "asymmetry") {
            report["value"] = asymmetry(single());
        } else if (options.kind == "moments") {
            const auto d = single();
            const Moments m = moments(d);
            report.update({{"mean", m.mean}, {"energy", m.energy}, {"right_energy", right_energy(d)},
                           {"left_energy", left_energy(d)}});
        } else if (options.kind == "front") {
            std::vector<MomentumDistribution> dists;
            for (const auto& in : options.inputs) dists.push_back(read_distribution_csv(in));
            report.update(fit_json(front_exponent_check(dists, options.quantile)));
            report["quantile"] = options.quantile;
        } else {
            throw ConfigError("unknown analysis kind '" + options.kind +
                              "' (expected power-law, gogolin, peak, asymmetry, moments or front)");
        }

        const std::string text = report.dump(2) + "\n";
        if (options.out.empty()) {
            report_sink << text;
        } else {
            write_text_atomic(options.out, text);
            log << "wrote " << options.out.string() << '\n';
        }
        return int(kSuccess);
    });
}

int cmd_gogolin(const GogolinOptions& options, std::ostream& log) {
    return guarded(log, [&] {
        if (!(options.xi > 0.0)) throw ConfigError("--xi must be > 0");
        if (!(options.spacing > 0.0) || !(options.p_max > options.p_min))
            throw ConfigError("gogolin grid needs p_min < p_max and spacing > 0");
        if (options.out.empty()) throw ConfigError("--out file is required");
        const auto n = static_cast<Eigen::Index>(std::llround((options.p_max - options.p_min) / options.spacing)) + 1;
        MomentumDistribution d;
        d.grid = MomentumGrid{options.p_min, options.spacing, n};
        d.density.resize(n);
        for (Eigen::Index k = 0; k < n; ++k) d.density(k) = gogolin_density(d.grid.at(k), options.xi);
        write_distribution_csv(options.out, d, fnv1a_hex("gogolin|" + format_double(options.xi)));
        log << "wrote " << options.out.string() << " (trapezoid integral " << d.integral() << ")\n";
        return int(kSuccess);
    });
}

std::vector<std::uint64_t> parse_record_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string item;
    auto to_u64 = [&](const std::string& s) {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(s, &used);
        } catch (...) {
            used = 0;
        }
        if (used != s.size() || s.empty() || s.front() == '-')
            throw ConfigError("bad kick count '" + s + "' in --record");
        return static_cast<std::uint64_t>(v);
    };
    while (std::getline(ss, item, ',')) {
        const auto dash = item.find('-');
        if (dash == std::string::npos) {
            out.push_back(to_u64(item));
        } else {
            const auto a = to_u64(item.substr(0, dash));
            const auto b = to_u64(item.substr(dash + 1));
            if (b < a) throw ConfigError("descending range '" + item + "' in --record");
            for (auto v = a; v <= b; ++v) out.push_back(v);
        }
    }
    return out;
}

}  // namespace qkr::cli
