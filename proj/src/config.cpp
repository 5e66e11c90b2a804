#include "qkr/config.hpp"

#include "qkr/io.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

namespace qkr {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError("unknown key '" + key + "' in " + std::string(where));
    }
}

double number(const json& obj, const char* key, std::string_view where) {
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(std::string(where) + "." + key + " must be a number");
    return v.get<double>();
}

std::uint64_t count(const json& obj, const char* key, std::string_view where) {
    const auto& v = obj.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
        throw ConfigError(std::string(where) + "." + key + " must be a nonnegative integer");
    return v.get<std::uint64_t>();
}

RunSpec parse_run(const json& run) {
    reject_unknown(run, "run", {"n_kicks", "record", "samples", "points", "grid", "portrait"});
    RunSpec spec;
    if (!run.contains("n_kicks")) throw ConfigError("run.n_kicks is required");
    spec.n_kicks = count(run, "n_kicks", "run");
    if (run.contains("record")) {
        const auto& rec = run.at("record");
        if (!rec.is_array()) throw ConfigError("run.record must be a list of kick counts");
        for (const auto& r : rec) {
            if (!r.is_number_integer() || r.get<std::int64_t>() < 0)
                throw ConfigError("run.record entries must be nonnegative integers");
            spec.record.push_back(r.get<std::uint64_t>());
        }
    } else {
        spec.record = {spec.n_kicks};
    }
    if (run.contains("samples")) spec.samples = count(run, "samples", "run");
    if (run.contains("points")) spec.points = count(run, "points", "run");
    if (run.contains("grid")) {
        const auto& g = run.at("grid");
        reject_unknown(g, "run.grid", {"p_max", "spacing"});
        if (g.contains("p_max")) spec.grid.p_max = number(g, "p_max", "run.grid");
        if (g.contains("spacing")) spec.grid.spacing = number(g, "spacing", "run.grid");
    }
    if (run.contains("portrait")) {
        const auto& p = run.at("portrait");
        reject_unknown(p, "run.portrait", {"bins_x", "bins_p", "superpose"});
        if (p.contains("bins_x")) spec.portrait_bins_x = static_cast<long>(count(p, "bins_x", "run.portrait"));
        if (p.contains("bins_p")) spec.portrait_bins_p = static_cast<long>(count(p, "bins_p", "run.portrait"));
        if (p.contains("superpose")) spec.portrait_superpose = static_cast<unsigned>(count(p, "superpose", "run.portrait"));
    }
    return spec;
}

void check_run(const RunSpec& spec) {
    std::vector<std::uint64_t> r = spec.record;
    if (r.empty()) throw ConfigError("run.record must not be empty");
    if (!std::is_sorted(r.begin(), r.end()) || std::adjacent_find(r.begin(), r.end()) != r.end())
        throw ConfigError("run.record must be strictly increasing");
    if (r.back() > spec.n_kicks) throw ConfigError("run.record entries must not exceed run.n_kicks");
    if (spec.samples < 1) throw ConfigError("run.samples must be >= 1");
    if (spec.points < 1) throw ConfigError("run.points must be >= 1");
    if (!(spec.grid.spacing > 0.0)) throw ConfigError("run.grid.spacing must be > 0");
    if (!(spec.grid.p_max > 0.0)) throw ConfigError("run.grid.p_max must be > 0");
    if (spec.portrait_bins_x < 1 || spec.portrait_bins_p < 1) throw ConfigError("run.portrait bins must be >= 1");
    if (spec.portrait_superpose < 1) throw ConfigError("run.portrait.superpose must be >= 1");
}

}  // namespace

RunConfig parse_config(const json& doc) {
    try {
        reject_unknown(doc, "configuration", {"kick_strength", "hbar_eff", "units", "phases", "sigma", "seed", "run"});
        RunConfig cfg;
        SimParams& p = cfg.params;
        if (!doc.contains("kick_strength")) throw ConfigError("kick_strength is required");
        p.kick_strength = number(doc, "kick_strength", "configuration");

        const bool direct = doc.contains("hbar_eff");
        const bool from_units = doc.contains("units");
        if (direct == from_units) throw ConfigError("give exactly one of hbar_eff or units");
        if (direct) {
            p.hbar_eff = number(doc, "hbar_eff", "configuration");
        } else {
            const auto& u = doc.at("units");
            reject_unknown(u, "units", {"T1", "lambda_L", "M_atom"});
            for (const char* key : {"T1", "lambda_L", "M_atom"})
                if (!u.contains(key)) throw ConfigError(std::string("units.") + key + " is required");
            ExperimentUnits units{number(u, "T1", "units"), number(u, "lambda_L", "units"),
                                  number(u, "M_atom", "units")};
            p.hbar_eff = hbar_eff_from_units(units);
            cfg.units = units;
        }

        if (doc.contains("phases")) {
            const auto& ph = doc.at("phases");
            if (!ph.is_array()) throw ConfigError("phases must be a list of radians");
            p.phases.clear();
            for (const auto& a : ph) {
                if (!a.is_number()) throw ConfigError("phases entries must be numbers");
                p.phases.push_back(a.get<double>());
            }
        } else {
            p.phases = ratchet_phase_sequence();
        }
        p.sigma = doc.contains("sigma") ? number(doc, "sigma", "configuration") : default_sigma(p.hbar_eff);
        p.seed = doc.contains("seed") ? count(doc, "seed", "configuration") : 0;
        cfg.params = validate(std::move(p));

        if (!doc.contains("run")) throw ConfigError("run section is required");
        cfg.run = parse_run(doc.at("run"));
        check_run(cfg.run);
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed configuration: ") + e.what());
    }
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration file " + path.string());
    json doc;
    try {
        doc = json::parse(in, nullptr, true, true);
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + e.what());
    }
    return parse_config(doc);
}

json config_to_json(const RunConfig& c) {
    json doc;
    doc["kick_strength"] = c.params.kick_strength;
    if (c.units) {
        doc["units"] = {{"T1", c.units->pulse_period}, {"lambda_L", c.units->wavelength}, {"M_atom", c.units->atom_mass}};
    } else {
        doc["hbar_eff"] = c.params.hbar_eff;
    }
    doc["phases"] = c.params.phases;
    doc["sigma"] = c.params.sigma;
    doc["seed"] = c.params.seed;
    doc["run"] = {
        {"n_kicks", c.run.n_kicks},
        {"record", c.run.record},
        {"samples", c.run.samples},
        {"points", c.run.points},
        {"grid", {{"p_max", c.run.grid.p_max}, {"spacing", c.run.grid.spacing}}},
        {"portrait",
         {{"bins_x", c.run.portrait_bins_x}, {"bins_p", c.run.portrait_bins_p}, {"superpose", c.run.portrait_superpose}}},
    };
    return doc;
}

RunConfig preset_config(std::string_view name) {
    RunConfig c;
    if (name == "fig1") {
        c.params = make_params(3.1, 0.8, ratchet_phase_sequence(), std::nullopt, 1);
        c.run.n_kicks = 15;
        c.run.record = {15};
        c.run.samples = 10000;
        c.run.points = 200000;
        c.run.grid = {80.0, 0.8};
    } else if (name == "fig2") {
        c.params = make_params(3.1, 0.8, ratchet_phase_sequence(), std::nullopt, 2);
        c.run.n_kicks = 50;
        c.run.record.resize(50);
        std::iota(c.run.record.begin(), c.run.record.end(), std::uint64_t{1});
        c.run.samples = 10000;
        c.run.points = 200000;
        c.run.grid = {160.0, 0.8};
    } else if (name == "fig3") {
        c.params = make_params(3.1, 1.3, ratchet_phase_sequence(), std::nullopt, 3);
        c.run.n_kicks = 10000;
        c.run.record = {20, 50, 200, 5000, 10000};
        c.run.samples = 50000;
        c.run.points = 200000;
        c.run.grid = {2600.0, 1.3};
    } else {
        throw ConfigError("unknown preset '" + std::string(name) + "' (expected fig1, fig2 or fig3)");
    }
    check_run(c.run);
    return c;
}

std::vector<std::string> preset_names() { return {"fig1", "fig2", "fig3"}; }

std::string config_digest(const RunConfig& config, std::string_view engine) {
    return fnv1a_hex(config_to_json(config).dump() + "|" + std::string(engine));
}

}  // namespace qkr
