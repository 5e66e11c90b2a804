#pragma once

#include "qkr/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qkr {

/// Symmetric output grid: points k * spacing with |k * spacing| <= p_max.
struct GridSpec {
    double p_max = 60.0;
    double spacing = 1.0;
};

/// Run-level settings shared by both engines.
struct RunSpec {
    std::uint64_t n_kicks = 0;
    std::vector<std::uint64_t> record;  // sorted; defaults to {n_kicks}
    std::size_t samples = 1;            // quantum Monte Carlo plane waves
    std::size_t points = 1;             // classical ensemble size
    GridSpec grid;
    long portrait_bins_x = 128;
    long portrait_bins_p = 128;
    unsigned portrait_superpose = 3;  // consecutive kicks stacked in the portrait
};

struct RunConfig {
    SimParams params;
    std::optional<ExperimentUnits> units;  // set when hbar_eff came from a units block
    RunSpec run;
};

/// Parses and validates a configuration document. Unknown keys anywhere are a
/// ConfigError, as is giving both or neither of `hbar_eff` and `units`.
///
///   {
///     "kick_strength": 3.1,
///     "hbar_eff": 0.8,                 // or "units": {"T1": s, "lambda_L": m, "M_atom": kg}
///     "phases": [0, 2.0943951023931953, 0],   // optional, defaults to the ratchet sequence
///     "sigma": 1.32,                   // optional, defaults to 1.65 * hbar_eff
///     "seed": 1,
///     "run": {"n_kicks": 15, "record": [15], "samples": 10000, "points": 200000,
///             "grid": {"p_max": 80, "spacing": 0.8},
///             "portrait": {"bins_x": 128, "bins_p": 128, "superpose": 3}}
///   }
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of a validated configuration; parse_config(config_to_json(c)) == c.
nlohmann::json config_to_json(const RunConfig& config);

/// Built-in configurations for the three published figures: "fig1", "fig2", "fig3".
RunConfig preset_config(std::string_view name);
std::vector<std::string> preset_names();

/// Short hex digest of the canonical configuration and engine name.
std::string config_digest(const RunConfig& config, std::string_view engine);

}  // namespace qkr
