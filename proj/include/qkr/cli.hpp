#pragma once

#include "qkr/analysis.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace qkr::cli {

enum ExitCode : int {
    kSuccess = 0,
    kConfigError = 2,
    kNumericalError = 3,
    kIoError = 4,
};

struct RunOptions {
    std::filesystem::path config;  // JSON file; ignored when preset is set
    std::string preset;            // fig1 | fig2 | fig3
    std::filesystem::path out;
    std::size_t threads = 1;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::vector<std::uint64_t>> record;
    bool reproducible_reduction = false;
};

/// Classical ensemble run: distribution CSV per recorded kick, series CSVs,
/// folded portrait CSV, then manifest.json.
int cmd_classical(const RunOptions& options, std::ostream& log);

/// Quantum Monte Carlo run: distribution CSV per recorded kick, series CSVs, then manifest.json.
int cmd_quantum(const RunOptions& options, std::ostream& log);

struct AnalyzeOptions {
    std::string kind;  // power-law | gogolin | peak | asymmetry | moments | front
    std::vector<std::filesystem::path> inputs;
    FitWindow window{5.0, 50.0};
    double p_window = 250.0;
    double p_exclude = 5.0;
    double halfwidth = std::numbers::pi / 3.0;
    std::optional<std::uint64_t> kicks;
    double quantile = 0.99;
    std::filesystem::path out;  // report path; stdout when empty
};

/// Runs one analysis over existing CSV files and writes a JSON report.
int cmd_analyze(const AnalyzeOptions& options, std::ostream& log, std::ostream& report_sink);

struct GogolinOptions {
    double xi = 35.0;
    double p_min = -300.0;
    double p_max = 300.0;
    double spacing = 1.0;
    std::filesystem::path out;
};

/// Tabulates the Gogolin density as a `p,density` CSV.
int cmd_gogolin(const GogolinOptions& options, std::ostream& log);

/// Parses "1,2,5" or ranges "1-50" (mixable: "1-10,20,50").
std::vector<std::uint64_t> parse_record_list(const std::string& text);

}  // namespace qkr::cli
