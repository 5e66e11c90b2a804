// Command-line front end: classical / quantum runs, analysis of their CSV output,
// and Gogolin tabulation.

#include "qkr/cli.hpp"
#include "qkr/config.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

void add_run_flags(CLI::App* cmd, qkr::cli::RunOptions& opts, std::string& record_text) {
    auto* cfg = cmd->add_option("--config", opts.config, "JSON configuration file");
    auto* preset = cmd->add_option("--preset", opts.preset, "built-in configuration: fig1, fig2, fig3");
    cfg->excludes(preset);
    cmd->add_option("--out", opts.out, "output directory")->required();
    cmd->add_option("--threads", opts.threads, "worker threads (0 = hardware concurrency)")->default_val(1);
    cmd->add_option("--seed-override", opts.seed_override, "replace the configured seed");
    cmd->add_option("--record", record_text, "kick counts to record, e.g. 1-50 or 20,200,10000");
    cmd->add_flag("--reproducible-reduction", opts.reproducible_reduction,
                  "sum samples in fixed blocks so results do not depend on --threads");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parity-broken quantum kicked rotor: simulation and analysis"};
    app.require_subcommand(1);

    qkr::cli::RunOptions classical_opts, quantum_opts;
    std::string classical_record, quantum_record;
    auto* classical = app.add_subcommand("classical", "evolve a classical ensemble under the phase-shifted standard map");
    add_run_flags(classical, classical_opts, classical_record);
    auto* quantum = app.add_subcommand("quantum", "Monte Carlo average of split-step Floquet propagation");
    add_run_flags(quantum, quantum_opts, quantum_record);

    qkr::cli::AnalyzeOptions analyze_opts;
    std::vector<double> window;
    auto* analyze = app.add_subcommand("analyze", "fit or summarize existing distribution / series CSV files");
    analyze->add_option("--kind", analyze_opts.kind, "power-law | gogolin | peak | asymmetry | moments | front")
        ->required();
    analyze->add_option("--input", analyze_opts.inputs, "input CSV (repeat for front)")->required();
    analyze->add_option("--window", window, "power-law fit window n_min,n_max")->delimiter(',')->expected(2);
    analyze->add_option("--p-window", analyze_opts.p_window, "gogolin fit: largest |p|")->default_val(250.0);
    analyze->add_option("--p-exclude", analyze_opts.p_exclude, "gogolin fit: skip |p| below this")->default_val(5.0);
    analyze->add_option("--halfwidth", analyze_opts.halfwidth, "peak population half-width");
    analyze->add_option("--kicks", analyze_opts.kicks, "kick count for peak tracking (default: from the CSV)");
    analyze->add_option("--quantile", analyze_opts.quantile, "front quantile of the p > 0 mass")->default_val(0.99);
    analyze->add_option("--out", analyze_opts.out, "report file (default: stdout)");

    qkr::cli::GogolinOptions gogolin_opts;
    auto* gogolin = app.add_subcommand("gogolin", "tabulate the Gogolin localized distribution");
    gogolin->add_option("--xi", gogolin_opts.xi, "localization length")->required();
    gogolin->add_option("--p-min", gogolin_opts.p_min)->default_val(-300.0);
    gogolin->add_option("--p-max", gogolin_opts.p_max)->default_val(300.0);
    gogolin->add_option("--spacing", gogolin_opts.spacing)->default_val(1.0);
    gogolin->add_option("--out", gogolin_opts.out, "output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : qkr::cli::kConfigError;
    }

    auto with_record = [](qkr::cli::RunOptions& opts, const std::string& text) -> bool {
        if (text.empty()) return true;
        try {
            opts.record = qkr::cli::parse_record_list(text);
        } catch (const qkr::ConfigError& e) {
            std::cerr << "configuration error: " << e.what() << '\n';
            return false;
        }
        return true;
    };
    auto require_source = [](const qkr::cli::RunOptions& opts) {
        if (opts.config.empty() && opts.preset.empty()) {
            std::cerr << "configuration error: give --config or --preset\n";
            return false;
        }
        return true;
    };

    if (classical->parsed()) {
        if (!require_source(classical_opts) || !with_record(classical_opts, classical_record))
            return qkr::cli::kConfigError;
        return qkr::cli::cmd_classical(classical_opts, std::cerr);
    }
    if (quantum->parsed()) {
        if (!require_source(quantum_opts) || !with_record(quantum_opts, quantum_record))
            return qkr::cli::kConfigError;
        return qkr::cli::cmd_quantum(quantum_opts, std::cerr);
    }
    if (analyze->parsed()) {
        if (window.size() == 2) analyze_opts.window = {window[0], window[1]};
        return qkr::cli::cmd_analyze(analyze_opts, std::cerr, std::cout);
    }
    return qkr::cli::cmd_gogolin(gogolin_opts, std::cerr);
}
