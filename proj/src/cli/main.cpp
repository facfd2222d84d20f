#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "tocsim/cli.hpp"
#include "tocsim/error.hpp"

namespace tocsim::cli {

namespace {

void configure_logging() {
    spdlog::set_level(spdlog::level::warn);
    if (const char* v = std::getenv("SIM_LOG")) {
        const auto level = spdlog::level::from_str(v);
        if (level != spdlog::level::off || std::string_view(v) == "off") spdlog::set_level(level);
    }
}

// Shared experiment flags; string-typed so bad values map to exit 2 with our
// own diagnostics rather than CLI11's.
struct RawFlags {
    std::string config;
    std::uint64_t seed = 1;
    std::string out = "out";
    std::string scheme;
    std::string variant;
    int spots = 0;
    int runs = 0;
    std::string mode;
    unsigned threads = 0;
};

void add_flags(CLI::App* cmd, RawFlags& f) {
    cmd->add_option("--config", f.config, "Scenario file (key = value lines)");
    cmd->add_option("--seed", f.seed, "Master seed")->capture_default_str();
    cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
    cmd->add_option("--scheme", f.scheme, "denm or mcm");
    cmd->add_option("--variant", f.variant,
                    "denm_zero, denm_fifty, denm_unlimited, min_dmrm_rsu, min_dmrm_cav, distr_toc_rsu, distr_toc_cav");
    cmd->add_option("--spots", f.spots, "Safe spots per layout (1 or 2)");
    cmd->add_option("--runs", f.runs, "Monte-Carlo runs");
    cmd->add_option("--mode", f.mode, "enumerate or mc");
    cmd->add_option("--threads", f.threads, "Worker threads (0 = all cores)")->capture_default_str();
}

ExperimentSpec to_spec(const RawFlags& f) {
    ExperimentSpec spec;
    if (!f.config.empty()) spec.config = f.config;
    spec.seed = f.seed;
    spec.out_dir = f.out;
    spec.threads = f.threads;
    if (!f.scheme.empty()) {
        if (f.scheme == "denm") spec.scheme = Scheme::denm;
        else if (f.scheme == "mcm") spec.scheme = Scheme::mcm;
        else throw Error(ErrorKind::invalid_config, "scheme: must be denm or mcm");
    }
    if (!f.variant.empty()) {
        spec.variant = parse_variant(f.variant);
        if (!spec.variant) throw Error(ErrorKind::invalid_config, "variant: unknown variant '" + f.variant + "'");
    }
    if (f.spots != 0) spec.spots = f.spots;
    if (f.runs != 0) spec.runs = f.runs;
    if (!f.mode.empty()) {
        if (f.mode == "enumerate") spec.mode = BatchMode::Kind::enumerate;
        else if (f.mode == "mc" || f.mode == "monte_carlo") spec.mode = BatchMode::Kind::monte_carlo;
        else throw Error(ErrorKind::invalid_config, "mode: must be enumerate or mc");
    }
    return spec;
}

}  // namespace

int main(int argc, char** argv) {
    configure_logging();
    CLI::App app{"Transition-of-control / minimum-risk-maneuver simulator"};
    app.require_subcommand(1);

    RawFlags run_flags;
    auto* run = app.add_subcommand("run", "Run a batch and write runs.csv, traces.jsonl and summary.csv");
    add_flags(run, run_flags);

    ReproduceOptions repro;
    std::string target_name;
    std::string repro_out = "out";
    auto* reproduce = app.add_subcommand("reproduce", "Run a reproduction battery (table2, table3, fig14, fig15)");
    reproduce->add_option("target", target_name, "table2, table3, fig14 or fig15")->required();
    reproduce->add_option("--out", repro_out, "Output directory")->capture_default_str();
    reproduce->add_option("--seed", repro.seed, "Master seed")->capture_default_str();
    reproduce->add_option("--range", repro.fig14_range, "fig14 max_toc_range (700 or 900)")->capture_default_str();
    reproduce->add_option("--threads", repro.threads, "Worker threads (0 = all cores)")->capture_default_str();

    RawFlags pdf_flags;
    auto* validate = app.add_subcommand("validate-pdf", "Compare sampled TOR positions with the closed-form pdf");
    add_flags(validate, pdf_flags);

    auto* defaults = app.add_subcommand("default-config", "Print a complete scenario file with the default values");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (run->parsed()) return cmd_run(to_spec(run_flags), std::cout, std::cerr);
        if (validate->parsed()) return cmd_validate_pdf(to_spec(pdf_flags), std::cout, std::cerr);
        if (defaults->parsed()) {
            std::cout << format_scenario({});
            return exit_ok;
        }
        const auto target = parse_target(target_name);
        if (!target) {
            std::cerr << "config error: target: unknown reproduction target '" << target_name << "'\n";
            return exit_config;
        }
        repro.out_dir = repro_out;
        return cmd_reproduce(*target, repro, std::cout, std::cerr);
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    }
}

}  // namespace tocsim::cli
