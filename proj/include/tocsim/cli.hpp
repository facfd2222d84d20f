#pragma once

// Experiment runner behind the `tocsim` executable: scenario files, batch
// runs with CSV/JSONL output, the reproduction batteries and pdf validation.
//
// Exit codes: 0 ok, 1 reproduction mismatch, 2 configuration error,
// 3 runtime error.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tocsim/core_model.hpp"
#include "tocsim/scenario.hpp"
#include "tocsim/sim_engine.hpp"

namespace tocsim::cli {

namespace fs = std::filesystem;

enum ExitCode : int { exit_ok = 0, exit_mismatch = 1, exit_config = 2, exit_runtime = 3 };

struct ScenarioFile {
    ScenarioConfig cfg;
    CalibrationProfile profile;

    friend bool operator==(const ScenarioFile&, const ScenarioFile&) = default;
};

/// Flat `key = value` lines, '#' starts a comment. Keys are the
/// ScenarioConfig field names plus the calibration keys (v_drive_kmh,
/// v_mrm_kmh, t_tor, d_2speedmrm, d_2stop, d_lc, theta_park). Missing keys
/// keep their defaults. Throws Error(invalid_config) as "source:line: ...".
ScenarioFile parse_scenario(std::string_view text, std::string_view source = "<input>");
ScenarioFile load_scenario(const fs::path& path);

/// Complete scenario file listing every key; parse_scenario reads it back
/// to the same values.
std::string format_scenario(const ScenarioFile& scenario);

struct ExperimentSpec {
    std::optional<fs::path> config;
    std::optional<Scheme> scheme;
    std::optional<Variant> variant;
    std::optional<int> spots;
    std::uint64_t seed = 1;
    std::optional<BatchMode::Kind> mode;
    std::optional<int> runs;
    fs::path out_dir = "out";
    unsigned threads = 0;
};

/// Scenario file plus command-line overrides, validated.
ScenarioFile resolve(const ExperimentSpec& spec);

/// Batch mode for an experiment: explicit --mode, else monte_carlo when
/// --runs is given or the placement is grid_random, else enumerate.
BatchMode batch_mode(const ExperimentSpec& spec, const ScenarioConfig& cfg);

/// Writes runs.csv, traces.jsonl, summary.csv, toc_histogram.csv and
/// toc_pdf.csv into the output directory.
int cmd_run(const ExperimentSpec& spec, std::ostream& out, std::ostream& err);

enum class ReproduceTarget { table2, table3, fig14, fig15 };

std::optional<ReproduceTarget> parse_target(std::string_view name) noexcept;
std::string_view to_string(ReproduceTarget target) noexcept;

/// Battery sizes are pinned here; the defaults are the documented ones.
struct ReproduceOptions {
    fs::path out_dir = "out";
    std::uint64_t seed = 1;
    double fig14_range = 700.0;
    int table2_replicates = 100;
    int fig14_replicates = 1000;
    int fig15_mcm_runs = 100000;
    int fig15_denm_runs = 10000;
    unsigned threads = 0;
};

struct Cell {
    std::string target;
    std::string cell;
    std::string reference;
    std::string computed;
    std::string tolerance;
    /// pass, fail, expected-deviation or info.
    std::string status;
    std::string note;
};

/// Runs one battery, writes its plot data next to the side-by-side table and
/// returns the table's cells.
std::vector<Cell> reproduce(ReproduceTarget target, const ReproduceOptions& opts);

void write_cells_csv(std::ostream& os, const std::vector<Cell>& cells);

/// Exit 0 iff no cell has status fail.
int cmd_reproduce(ReproduceTarget target, const ReproduceOptions& opts, std::ostream& out, std::ostream& err);

struct PdfValidation {
    double l1 = 0.0;
    std::size_t samples = 0;
    bool pass = false;
};

inline constexpr double pdf_l1_threshold = 0.02;

/// Monte-Carlo sample of toc_x for the variant compared with its
/// closed-form pdf.
PdfValidation validate_pdf(const ScenarioFile& scenario, Variant variant, int runs, std::uint64_t seed,
                           unsigned threads = 0);

int cmd_validate_pdf(const ExperimentSpec& spec, std::ostream& out, std::ostream& err);

/// Writes through a temporary file in the same directory and renames it.
void write_atomic(const fs::path& path, std::string_view content);

/// Entry point of the executable.
int main(int argc, char** argv);

}  // namespace tocsim::cli
