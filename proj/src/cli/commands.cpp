#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <system_error>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tocsim/analytics.hpp"
#include "tocsim/cli.hpp"
#include "tocsim/error.hpp"

namespace tocsim::cli {

void write_atomic(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::system_error(errno, std::generic_category(), "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw std::system_error(errno, std::generic_category(), "write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

ScenarioFile resolve(const ExperimentSpec& spec) {
    ScenarioFile sf = spec.config ? load_scenario(*spec.config) : ScenarioFile{};
    if (spec.variant) {
        if (spec.scheme && *spec.scheme != (is_denm(*spec.variant) ? Scheme::denm : Scheme::mcm)) {
            throw Error(ErrorKind::invalid_config,
                        fmt::format("variant: {} does not belong to scheme {}", to_string(*spec.variant),
                                    to_string(*spec.scheme)));
        }
        apply_variant(sf.cfg, *spec.variant);
    } else if (spec.scheme) {
        sf.cfg.scheme = *spec.scheme;
    }
    if (spec.spots) {
        sf.cfg.spot_count = *spec.spots;
        if (sf.cfg.placement.kind == PlacementKind::explicit_windows &&
            static_cast<int>(sf.cfg.placement.windows.size()) != *spec.spots) {
            sf.cfg.placement = {};
        }
    }
    sf.cfg.validate();
    sf.profile.validate(sf.cfg.spot_length());
    return sf;
}

BatchMode batch_mode(const ExperimentSpec& spec, const ScenarioConfig& cfg) {
    const auto kind = spec.mode ? *spec.mode
                      : (spec.runs || cfg.placement.kind == PlacementKind::grid_random)
                          ? BatchMode::Kind::monte_carlo
                          : BatchMode::Kind::enumerate;
    if (kind == BatchMode::Kind::enumerate) return BatchMode::enumerate();
    const int runs = spec.runs.value_or(1000);
    if (runs < 1) throw Error(ErrorKind::invalid_config, "runs: must be at least 1");
    return BatchMode::monte_carlo(runs);
}

namespace {

template <typename Fn>
std::string render(Fn&& fn) {
    std::ostringstream os;
    fn(os);
    return os.str();
}

}  // namespace

int cmd_run(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
    ScenarioFile sf;
    BatchMode mode;
    try {
        sf = resolve(spec);
        mode = batch_mode(spec, sf.cfg);
    } catch (const Error& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    }

    try {
        BatchOptions opts;
        opts.run.profile = sf.profile;
        opts.run.trace = trace_level_from_env();
        opts.threads = spec.threads;
        const auto results = batch(sf.cfg, mode, spec.seed, opts);
        const auto kpi = aggregate(results, sf.cfg, sf.profile);

        const auto& dir = spec.out_dir;
        write_atomic(dir / "runs.csv", render([&](std::ostream& os) { write_runs_csv(os, sf.cfg, results); }));
        write_atomic(dir / "traces.jsonl", render([&](std::ostream& os) { write_trace_jsonl(os, results); }));
        write_atomic(dir / "summary.csv", render([&](std::ostream& os) { write_summary_csv(os, kpi); }));
        write_atomic(dir / "toc_histogram.csv", render([&](std::ostream& os) { write_histogram_csv(os, kpi.toc); }));
        try {
            const auto pdf = pdf_for(variant_of(sf.cfg), sf.cfg, sf.profile);
            write_atomic(dir / "toc_pdf.csv", render([&](std::ostream& os) { write_pdf_csv(os, pdf); }));
        } catch (const Error& e) {
            spdlog::warn("no closed-form pdf: {}", e.what());
        }

        out << fmt::format("{} runs of {} ({} spot{}): success {:.2f}%, written to {}\n", results.size(),
                           to_string(variant_of(sf.cfg)), sf.cfg.spot_count, sf.cfg.spot_count == 1 ? "" : "s",
                           100.0 * kpi.success_rate, dir.string());
        return exit_ok;
    } catch (const Error& e) {
        err << "runtime error: " << e.what() << '\n';
        return e.kind() == ErrorKind::invalid_config || e.kind() == ErrorKind::invalid_layout ? exit_config
                                                                                             : exit_runtime;
    } catch (const std::exception& e) {
        err << "runtime error: " << e.what() << '\n';
        return exit_runtime;
    }
}

PdfValidation validate_pdf(const ScenarioFile& scenario, Variant variant, int runs, std::uint64_t seed,
                           unsigned threads) {
    ScenarioConfig cfg = scenario.cfg;
    apply_variant(cfg, variant);
    cfg.placement = {};
    BatchOptions opts;
    opts.run.profile = scenario.profile;
    opts.run.trace = TraceLevel::none;
    opts.threads = threads;
    const auto results = batch(cfg, BatchMode::monte_carlo(runs), seed, opts);

    auto hist = toc_histogram(cfg, scenario.profile);
    for (const auto& r : results) {
        if (r.toc_x) hist.add(*r.toc_x);
    }
    PdfValidation v;
    v.samples = hist.total();
    v.l1 = l1_distance(hist, pdf_for(variant, cfg, scenario.profile));
    v.pass = v.l1 < pdf_l1_threshold;
    return v;
}

int cmd_validate_pdf(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
    ScenarioFile sf;
    Variant variant = Variant::denm_zero;
    int runs = 0;
    try {
        sf = resolve(spec);
        variant = variant_of(sf.cfg);
        runs = spec.runs.value_or(100000);
        if (runs < 1) throw Error(ErrorKind::invalid_config, "runs: must be at least 1");
    } catch (const Error& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    }
    if (runs < 10000) {
        err << fmt::format("warning: {} runs is below 10^4; the sampled histogram is likely too noisy for the "
                           "{} threshold\n",
                           runs, pdf_l1_threshold);
    }
    try {
        const auto v = validate_pdf(sf, variant, runs, spec.seed, spec.threads);
        out << fmt::format("{}: L1 = {:.6f} over {} samples (threshold {}) -> {}\n", to_string(variant), v.l1,
                           v.samples, pdf_l1_threshold, v.pass ? "pass" : "fail");
        if (!v.pass && runs < 10000) err << "fail: too few runs for a reliable comparison\n";
        return v.pass ? exit_ok : exit_mismatch;
    } catch (const Error& e) {
        err << "runtime error: " << e.what() << '\n';
        return e.kind() == ErrorKind::degenerate_geometry ? exit_config : exit_runtime;
    }
}

}  // namespace tocsim::cli
