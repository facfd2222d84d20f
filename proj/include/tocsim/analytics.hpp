#pragma once

// Closed-form distributions of the TOR position for each scheme, KPI
// aggregation over run results and histogram-vs-pdf comparison.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "tocsim/core_model.hpp"
#include "tocsim/scenario.hpp"
#include "tocsim/sim_engine.hpp"

namespace tocsim {

struct Atom {
    double x = 0.0;
    double mass = 0.0;
};

struct Band {
    double lo = 0.0;
    double hi = 0.0;
    double density = 0.0;  // probability per meter
};

/// Mixture of point masses and piecewise-constant density bands.
struct AnalyticalPdf {
    std::vector<Atom> atoms;
    std::vector<Band> bands;

    double total_mass() const noexcept;
    /// Mass on [lo, hi). Atoms within edge_tolerance below an edge count on
    /// the upper side, matching Histogram::add.
    double mass_in(double lo, double hi) const noexcept;
};

/// TOR positions travel in whole millimetres, so a position may sit up to
/// half a millimetre off an exact bin edge.
inline constexpr double edge_tolerance = 1e-3;

/// Distance between the TOR and the point where v_mrm is reached with the
/// y_margin left over: d_tor + d_2speedmrm + y_margin.
double d_toc(const CalibrationProfile& profile, const ScenarioConfig& cfg) noexcept;

AnalyticalPdf pdf_denm(const ScenarioConfig& cfg);
AnalyticalPdf pdf_min_dmrm(const ScenarioConfig& cfg, const CalibrationProfile& profile);

/// Window k (0 nearest the zone) admits TOR positions uniformly on
/// [d_toc + spot_len + k*s_len, max_toc_range], each window with weight 1/n.
/// The density on a band is the sum over the windows admitting it. Throws
/// Error(degenerate_geometry) when the farthest window's range is empty.
AnalyticalPdf pdf_distr_toc(const ScenarioConfig& cfg, const CalibrationProfile& profile);

AnalyticalPdf pdf_for(Variant variant, const ScenarioConfig& cfg, const CalibrationProfile& profile);

/// Fixed-width bins starting at `origin`, with underflow and overflow.
class Histogram {
public:
    Histogram(double origin, double width, std::size_t bins);

    void add(double x) noexcept;

    double origin() const noexcept { return origin_; }
    double width() const noexcept { return width_; }
    std::size_t bins() const noexcept { return counts_.size(); }
    double bin_lo(std::size_t i) const noexcept { return origin_ + width_ * static_cast<double>(i); }
    double bin_hi(std::size_t i) const noexcept { return bin_lo(i + 1); }
    std::uint64_t count(std::size_t i) const noexcept { return counts_[i]; }
    std::uint64_t underflow() const noexcept { return underflow_; }
    std::uint64_t overflow() const noexcept { return overflow_; }
    std::uint64_t total() const noexcept { return total_; }
    /// Fraction of all samples in bin i (0 when empty).
    double mass(std::size_t i) const noexcept;

private:
    double origin_;
    double width_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t underflow_ = 0;
    std::uint64_t overflow_ = 0;
    std::uint64_t total_ = 0;
};

/// s_len-wide bins aligned at d_toc + spot length, covering [0, start
/// position of the CAV].
Histogram toc_histogram(const ScenarioConfig& cfg, const CalibrationProfile& profile);

/// Sum of absolute differences between empirical and analytical mass over
/// the bins and the two tails. In [0, 2].
double l1_distance(const Histogram& hist, const AnalyticalPdf& pdf);

struct Quantiles {
    double min = 0.0;
    double p5 = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double p95 = 0.0;
    double max = 0.0;
    double mean = 0.0;
};

/// Linear interpolation between order statistics. Throws
/// Error(empty_input) on an empty sample.
Quantiles quantiles(std::vector<double> sample);

struct KpiSummary {
    std::size_t runs = 0;
    std::size_t parked = 0;
    std::size_t stopped = 0;
    double success_rate = 0.0;
    std::optional<double> mean_stop_x;
    std::optional<double> max_stop_x;
    Quantiles dist_at_mrm_speed;
    Histogram toc;
};

/// Throws Error(empty_input) when results is empty.
KpiSummary aggregate(const std::vector<RunResult>& results, const ScenarioConfig& cfg,
                     const CalibrationProfile& profile);

/// Rows x_lo,x_hi,mass; atoms have x_lo == x_hi.
void write_pdf_csv(std::ostream& os, const AnalyticalPdf& pdf);
void write_histogram_csv(std::ostream& os, const Histogram& hist);
/// metric,value rows.
void write_summary_csv(std::ostream& os, const KpiSummary& kpi);

}  // namespace tocsim
