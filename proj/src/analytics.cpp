#include "tocsim/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "tocsim/error.hpp"

namespace tocsim {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

}  // namespace

double AnalyticalPdf::total_mass() const noexcept {
    double m = 0.0;
    for (const auto& a : atoms) m += a.mass;
    for (const auto& b : bands) m += b.density * (b.hi - b.lo);
    return m;
}

double AnalyticalPdf::mass_in(double lo, double hi) const noexcept {
    double m = 0.0;
    for (const auto& a : atoms) {
        if (a.x >= lo - edge_tolerance && a.x < hi - edge_tolerance) m += a.mass;
    }
    for (const auto& b : bands) {
        const double overlap = std::min(hi, b.hi) - std::max(lo, b.lo);
        if (overlap > 0.0) m += b.density * overlap;
    }
    return m;
}

double d_toc(const CalibrationProfile& profile, const ScenarioConfig& cfg) noexcept {
    return profile.d_tor() + profile.d_2speedmrm + cfg.y_margin;
}

AnalyticalPdf pdf_denm(const ScenarioConfig& cfg) { return {{{cfg.relevance_distance, 1.0}}, {}}; }

AnalyticalPdf pdf_min_dmrm(const ScenarioConfig& cfg, const CalibrationProfile& profile) {
    const int n = cfg.window_count();
    const double first = d_toc(profile, cfg) + cfg.spot_length();
    AnalyticalPdf pdf;
    for (int i = 0; i < n; ++i) pdf.atoms.push_back({first + i * cfg.s_len, 1.0 / n});
    return pdf;
}

// The band pattern continues uniformly up to the last window, whose range
// starts at d_toc + spot_len + (n-1) s_len; an alternative reading with
// (n-1) spot lengths breaks the band sequence and is not used.
AnalyticalPdf pdf_distr_toc(const ScenarioConfig& cfg, const CalibrationProfile& profile) {
    const int n = cfg.window_count();
    const double first = d_toc(profile, cfg) + cfg.spot_length();
    const double last = first + (n - 1) * cfg.s_len;
    if (n < 1 || !(cfg.max_toc_range > last)) {
        throw Error(ErrorKind::degenerate_geometry,
                    fmt::format("max_toc_range {:.3f} must exceed the farthest TOR bound {:.3f}", cfg.max_toc_range,
                                last));
    }
    const double p_park = 1.0 / n;
    const double toc_range = cfg.max_toc_range - first;
    AnalyticalPdf pdf;
    double density = 0.0;
    for (int k = 0; k < n; ++k) {
        density += p_park / (toc_range - k * cfg.s_len);
        const double lo = first + k * cfg.s_len;
        const double hi = k + 1 < n ? lo + cfg.s_len : cfg.max_toc_range;
        pdf.bands.push_back({lo, hi, density});
    }
    return pdf;
}

AnalyticalPdf pdf_for(Variant variant, const ScenarioConfig& cfg, const CalibrationProfile& profile) {
    if (is_denm(variant)) return pdf_denm(cfg);
    if (uses_rng(variant)) return pdf_distr_toc(cfg, profile);
    return pdf_min_dmrm(cfg, profile);
}

Histogram::Histogram(double origin, double width, std::size_t bins)
    : origin_(origin), width_(width), counts_(bins, 0) {
    if (!(width > 0.0)) throw Error(ErrorKind::invalid_parameter, "histogram bin width must be positive");
}

void Histogram::add(double x) noexcept {
    ++total_;
    const double u = (x - origin_ + edge_tolerance) / width_;
    if (u < 0.0) {
        ++underflow_;
        return;
    }
    const auto i = static_cast<std::size_t>(std::floor(u));
    if (i >= counts_.size()) {
        ++overflow_;
        return;
    }
    ++counts_[i];
}

double Histogram::mass(std::size_t i) const noexcept {
    return total_ == 0 ? 0.0 : static_cast<double>(counts_[i]) / static_cast<double>(total_);
}

Histogram toc_histogram(const ScenarioConfig& cfg, const CalibrationProfile& profile) {
    const double anchor = d_toc(profile, cfg) + cfg.spot_length();
    const double origin = anchor - cfg.s_len * std::floor(anchor / cfg.s_len);
    const auto bins = static_cast<std::size_t>(std::ceil((start_position(cfg) - origin) / cfg.s_len));
    return Histogram(origin, cfg.s_len, bins);
}

double l1_distance(const Histogram& hist, const AnalyticalPdf& pdf) {
    if (hist.total() == 0) throw Error(ErrorKind::empty_input, "histogram has no samples");
    const double n = static_cast<double>(hist.total());
    double d = 0.0;
    for (std::size_t i = 0; i < hist.bins(); ++i) d += std::abs(hist.mass(i) - pdf.mass_in(hist.bin_lo(i), hist.bin_hi(i)));
    d += std::abs(static_cast<double>(hist.underflow()) / n - pdf.mass_in(-inf, hist.origin()));
    d += std::abs(static_cast<double>(hist.overflow()) / n - pdf.mass_in(hist.bin_hi(hist.bins() - 1), inf));
    return d;
}

Quantiles quantiles(std::vector<double> sample) {
    if (sample.empty()) throw Error(ErrorKind::empty_input, "no samples for quantiles");
    std::sort(sample.begin(), sample.end());
    const auto at = [&](double p) {
        const double pos = p * static_cast<double>(sample.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, sample.size() - 1);
        return sample[lo] + (sample[hi] - sample[lo]) * (pos - static_cast<double>(lo));
    };
    Quantiles q;
    q.min = sample.front();
    q.p5 = at(0.05);
    q.q1 = at(0.25);
    q.median = at(0.5);
    q.q3 = at(0.75);
    q.p95 = at(0.95);
    q.max = sample.back();
    q.mean = std::accumulate(sample.begin(), sample.end(), 0.0) / static_cast<double>(sample.size());
    return q;
}

KpiSummary aggregate(const std::vector<RunResult>& results, const ScenarioConfig& cfg,
                     const CalibrationProfile& profile) {
    if (results.empty()) throw Error(ErrorKind::empty_input, "no run results to aggregate");
    KpiSummary kpi{0, 0, 0, 0.0, std::nullopt, std::nullopt, {}, toc_histogram(cfg, profile)};
    kpi.runs = results.size();
    std::vector<double> dist;
    dist.reserve(results.size());
    double stop_sum = 0.0;
    for (const auto& r : results) {
        if (r.outcome == Outcome::parked) ++kpi.parked;
        if (r.outcome == Outcome::stopped_on_lane && r.stop_x) {
            ++kpi.stopped;
            stop_sum += *r.stop_x;
            kpi.max_stop_x = std::max(kpi.max_stop_x.value_or(-inf), *r.stop_x);
        }
        if (r.toc_x) kpi.toc.add(*r.toc_x);
        dist.push_back(r.dist_at_mrm_speed);
    }
    kpi.success_rate = static_cast<double>(kpi.parked) / static_cast<double>(kpi.runs);
    if (kpi.stopped > 0) kpi.mean_stop_x = stop_sum / static_cast<double>(kpi.stopped);
    kpi.dist_at_mrm_speed = quantiles(std::move(dist));
    return kpi;
}

void write_pdf_csv(std::ostream& os, const AnalyticalPdf& pdf) {
    os << "x_lo,x_hi,mass\n";
    for (const auto& a : pdf.atoms) os << fmt::format("{:.3f},{:.3f},{:.9f}\n", a.x, a.x, a.mass);
    for (const auto& b : pdf.bands) os << fmt::format("{:.3f},{:.3f},{:.9f}\n", b.lo, b.hi, b.density * (b.hi - b.lo));
}

void write_histogram_csv(std::ostream& os, const Histogram& hist) {
    os << "x_lo,x_hi,mass\n";
    for (std::size_t i = 0; i < hist.bins(); ++i) {
        os << fmt::format("{:.3f},{:.3f},{:.9f}\n", hist.bin_lo(i), hist.bin_hi(i), hist.mass(i));
    }
}

void write_summary_csv(std::ostream& os, const KpiSummary& kpi) {
    const auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{:.3f}", *v) : std::string(); };
    const auto& d = kpi.dist_at_mrm_speed;
    os << "metric,value\n";
    os << fmt::format("runs,{}\n", kpi.runs);
    os << fmt::format("parked,{}\n", kpi.parked);
    os << fmt::format("stopped_on_lane,{}\n", kpi.stopped);
    os << fmt::format("success_rate,{:.6f}\n", kpi.success_rate);
    os << fmt::format("mean_stop_x,{}\n", opt(kpi.mean_stop_x));
    os << fmt::format("max_stop_x,{}\n", opt(kpi.max_stop_x));
    os << fmt::format("dist_mrm_speed_min,{:.3f}\n", d.min);
    os << fmt::format("dist_mrm_speed_p5,{:.3f}\n", d.p5);
    os << fmt::format("dist_mrm_speed_q1,{:.3f}\n", d.q1);
    os << fmt::format("dist_mrm_speed_median,{:.3f}\n", d.median);
    os << fmt::format("dist_mrm_speed_q3,{:.3f}\n", d.q3);
    os << fmt::format("dist_mrm_speed_p95,{:.3f}\n", d.p95);
    os << fmt::format("dist_mrm_speed_max,{:.3f}\n", d.max);
    os << fmt::format("dist_mrm_speed_mean,{:.3f}\n", d.mean);
}

}  // namespace tocsim
