#include "tocsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tocsim/error.hpp"

namespace tocsim {

namespace {

constexpr double edge_eps = 1e-9;

[[noreturn]] void bad_config(const std::string& field, const std::string& why) {
    throw Error(ErrorKind::invalid_config, field + ": " + why);
}

}  // namespace

void ScenarioConfig::validate() const {
    if (!(s_len > 0.0)) bad_config("s_len", "must be positive");
    if (n_sections < 1) bad_config("n_sections", "must be at least 1");
    if (spot_sections < 1 || spot_sections > n_sections) bad_config("spot_sections", "must lie in [1, n_sections]");
    if (std::abs(relevance_distance - n_sections * s_len) > 1e-6) {
        bad_config("relevance_distance", "must equal n_sections * s_len");
    }
    if (max_toc_range < relevance_distance) bad_config("max_toc_range", "must be >= relevance_distance");
    if (spot_count != 1 && spot_count != 2) bad_config("spot_count", "must be 1 or 2");
    if (spot_count == 2 && window_count() < spot_sections + 1) {
        bad_config("spot_count", "road too short for two disjoint safe spots");
    }
    if (!(y_margin >= 0.0)) bad_config("y_margin", "must be non-negative");
    if (!(timestep > 0.0)) bad_config("timestep", "must be positive");
    if (!(comm_range >= 0.0)) bad_config("comm_range", "must be non-negative");
    if (!(p_loss >= 0.0 && p_loss <= 1.0)) bad_config("p_loss", "must lie in [0, 1]");
    if (!(sensor_range > 0.0)) bad_config("sensor_range", "must be positive");
    if (replicates < 1) bad_config("replicates", "must be at least 1");
    if (placement.kind == PlacementKind::explicit_windows) {
        if (static_cast<int>(placement.windows.size()) != spot_count) {
            bad_config("placement", "explicit placement must list spot_count windows");
        }
        for (int k : placement.windows) {
            if (k < 0 || k >= window_count()) bad_config("placement", "window index out of range");
        }
    }
}

Variant variant_of(const ScenarioConfig& cfg) noexcept {
    if (cfg.scheme == Scheme::denm) {
        switch (cfg.denm_d_mrm) {
            case DenmDmrm::zero: return Variant::denm_zero;
            case DenmDmrm::fifty: return Variant::denm_fifty;
            case DenmDmrm::unlimited: return Variant::denm_unlimited;
        }
    }
    const bool cav = cfg.mcm_cav_option == CavOption::cav_decision;
    if (cfg.mcm_rsu_option == RsuOption::min_dmrm) return cav ? Variant::min_dmrm_cav : Variant::min_dmrm_rsu;
    return cav ? Variant::distr_toc_cav : Variant::distr_toc_rsu;
}

void apply_variant(ScenarioConfig& cfg, Variant variant) noexcept {
    switch (variant) {
        case Variant::denm_zero:
        case Variant::denm_fifty:
        case Variant::denm_unlimited:
            cfg.scheme = Scheme::denm;
            cfg.denm_d_mrm = variant == Variant::denm_zero    ? DenmDmrm::zero
                             : variant == Variant::denm_fifty ? DenmDmrm::fifty
                                                              : DenmDmrm::unlimited;
            return;
        case Variant::min_dmrm_rsu:
        case Variant::min_dmrm_cav:
        case Variant::distr_toc_rsu:
        case Variant::distr_toc_cav:
            cfg.scheme = Scheme::mcm;
            cfg.mcm_rsu_option = (variant == Variant::min_dmrm_rsu || variant == Variant::min_dmrm_cav)
                                     ? RsuOption::min_dmrm
                                     : RsuOption::distr_toc;
            cfg.mcm_cav_option = (variant == Variant::min_dmrm_cav || variant == Variant::distr_toc_cav)
                                     ? CavOption::cav_decision
                                     : CavOption::rsu_advice;
            return;
    }
}

std::string_view to_string(Variant variant) noexcept {
    switch (variant) {
        case Variant::denm_zero: return "denm_zero";
        case Variant::denm_fifty: return "denm_fifty";
        case Variant::denm_unlimited: return "denm_unlimited";
        case Variant::min_dmrm_rsu: return "min_dmrm_rsu";
        case Variant::min_dmrm_cav: return "min_dmrm_cav";
        case Variant::distr_toc_rsu: return "distr_toc_rsu";
        case Variant::distr_toc_cav: return "distr_toc_cav";
    }
    return "unknown";
}

std::optional<Variant> parse_variant(std::string_view name) noexcept {
    for (auto v : all_variants) {
        if (to_string(v) == name) return v;
    }
    if (name == "zero" || name == "0") return Variant::denm_zero;
    if (name == "fifty" || name == "50") return Variant::denm_fifty;
    if (name == "unlimited") return Variant::denm_unlimited;
    return std::nullopt;
}

std::string_view to_string(Scheme scheme) noexcept { return scheme == Scheme::denm ? "denm" : "mcm"; }

std::string_view to_string(DenmDmrm d_mrm) noexcept {
    switch (d_mrm) {
        case DenmDmrm::zero: return "0";
        case DenmDmrm::fifty: return "50";
        case DenmDmrm::unlimited: return "unlimited";
    }
    return "unknown";
}

bool is_denm(Variant variant) noexcept {
    return variant == Variant::denm_zero || variant == Variant::denm_fifty || variant == Variant::denm_unlimited;
}

bool uses_rng(Variant variant) noexcept {
    return variant == Variant::distr_toc_rsu || variant == Variant::distr_toc_cav;
}

EmergencyLaneOccupancy EmergencyLaneOccupancy::from_windows(const ScenarioConfig& cfg, std::vector<int> windows) {
    std::sort(windows.begin(), windows.end());
    EmergencyLaneOccupancy occ;
    occ.free.assign(static_cast<std::size_t>(cfg.n_sections), false);
    for (int k : windows) {
        if (k < 0 || k >= cfg.window_count()) {
            throw Error(ErrorKind::invalid_layout, "window " + std::to_string(k) + " out of range");
        }
        for (int j = k; j < k + cfg.spot_sections; ++j) {
            if (occ.free[static_cast<std::size_t>(j)]) {
                throw Error(ErrorKind::invalid_layout, "window " + std::to_string(k) + " overlaps another spot");
            }
            occ.free[static_cast<std::size_t>(j)] = true;
        }
    }
    occ.windows = std::move(windows);
    return occ;
}

bool EmergencyLaneOccupancy::window_free(const ScenarioConfig& cfg, int k) const {
    if (k < 0 || k + cfg.spot_sections > static_cast<int>(free.size())) return false;
    for (int j = k; j < k + cfg.spot_sections; ++j) {
        if (!free[static_cast<std::size_t>(j)]) return false;
    }
    return true;
}

std::vector<int> enumerate_windows(const ScenarioConfig& cfg) {
    std::vector<int> windows(static_cast<std::size_t>(std::max(0, cfg.window_count())));
    for (std::size_t k = 0; k < windows.size(); ++k) windows[k] = static_cast<int>(k);
    return windows;
}

std::vector<EmergencyLaneOccupancy> enumerate_layouts(const ScenarioConfig& cfg) {
    if (cfg.spot_count != 1 && cfg.spot_count != 2) {
        throw Error(ErrorKind::invalid_config, "spot_count: must be 1 or 2");
    }
    const int n = cfg.window_count();
    std::vector<EmergencyLaneOccupancy> layouts;
    if (cfg.spot_count == 1) {
        for (int k = 0; k < n; ++k) layouts.push_back(EmergencyLaneOccupancy::from_windows(cfg, {k}));
        return layouts;
    }
    for (int k1 = 0; k1 < n; ++k1) {
        for (int k2 = k1 + cfg.spot_sections; k2 < n; ++k2) {
            layouts.push_back(EmergencyLaneOccupancy::from_windows(cfg, {k1, k2}));
        }
    }
    return layouts;
}

std::vector<EmergencyLaneOccupancy> candidate_layouts(const ScenarioConfig& cfg) {
    if (cfg.placement.kind == PlacementKind::explicit_windows) {
        return {EmergencyLaneOccupancy::from_windows(cfg, cfg.placement.windows)};
    }
    return enumerate_layouts(cfg);
}

std::optional<SpotEncounter> first_spot_encounter(double x, const EmergencyLaneOccupancy& occ,
                                                  const ScenarioConfig& cfg) {
    const int n = static_cast<int>(occ.free.size());
    // Highest section not yet passed, i.e. whose near edge lies below x.
    int s = std::min(n - 1, static_cast<int>(std::ceil((x - edge_eps) / cfg.s_len)) - 1);
    while (s >= 0 && !occ.free[static_cast<std::size_t>(s)]) --s;
    if (s < 0) return std::nullopt;

    int top = s;
    while (top + 1 < n && occ.free[static_cast<std::size_t>(top + 1)]) ++top;
    int bottom = s;
    while (bottom - 1 >= 0 && occ.free[static_cast<std::size_t>(bottom - 1)]) --bottom;

    SpotEncounter enc;
    enc.run_near_x = bottom * cfg.s_len;
    enc.run_far_x = (top + 1) * cfg.s_len;
    enc.encounter_x = std::min(x, enc.run_far_x);
    enc.clearance = enc.encounter_x - enc.run_near_x;
    return enc;
}

SensorView SensorView::observe(double x, const EmergencyLaneOccupancy& truth, const ScenarioConfig& cfg) {
    SensorView view;
    view.x = x;
    view.sensor_range = cfg.sensor_range;
    view.visible.free.assign(truth.free.size(), false);
    for (std::size_t j = 0; j < truth.free.size(); ++j) {
        const double near = static_cast<double>(j) * cfg.s_len;
        const double far = near + cfg.s_len;
        view.visible.free[j] = truth.free[j] && near < x - edge_eps && far >= x - cfg.sensor_range - edge_eps;
    }
    return view;
}

}  // namespace tocsim
