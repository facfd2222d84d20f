#pragma once

// Road geometry: the emergency lane is split into n_sections sections of
// s_len meters; section j covers [j*s_len, (j+1)*s_len) on the x axis with
// j = 0 nearest the no-AD zone. A candidate safe spot ("window") k is the run
// of spot_sections sections starting at section k.

#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

namespace tocsim {

enum class Scheme { denm, mcm };
enum class DenmDmrm { zero, fifty, unlimited };
enum class RsuOption { min_dmrm, distr_toc };
enum class CavOption { rsu_advice, cav_decision };
enum class PlacementKind { grid_enumerate, grid_random, explicit_windows };

struct Placement {
    PlacementKind kind = PlacementKind::grid_enumerate;
    std::vector<int> windows;  // explicit_windows only

    friend bool operator==(const Placement&, const Placement&) = default;
};

/// The seven evaluated scheme variants.
enum class Variant {
    denm_zero,
    denm_fifty,
    denm_unlimited,
    min_dmrm_rsu,
    min_dmrm_cav,
    distr_toc_rsu,
    distr_toc_cav,
};

inline constexpr Variant all_variants[] = {Variant::denm_zero,    Variant::denm_fifty,    Variant::denm_unlimited,
                                           Variant::min_dmrm_rsu, Variant::min_dmrm_cav,  Variant::distr_toc_rsu,
                                           Variant::distr_toc_cav};

struct ScenarioConfig {
    double relevance_distance = 500.0;
    double max_toc_range = 900.0;
    double s_len = 25.0;
    int n_sections = 20;
    int spot_sections = 3;
    int spot_count = 1;
    Placement placement;
    Scheme scheme = Scheme::denm;
    DenmDmrm denm_d_mrm = DenmDmrm::zero;
    RsuOption mcm_rsu_option = RsuOption::min_dmrm;
    CavOption mcm_cav_option = CavOption::rsu_advice;
    double y_margin = 15.0;
    double timestep = 0.1;

    // Channel and sensing knobs (ideal channel by default).
    double comm_range = std::numeric_limits<double>::infinity();
    double p_loss = 0.0;
    double sensor_range = 100.0;
    /// Rng replicates per layout for distr_toc in enumerate mode.
    int replicates = 1000;

    double spot_length() const noexcept { return spot_sections * s_len; }
    int window_count() const noexcept { return n_sections - spot_sections + 1; }
    double window_far_edge(int k) const noexcept { return (k + spot_sections) * s_len; }
    double window_near_edge(int k) const noexcept { return k * s_len; }

    /// Throws Error(invalid_config) naming the offending field.
    void validate() const;

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

Variant variant_of(const ScenarioConfig& cfg) noexcept;
void apply_variant(ScenarioConfig& cfg, Variant variant) noexcept;
std::string_view to_string(Variant variant) noexcept;
std::optional<Variant> parse_variant(std::string_view name) noexcept;
std::string_view to_string(Scheme scheme) noexcept;
std::string_view to_string(DenmDmrm d_mrm) noexcept;
bool is_denm(Variant variant) noexcept;
bool uses_rng(Variant variant) noexcept;

/// Ground-truth free/occupied state of every emergency-lane section.
struct EmergencyLaneOccupancy {
    std::vector<bool> free;     // index 0 nearest the zone
    std::vector<int> windows;   // windows placed as safe spots, ascending

    /// Layout with exactly the given windows free. Overlapping or
    /// out-of-range windows raise Error(invalid_layout).
    static EmergencyLaneOccupancy from_windows(const ScenarioConfig& cfg, std::vector<int> windows);

    bool window_free(const ScenarioConfig& cfg, int k) const;
};

/// Candidate safe-spot windows 0..n-1.
std::vector<int> enumerate_windows(const ScenarioConfig& cfg);

/// All layouts for cfg.spot_count: one per window, or every unordered pair of
/// non-overlapping windows. Order is ascending (lexicographic for pairs).
std::vector<EmergencyLaneOccupancy> enumerate_layouts(const ScenarioConfig& cfg);

/// Layouts a batch iterates over: the explicit layout when one is given,
/// otherwise the full enumeration.
std::vector<EmergencyLaneOccupancy> candidate_layouts(const ScenarioConfig& cfg);

struct SpotEncounter {
    double encounter_x = 0.0;
    double clearance = 0.0;
    double run_near_x = 0.0;
    double run_far_x = 0.0;
};

/// The first free region the vehicle at x meets: encounter_x is x itself if
/// the vehicle is already alongside a free run, otherwise the far edge of
/// the nearest free run ahead; clearance is the contiguous free length from
/// encounter_x towards the zone.
std::optional<SpotEncounter> first_spot_encounter(double x, const EmergencyLaneOccupancy& occ,
                                                  const ScenarioConfig& cfg);

/// Sections a vehicle at x can see: those not yet passed whose far edge is
/// within sensor_range ahead. Unseen sections read as occupied.
struct SensorView {
    double x = 0.0;
    double sensor_range = 0.0;
    EmergencyLaneOccupancy visible;

    static SensorView observe(double x, const EmergencyLaneOccupancy& truth, const ScenarioConfig& cfg);
};

}  // namespace tocsim
