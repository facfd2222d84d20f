#pragma once

// Roadside unit: roadworks DENM broadcasting, safe-spot assignment, TOR
// scheduling and MCM advice bookkeeping. The safe-spot occupancy is taken
// from the scenario ground truth.

#include <map>
#include <optional>
#include <vector>

#include "tocsim/core_model.hpp"
#include "tocsim/messages.hpp"
#include "tocsim/rng.hpp"
#include "tocsim/scenario.hpp"

namespace tocsim {

/// Advices issued per target station together with their acknowledgment
/// state. Ids are strictly increasing per target.
class AdviceLedger {
public:
    struct Entry {
        Advice advice;
        double issue_time = 0.0;
        bool acknowledged = false;
    };

    AdviceId allocate_id(StationId target);
    void record(StationId target, Advice advice, double now);

    /// Marks the advice acknowledged; false if the id was never issued.
    bool acknowledge(StationId target, AdviceId id);

    std::vector<Advice> unacknowledged(StationId target) const;
    std::vector<Entry> entries(StationId target) const;
    std::vector<StationId> targets() const;

    double next_retransmit(StationId target) const;
    void set_next_retransmit(StationId target, double when);

private:
    struct Target {
        std::vector<Entry> entries;
        AdviceId next_id = 1;
        double next_retransmit = 0.0;
    };
    std::map<StationId, Target> targets_;
};

/// Emits one DENM per second of simulated time, starting at t = 0.
class DenmBroadcaster {
public:
    DenmBroadcaster(StationId rsu_id, const ScenarioConfig& cfg) : rsu_id_(rsu_id), cfg_(cfg) {}

    std::optional<DenmMessage> tick_denm(double now);

private:
    StationId rsu_id_;
    ScenarioConfig cfg_;
    double next_emit_ = 0.0;
};

/// Free window whose far edge is nearest to the zone (lowest index on ties).
int assign_safe_spot(double cav_x, const EmergencyLaneOccupancy& occ, const ScenarioConfig& cfg);

/// Closest TOR position from which the CAV still reaches the window's far
/// edge at v_mrm: far edge + d_tor + d_2speedmrm + y_margin.
double min_dist_to_safespot(int window, const CalibrationProfile& profile, const ScenarioConfig& cfg);

/// min_dmrm returns min_dist_to_safespot; distr_toc draws uniformly between
/// it and min(cav_x, max_toc_range). Only distr_toc consumes randomness.
double schedule_tor(double cav_x, int window, RsuOption option, Rng& rng, const CalibrationProfile& profile,
                    const ScenarioConfig& cfg);

/// RSU MCM with a fresh TransitionOfControl advice (degenerate distance
/// range at tor_x, target level 0) and a SafeSpot advice for the window.
McmMessage build_mcm(StationId rsu_id, StationId target, double tor_x, int window, AdviceLedger& ledger,
                     const ScenarioConfig& cfg, double now);

/// Applies a vehicle's AdviceResponseList: following / received_will_try
/// acknowledge the advice, rejected leaves it pending. Returns the number of
/// acknowledging responses matched; unknown ids are logged and ignored.
int handle_vehicle_mcm(const McmMessage& msg, AdviceLedger& ledger);

class RsuAgent {
public:
    static constexpr StationId default_station_id = 1000;
    static constexpr double retransmit_period = 1.0;

    struct Assignment {
        StationId target = 0;
        int window = 0;
        double tor_x = 0.0;
        double cav_x = 0.0;  // predicted CAV position the schedule was based on
        double planned_at = 0.0;
    };

    RsuAgent(const ScenarioConfig& cfg, const CalibrationProfile& profile, EmergencyLaneOccupancy occupancy,
             std::uint64_t run_seed, StationId station_id = default_station_id);

    void receive(const Message& msg, double now);

    /// Messages to send this tick.
    std::vector<Message> tick(double now);

    StationId station_id() const noexcept { return station_id_; }
    double position() const noexcept { return 0.0; }
    const AdviceLedger& ledger() const noexcept { return ledger_; }
    const std::vector<Assignment>& assignments() const noexcept { return assignments_; }

private:
    ScenarioConfig cfg_;
    CalibrationProfile profile_;
    EmergencyLaneOccupancy occupancy_;
    StationId station_id_;
    Rng schedule_rng_;
    DenmBroadcaster denm_;
    AdviceLedger ledger_;
    std::vector<Assignment> assignments_;
    std::vector<McmMessage> fresh_;
};

}  // namespace tocsim
