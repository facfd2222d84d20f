#pragma once

// Automated-driving decision logic of the CAV for both management schemes.
//
// DENM flow: the hazard is cached on reception and the TOR is issued exactly
// when the vehicle enters the relevance area. After the lead time the CAV
// brakes to v_mrm and, depending on d_MRM, parks at an adjacent free region,
// searches for one, or brakes to a stop on the driving lane.
//
// MCM flow: the TOR is issued at the advised trigger. On expiry, rsu_advice
// brakes to v_mrm immediately and cruises to the advised spot; cav_decision
// keeps v_drive until d_2speedmrm before the spot's far edge so that v_mrm is
// reached exactly there. Both then change lane and park.
//
// Stepping is exact: a step is split at every trigger position, deadline and
// speed target inside dt, so results do not depend on the timestep.

#include <optional>
#include <vector>

#include "tocsim/core_model.hpp"
#include "tocsim/messages.hpp"
#include "tocsim/scenario.hpp"

namespace tocsim {

struct CavContext {
    ScenarioConfig cfg;
    CalibrationProfile profile;
    StationId station_id = 7;
    SaeLevel sae_level = SaeLevel::l3;
    /// Driver takeover hook: seconds after the TOR at which the driver takes
    /// over. Disabled (the driver never intervenes) unless set.
    std::optional<double> driver_response_time;
};

struct ModeChange {
    double t = 0.0;
    double x = 0.0;
    double v = 0.0;
    Mode from = Mode::automated;
    Mode to = Mode::automated;
};

/// Caches the hazard and issues the TOR if the vehicle is already inside the
/// relevance area while automated.
VehicleState on_denm(const DenmMessage& msg, VehicleState state, const CavContext& ctx);

/// Advances the DENM flow by dt. The sensor view is re-observed from the
/// ground-truth occupancy at every section boundary within the step.
VehicleState denm_mrm_step(VehicleState state, const EmergencyLaneOccupancy& truth, double dt,
                           const CavContext& ctx, std::vector<ModeChange>* log = nullptr);

struct McmReception {
    VehicleState state;
    std::vector<AdviceResponse> responses;
};

/// Stores the advices addressed to this station and answers each of them.
/// Advices with far < near are rejected.
McmReception on_mcm(const McmMessage& msg, VehicleState state, const CavContext& ctx);

/// Advances the MCM flow by dt.
VehicleState mcm_step(VehicleState state, const EmergencyLaneOccupancy& truth, double dt, const CavContext& ctx,
                      std::vector<ModeChange>* log = nullptr);

/// Stateful wrapper used by the simulation: message handling, stepping and
/// CAM (10 Hz) / vehicle MCM (1 Hz, MCM scheme only) emission.
class CavAgent {
public:
    static constexpr double cam_period = 0.1;
    static constexpr double mcm_period = 1.0;

    CavAgent(CavContext ctx, VehicleState initial);

    void receive(const Message& msg);
    void step(double dt, const EmergencyLaneOccupancy& truth);

    std::optional<CamMessage> emit_cam(double now);
    std::optional<McmMessage> emit_mcm(double now);

    const VehicleState& state() const noexcept { return state_; }
    const CavContext& context() const noexcept { return ctx_; }
    /// Mode changes since the previous call.
    std::vector<ModeChange> take_mode_changes();

private:
    CavContext ctx_;
    VehicleState state_;
    std::vector<ModeChange> changes_;
    double next_cam_ = 0.0;
    double next_mcm_ = 0.0;
};

/// Planned trajectory announced in vehicle MCMs: the next three 1 s
/// projections of the current motion, strictly decreasing in x.
std::vector<Waypoint> planned_trajectory(const VehicleState& state, const CalibrationProfile& profile);

}  // namespace tocsim
