#pragma once

// Kinematic calibration of the CAV and its point-mass longitudinal motion.
//
// Coordinates: x is the distance (m) from the vehicle's front to the entry of
// the no-AD zone along the driving lane. x decreases while driving; x = 0 is
// the zone entry.

#include <optional>
#include <string_view>
#include <vector>

#include "tocsim/messages.hpp"

namespace tocsim {

/// Speeds, TOR lead time and the characterised distances of the CAV. The two
/// decelerations are fitted so the characterised distances are reproduced
/// exactly under constant deceleration.
struct CalibrationProfile {
    double v_drive = 60.0 / 3.6;
    double v_mrm = 20.0 / 3.6;
    double t_tor = 10.0;
    double d_2speedmrm = 150.0;
    double d_2stop = 24.0;
    double d_lc = 68.0;
    /// Minimum contiguous free clearance ahead of the CAV, measured when it
    /// is first adjacent to a free region at v_mrm, needed to park there.
    double theta_park = 50.0;

    /// Distance driven at v_drive during the TOR lead time.
    double d_tor() const noexcept { return v_drive * t_tor; }
    double a_to_mrm() const;
    double a_to_stop() const;

    /// Throws Error(invalid_calibration) when the profile is inconsistent.
    void validate(double spot_length) const;

    friend bool operator==(const CalibrationProfile&, const CalibrationProfile&) = default;
};

/// Constant deceleration that takes v0 to v1 over d meters: (v1^2 - v0^2) / 2d.
double calibrate_deceleration(double v0, double v1, double d);

/// Distance covered while braking from v0 to v1 at constant a < 0.
double braking_distance(double v0, double v1, double a);

enum class Lane { driving, emergency };

enum class Mode {
    automated,
    tor_pending,
    mrm_hold_speed,          // MRM active, keeping v_drive until the brake point
    mrm_brake_to_mrm_speed,
    mrm_cruise,              // at v_mrm towards an advised safe spot
    mrm_search,              // at v_mrm looking for a free region
    lane_change,
    mrm_brake_to_stop,
    manual,                  // driver took over (terminal)
    stopped_on_driving_lane, // terminal
    parked_in_safe_spot,     // terminal
};

std::string_view to_string(Mode mode) noexcept;
constexpr bool is_terminal(Mode mode) noexcept {
    return mode == Mode::manual || mode == Mode::stopped_on_driving_lane || mode == Mode::parked_in_safe_spot;
}

/// A safe-spot range on the x axis; far_x is the end the CAV reaches first.
struct SpotRange {
    double far_x = 0.0;
    double near_x = 0.0;
    friend bool operator==(const SpotRange&, const SpotRange&) = default;
};

struct ReceivedAdvice {
    Advice advice;
    ComplianceStatus status = ComplianceStatus::received_will_try;
};

struct VehicleState {
    double t = 0.0;  // simulation clock, s
    double x = 0.0;
    double v = 0.0;
    double a = 0.0;
    Lane lane = Lane::driving;
    Mode mode = Mode::automated;

    double tor_deadline = 0.0;           // valid in tor_pending
    double lane_change_remaining = 0.0;  // valid in lane_change

    std::optional<double> toc_x;
    std::optional<SpotRange> assigned_spot;
    std::vector<ReceivedAdvice> received_advices;

    /// Position at which a known hazard's relevance area starts (DENM) or the
    /// advised TOR trigger (MCM).
    std::optional<double> tor_trigger_x;
    /// Advised TOR start time (MCM time-window trigger).
    std::optional<double> tor_trigger_time;
    /// Position where v_mrm was reached.
    std::optional<double> mrm_speed_x;
    /// Where the DENM search gives up and braking to stop starts.
    double search_end_x = 0.0;
    /// Near edge of a free run already rejected during the search.
    std::optional<double> rejected_run_near;
    std::optional<double> stop_x;
    std::optional<int> parked_window;
    double dist_at_mrm_speed = 0.0;
};

/// Target speed the current mode drives towards and the acceleration used
/// to get there. Holding modes keep the current speed.
struct MotionCommand {
    double accel = 0.0;
    double floor_speed = 0.0;
};

MotionCommand motion_command(const VehicleState& state, const CalibrationProfile& profile) noexcept;

/// Exact constant-acceleration update over dt. Deceleration stops at the
/// mode's target speed and the remainder of dt is spent cruising, so any
/// split of dt yields the same final state.
VehicleState advance(const VehicleState& state, double dt, const CalibrationProfile& profile);
void advance_in_place(VehicleState& state, double dt, const CalibrationProfile& profile);

/// Time needed under the current mode's motion to reach position target_x
/// (infinity if the vehicle stops before it).
double time_to_position(const VehicleState& state, double target_x, const CalibrationProfile& profile) noexcept;

/// Time until the mode's target speed is reached (infinity if not braking).
double time_to_target_speed(const VehicleState& state, const CalibrationProfile& profile) noexcept;

}  // namespace tocsim
