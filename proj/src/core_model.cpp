#include "tocsim/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tocsim/error.hpp"

namespace tocsim {

namespace {
constexpr double inf = std::numeric_limits<double>::infinity();

bool at_mrm_speed(Mode mode) {
    return mode == Mode::mrm_cruise || mode == Mode::mrm_search || mode == Mode::lane_change;
}

// Speed when not decelerating: v_mrm for the slow modes, unchanged otherwise.
double steady_speed(const VehicleState& state, const CalibrationProfile& profile) {
    return at_mrm_speed(state.mode) ? profile.v_mrm : state.v;
}
}  // namespace

double calibrate_deceleration(double v0, double v1, double d) {
    if (!(d > 0.0)) throw Error(ErrorKind::invalid_calibration, "distance must be positive");
    if (!(v1 >= 0.0) || !(v1 < v0)) {
        throw Error(ErrorKind::invalid_calibration, "requires v0 > v1 >= 0");
    }
    return (v1 * v1 - v0 * v0) / (2.0 * d);
}

double braking_distance(double v0, double v1, double a) {
    if (!(a < 0.0)) throw Error(ErrorKind::invalid_parameter, "deceleration must be negative");
    if (!(v1 >= 0.0) || v0 < v1) throw Error(ErrorKind::invalid_parameter, "requires v0 >= v1 >= 0");
    return (v1 * v1 - v0 * v0) / (2.0 * a);
}

double CalibrationProfile::a_to_mrm() const { return calibrate_deceleration(v_drive, v_mrm, d_2speedmrm); }

double CalibrationProfile::a_to_stop() const { return calibrate_deceleration(v_mrm, 0.0, d_2stop); }

void CalibrationProfile::validate(double spot_length) const {
    if (!(v_drive > v_mrm) || !(v_mrm > 0.0)) {
        throw Error(ErrorKind::invalid_calibration, "requires v_drive > v_mrm > 0");
    }
    if (!(t_tor > 0.0)) throw Error(ErrorKind::invalid_calibration, "t_tor must be positive");
    if (!(d_2speedmrm > 0.0) || !(d_2stop > 0.0) || !(d_lc > 0.0)) {
        throw Error(ErrorKind::invalid_calibration, "characterised distances must be positive");
    }
    if (!(theta_park > 0.0) || theta_park > spot_length) {
        throw Error(ErrorKind::invalid_calibration,
                    "theta_park must lie in (0, spot length = " + std::to_string(spot_length) + "]");
    }
}

std::string_view to_string(Mode mode) noexcept {
    switch (mode) {
        case Mode::automated: return "automated";
        case Mode::tor_pending: return "tor_pending";
        case Mode::mrm_hold_speed: return "mrm_hold_speed";
        case Mode::mrm_brake_to_mrm_speed: return "mrm_brake_to_mrm_speed";
        case Mode::mrm_cruise: return "mrm_cruise";
        case Mode::mrm_search: return "mrm_search";
        case Mode::lane_change: return "lane_change";
        case Mode::mrm_brake_to_stop: return "mrm_brake_to_stop";
        case Mode::manual: return "manual";
        case Mode::stopped_on_driving_lane: return "stopped_on_driving_lane";
        case Mode::parked_in_safe_spot: return "parked_in_safe_spot";
    }
    return "unknown";
}

MotionCommand motion_command(const VehicleState& state, const CalibrationProfile& profile) noexcept {
    switch (state.mode) {
        case Mode::mrm_brake_to_mrm_speed:
            return {(profile.v_mrm * profile.v_mrm - profile.v_drive * profile.v_drive) / (2.0 * profile.d_2speedmrm),
                    profile.v_mrm};
        case Mode::mrm_brake_to_stop:
            return {-(profile.v_mrm * profile.v_mrm) / (2.0 * profile.d_2stop), 0.0};
        case Mode::mrm_cruise:
        case Mode::mrm_search:
        case Mode::lane_change:
            return {0.0, profile.v_mrm};
        case Mode::manual:
        case Mode::stopped_on_driving_lane:
        case Mode::parked_in_safe_spot:
            return {0.0, 0.0};
        default:
            return {0.0, state.v};
    }
}

void advance_in_place(VehicleState& state, double dt, const CalibrationProfile& profile) {
    state.t += dt;
    if (is_terminal(state.mode)) {
        state.v = 0.0;
        state.a = 0.0;
        return;
    }

    const auto cmd = motion_command(state, profile);
    double travelled = 0.0;
    if (cmd.accel < 0.0 && state.v > cmd.floor_speed) {
        const double t_floor = (cmd.floor_speed - state.v) / cmd.accel;
        if (dt < t_floor) {
            travelled = state.v * dt + 0.5 * cmd.accel * dt * dt;
            state.v += cmd.accel * dt;
            state.a = cmd.accel;
        } else {
            travelled = state.v * t_floor + 0.5 * cmd.accel * t_floor * t_floor +
                        cmd.floor_speed * (dt - t_floor);
            state.v = cmd.floor_speed;
            state.a = 0.0;
        }
    } else {
        state.v = steady_speed(state, profile);
        travelled = state.v * dt;
        state.a = 0.0;
    }

    state.x -= travelled;
    if (state.mode == Mode::lane_change) {
        state.lane_change_remaining = std::max(0.0, state.lane_change_remaining - travelled);
    }
    if (state.mode == Mode::mrm_cruise || state.mode == Mode::mrm_search) {
        state.dist_at_mrm_speed += travelled;
    }
}

VehicleState advance(const VehicleState& state, double dt, const CalibrationProfile& profile) {
    VehicleState next = state;
    advance_in_place(next, dt, profile);
    return next;
}

double time_to_position(const VehicleState& state, double target_x, const CalibrationProfile& profile) noexcept {
    const double d = state.x - target_x;
    if (d <= 0.0) return 0.0;
    if (is_terminal(state.mode)) return inf;

    const auto cmd = motion_command(state, profile);
    const double v = steady_speed(state, profile);
    if (cmd.accel < 0.0 && v > cmd.floor_speed) {
        const double t_floor = (cmd.floor_speed - v) / cmd.accel;
        const double d_floor = v * t_floor + 0.5 * cmd.accel * t_floor * t_floor;
        if (d <= d_floor) {
            // Root of d = v t + a t^2 / 2 in the cancellation-free form.
            const double disc = std::max(0.0, v * v + 2.0 * cmd.accel * d);
            return 2.0 * d / (v + std::sqrt(disc));
        }
        if (cmd.floor_speed <= 0.0) return inf;
        return t_floor + (d - d_floor) / cmd.floor_speed;
    }
    if (v <= 0.0) return inf;
    return d / v;
}

double time_to_target_speed(const VehicleState& state, const CalibrationProfile& profile) noexcept {
    const auto cmd = motion_command(state, profile);
    if (cmd.accel < 0.0 && state.v > cmd.floor_speed) return (cmd.floor_speed - state.v) / cmd.accel;
    return inf;
}

}  // namespace tocsim
