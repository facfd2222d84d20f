#include "tocsim/cav_agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tocsim {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();
constexpr double pos_eps = 1e-7;
constexpr double time_eps = 1e-9;

void set_mode(VehicleState& s, Mode to, std::vector<ModeChange>* log) {
    if (log != nullptr) log->push_back({s.t, s.x, s.v, s.mode, to});
    s.mode = to;
}

void issue_tor(VehicleState& s, const CavContext& ctx, std::vector<ModeChange>* log) {
    s.toc_x = s.x;
    s.tor_deadline = s.t + ctx.profile.t_tor;
    for (auto& r : s.received_advices) {
        if (r.status == ComplianceStatus::received_will_try) r.status = ComplianceStatus::following;
    }
    set_mode(s, Mode::tor_pending, log);
}

void start_lane_change(VehicleState& s, const CavContext& ctx, std::optional<int> window,
                       std::vector<ModeChange>* log) {
    s.lane_change_remaining = ctx.profile.d_lc;
    s.parked_window = window;
    set_mode(s, Mode::lane_change, log);
}

// Placed window the vehicle parks in: the highest placed window of the free
// run that starts below the encounter point.
std::optional<int> window_at(double encounter_x, const EmergencyLaneOccupancy& truth, const ScenarioConfig& cfg) {
    std::optional<int> best;
    for (int k : truth.windows) {
        if (cfg.window_near_edge(k) < encounter_x - pos_eps) best = k;
    }
    return best;
}

bool adjacent(const SpotEncounter& enc, double x) { return enc.encounter_x >= x - pos_eps; }

// Instantaneous transitions at the current state. Returns true if the mode
// changed, in which case the caller re-evaluates before moving on.
bool fire_denm(VehicleState& s, const EmergencyLaneOccupancy& truth, const CavContext& ctx,
               std::vector<ModeChange>* log) {
    const auto& p = ctx.profile;
    const auto& cfg = ctx.cfg;
    switch (s.mode) {
        case Mode::automated:
            if (s.tor_trigger_x && s.x <= *s.tor_trigger_x + pos_eps) {
                issue_tor(s, ctx, log);
                return true;
            }
            return false;
        case Mode::mrm_brake_to_mrm_speed: {
            if (s.v > p.v_mrm + 1e-9) return false;
            s.v = p.v_mrm;
            s.mrm_speed_x = s.x;
            const auto view = SensorView::observe(s.x, truth, cfg);
            const auto enc = first_spot_encounter(s.x, view.visible, cfg);
            if (enc && adjacent(*enc, s.x)) {
                if (enc->clearance >= p.theta_park - pos_eps) {
                    start_lane_change(s, ctx, window_at(s.x, truth, cfg), log);
                    return true;
                }
                s.rejected_run_near = enc->run_near_x;
            }
            switch (cfg.denm_d_mrm) {
                case DenmDmrm::zero:
                    set_mode(s, Mode::mrm_brake_to_stop, log);
                    return true;
                case DenmDmrm::fifty:
                    s.search_end_x = s.x - 50.0;
                    break;
                case DenmDmrm::unlimited:
                    s.search_end_x = std::min(s.x, p.d_2stop);
                    break;
            }
            set_mode(s, Mode::mrm_search, log);
            return true;
        }
        case Mode::mrm_search: {
            const auto view = SensorView::observe(s.x, truth, cfg);
            const auto enc = first_spot_encounter(s.x, view.visible, cfg);
            if (enc && adjacent(*enc, s.x) && enc->run_near_x != s.rejected_run_near) {
                if (enc->clearance >= p.theta_park - pos_eps) {
                    start_lane_change(s, ctx, window_at(s.x, truth, cfg), log);
                    return true;
                }
                s.rejected_run_near = enc->run_near_x;
            }
            if (s.x <= s.search_end_x + pos_eps) {
                set_mode(s, Mode::mrm_brake_to_stop, log);
                return true;
            }
            return false;
        }
        default:
            return false;
    }
}

void arrive_at_spot(VehicleState& s, const EmergencyLaneOccupancy& truth, const CavContext& ctx,
                    std::vector<ModeChange>* log) {
    const auto& cfg = ctx.cfg;
    const auto spot = *s.assigned_spot;
    const int first = static_cast<int>(std::lround(spot.near_x / cfg.s_len));
    const int last = static_cast<int>(std::lround(spot.far_x / cfg.s_len));
    const auto view = SensorView::observe(s.x + pos_eps, truth, cfg);
    bool free = first < last && last <= static_cast<int>(view.visible.free.size());
    for (int j = first; free && j < last; ++j) free = view.visible.free[static_cast<std::size_t>(j)];
    if (free) {
        start_lane_change(s, ctx, first, log);
    } else {
        set_mode(s, Mode::mrm_brake_to_stop, log);
    }
}

bool fire_mcm(VehicleState& s, const EmergencyLaneOccupancy& truth, const CavContext& ctx,
              std::vector<ModeChange>* log) {
    const auto& p = ctx.profile;
    switch (s.mode) {
        case Mode::automated:
            if ((s.tor_trigger_x && s.x <= *s.tor_trigger_x + pos_eps) ||
                (s.tor_trigger_time && s.t >= *s.tor_trigger_time - time_eps)) {
                issue_tor(s, ctx, log);
                return true;
            }
            return false;
        case Mode::mrm_hold_speed:
            if (s.x <= s.assigned_spot->far_x + p.d_2speedmrm + pos_eps) {
                set_mode(s, Mode::mrm_brake_to_mrm_speed, log);
                return true;
            }
            return false;
        case Mode::mrm_brake_to_mrm_speed:
            if (s.v > p.v_mrm + 1e-9) return false;
            s.v = p.v_mrm;
            s.mrm_speed_x = s.x;
            if (s.x <= s.assigned_spot->far_x + pos_eps) {
                arrive_at_spot(s, truth, ctx, log);
            } else {
                set_mode(s, Mode::mrm_cruise, log);
            }
            return true;
        case Mode::mrm_cruise:
            if (s.x <= s.assigned_spot->far_x + pos_eps) {
                arrive_at_spot(s, truth, ctx, log);
                return true;
            }
            return false;
        default:
            return false;
    }
}

// Transitions shared by both flows.
bool fire_common(VehicleState& s, const CavContext& ctx, std::vector<ModeChange>* log) {
    switch (s.mode) {
        case Mode::tor_pending:
            if (ctx.driver_response_time && *ctx.driver_response_time < ctx.profile.t_tor &&
                s.t >= s.tor_deadline - ctx.profile.t_tor + *ctx.driver_response_time - time_eps) {
                set_mode(s, Mode::manual, log);
                return true;
            }
            if (s.t < s.tor_deadline - time_eps) return false;
            if (ctx.cfg.scheme == Scheme::mcm && ctx.cfg.mcm_cav_option == CavOption::cav_decision) {
                set_mode(s, Mode::mrm_hold_speed, log);
            } else {
                set_mode(s, Mode::mrm_brake_to_mrm_speed, log);
            }
            return true;
        case Mode::lane_change:
            if (s.lane_change_remaining > pos_eps) return false;
            s.lane_change_remaining = 0.0;
            s.lane = Lane::emergency;
            s.v = 0.0;
            s.a = 0.0;
            set_mode(s, Mode::parked_in_safe_spot, log);
            return true;
        case Mode::mrm_brake_to_stop:
            if (s.v > 1e-9) return false;
            s.v = 0.0;
            s.a = 0.0;
            s.stop_x = s.x;
            set_mode(s, Mode::stopped_on_driving_lane, log);
            return true;
        default:
            return false;
    }
}

struct Horizon {
    double dt = inf;
    std::optional<double> snap_x;

    void position(const VehicleState& s, double target, const CalibrationProfile& p) {
        if (!(target < s.x - pos_eps)) return;
        const double t = time_to_position(s, target, p);
        if (t < dt) {
            dt = t;
            snap_x = target;
        }
    }
    void time(double t) {
        if (t < dt) {
            dt = t;
            snap_x.reset();
        }
    }
};

Horizon next_event(const VehicleState& s, const CavContext& ctx) {
    const auto& p = ctx.profile;
    const auto& cfg = ctx.cfg;
    Horizon h;
    switch (s.mode) {
        case Mode::automated:
            if (s.tor_trigger_x) h.position(s, *s.tor_trigger_x, p);
            if (s.tor_trigger_time) h.time(std::max(0.0, *s.tor_trigger_time - s.t));
            h.position(s, 0.0, p);
            break;
        case Mode::tor_pending:
            h.time(std::max(0.0, s.tor_deadline - s.t));
            if (ctx.driver_response_time) {
                h.time(std::max(0.0, s.tor_deadline - p.t_tor + *ctx.driver_response_time - s.t));
            }
            break;
        case Mode::mrm_hold_speed:
            h.position(s, s.assigned_spot->far_x + p.d_2speedmrm, p);
            break;
        case Mode::mrm_brake_to_mrm_speed:
        case Mode::mrm_brake_to_stop:
            h.time(time_to_target_speed(s, p));
            break;
        case Mode::mrm_search: {
            // Free regions can only start at section boundaries.
            const double boundary = std::floor((s.x - pos_eps) / cfg.s_len) * cfg.s_len;
            h.position(s, boundary, p);
            h.position(s, s.search_end_x, p);
            break;
        }
        case Mode::mrm_cruise:
            h.position(s, s.assigned_spot->far_x, p);
            break;
        case Mode::lane_change:
            h.position(s, s.x - s.lane_change_remaining, p);
            break;
        default:
            break;
    }
    return h;
}

template <typename Fire>
VehicleState run_step(VehicleState s, double dt, const CavContext& ctx, std::vector<ModeChange>* log, Fire fire) {
    double remaining = dt;
    // Each pass either fires a transition or consumes time; the mode graph is
    // acyclic so the number of passes per step is bounded.
    for (int guard = 0; guard < 1024; ++guard) {
        if (is_terminal(s.mode)) break;
        if (fire_common(s, ctx, log) || fire(s)) continue;
        if (remaining <= 0.0) break;
        const auto h = next_event(s, ctx);
        if (h.dt >= remaining) {
            advance_in_place(s, remaining, ctx.profile);
            remaining = 0.0;
            continue;
        }
        advance_in_place(s, h.dt, ctx.profile);
        if (h.snap_x) s.x = *h.snap_x;
        remaining -= h.dt;
    }
    if (remaining > 0.0) advance_in_place(s, remaining, ctx.profile);
    return s;
}

}  // namespace

VehicleState on_denm(const DenmMessage& msg, VehicleState state, const CavContext& ctx) {
    const double relevance = mm_to_m(msg.relevance_distance_mm) + mm_to_m(msg.event_position_mm);
    if (!state.tor_trigger_x) state.tor_trigger_x = relevance;
    if (state.mode == Mode::automated && state.x <= relevance + pos_eps) issue_tor(state, ctx, nullptr);
    return state;
}

VehicleState denm_mrm_step(VehicleState state, const EmergencyLaneOccupancy& truth, double dt,
                           const CavContext& ctx, std::vector<ModeChange>* log) {
    return run_step(std::move(state), dt, ctx, log,
                    [&](VehicleState& s) { return fire_denm(s, truth, ctx, log); });
}

VehicleState mcm_step(VehicleState state, const EmergencyLaneOccupancy& truth, double dt, const CavContext& ctx,
                      std::vector<ModeChange>* log) {
    return run_step(std::move(state), dt, ctx, log,
                    [&](VehicleState& s) { return fire_mcm(s, truth, ctx, log); });
}

McmReception on_mcm(const McmMessage& msg, VehicleState state, const CavContext& ctx) {
    McmReception out;
    const auto* rsu = std::get_if<RsuSuggestedManeuverContainer>(&msg.body);
    if (rsu == nullptr) {
        out.state = std::move(state);
        return out;
    }
    for (const auto& entry : rsu->entries) {
        if (entry.target_station_id != ctx.station_id) continue;
        for (const auto& advice : entry.advices) {
            const AdviceId id = advice_id(advice);
            auto it = std::find_if(state.received_advices.begin(), state.received_advices.end(),
                                   [&](const ReceivedAdvice& r) { return advice_id(r.advice) == id; });
            if (it != state.received_advices.end()) {
                out.responses.push_back({id, it->status});
                continue;
            }

            bool well_formed = true;
            if (const auto* toc = std::get_if<TransitionOfControlAdvice>(&advice)) {
                if (const auto* r = std::get_if<DistanceRange>(&toc->trigger)) {
                    well_formed = r->far_mm >= r->near_mm;
                } else {
                    const auto& w = std::get<TimeWindow>(toc->trigger);
                    well_formed = w.end_ms >= w.start_ms;
                }
            } else {
                const auto& r = std::get<SafeSpotAdvice>(advice).range;
                well_formed = r.far_mm >= r.near_mm;
            }
            if (!well_formed) {
                state.received_advices.push_back({advice, ComplianceStatus::rejected});
                out.responses.push_back({id, ComplianceStatus::rejected});
                continue;
            }

            if (const auto* toc = std::get_if<TransitionOfControlAdvice>(&advice)) {
                if (const auto* r = std::get_if<DistanceRange>(&toc->trigger)) {
                    state.tor_trigger_x = mm_to_m(r->far_mm);
                } else {
                    state.tor_trigger_time = static_cast<double>(std::get<TimeWindow>(toc->trigger).start_ms) / 1000.0;
                }
            } else {
                const auto& r = std::get<SafeSpotAdvice>(advice).range;
                state.assigned_spot = SpotRange{mm_to_m(r.far_mm), mm_to_m(r.near_mm)};
            }
            const auto status =
                state.mode == Mode::automated ? ComplianceStatus::received_will_try : ComplianceStatus::following;
            state.received_advices.push_back({advice, status});
            out.responses.push_back({id, status});
        }
    }
    out.state = std::move(state);
    return out;
}

std::vector<Waypoint> planned_trajectory(const VehicleState& state, const CalibrationProfile& profile) {
    std::vector<Waypoint> traj;
    VehicleState probe = state;
    probe.received_advices.clear();
    std::uint32_t last = to_mm(state.x) + 1;
    for (int i = 0; i < 3; ++i) {
        probe = advance(probe, 1.0, profile);
        const auto x_mm = to_mm(probe.x);
        if (x_mm >= last) break;
        traj.push_back({x_mm, to_cms(probe.v)});
        last = x_mm;
    }
    if (traj.empty()) traj.push_back({to_mm(state.x), to_cms(state.v)});
    return traj;
}

CavAgent::CavAgent(CavContext ctx, VehicleState initial) : ctx_(std::move(ctx)), state_(std::move(initial)) {}

void CavAgent::receive(const Message& msg) {
    if (const auto* denm = std::get_if<DenmMessage>(&msg)) {
        if (ctx_.cfg.scheme != Scheme::denm) return;
        const Mode before = state_.mode;
        state_ = on_denm(*denm, std::move(state_), ctx_);
        if (state_.mode != before) changes_.push_back({state_.t, state_.x, state_.v, before, state_.mode});
    } else if (const auto* mcm = std::get_if<McmMessage>(&msg)) {
        if (ctx_.cfg.scheme != Scheme::mcm || mcm->station_type != StationType::rsu) return;
        auto rx = on_mcm(*mcm, std::move(state_), ctx_);
        state_ = std::move(rx.state);
    }
}

void CavAgent::step(double dt, const EmergencyLaneOccupancy& truth) {
    if (ctx_.cfg.scheme == Scheme::denm) {
        state_ = denm_mrm_step(std::move(state_), truth, dt, ctx_, &changes_);
    } else {
        state_ = mcm_step(std::move(state_), truth, dt, ctx_, &changes_);
    }
}

std::optional<CamMessage> CavAgent::emit_cam(double now) {
    if (now + time_eps < next_cam_) return std::nullopt;
    next_cam_ += cam_period;
    CamMessage cam;
    cam.station_id = ctx_.station_id;
    cam.gen_time_ms = to_ms(now);
    cam.position_mm = to_mm(state_.x);
    cam.speed_cms = to_cms(state_.v);
    cam.accel_cms2 = to_cms2(state_.a);
    cam.sae_level = state_.mode == Mode::manual ? SaeLevel::l0 : ctx_.sae_level;
    return cam;
}

std::optional<McmMessage> CavAgent::emit_mcm(double now) {
    if (ctx_.cfg.scheme != Scheme::mcm || is_terminal(state_.mode)) return std::nullopt;
    if (now + time_eps < next_mcm_) return std::nullopt;
    next_mcm_ += mcm_period;
    VehicleManeuverContainer veh;
    veh.dynamics = {to_mm(state_.x), to_cms(state_.v), to_cms2(state_.a)};
    veh.planned_trajectory = planned_trajectory(state_, ctx_.profile);
    for (const auto& r : state_.received_advices) veh.advice_responses.push_back({advice_id(r.advice), r.status});
    McmMessage msg;
    msg.station_id = ctx_.station_id;
    msg.gen_time_ms = to_ms(now);
    msg.station_type = StationType::vehicle;
    msg.body = std::move(veh);
    return msg;
}

std::vector<ModeChange> CavAgent::take_mode_changes() {
    std::vector<ModeChange> out;
    out.swap(changes_);
    return out;
}

}  // namespace tocsim
