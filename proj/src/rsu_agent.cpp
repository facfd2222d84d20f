#include "tocsim/rsu_agent.hpp"

#include <algorithm>
#include <string>

#include <spdlog/spdlog.h>

#include "tocsim/error.hpp"

namespace tocsim {

AdviceId AdviceLedger::allocate_id(StationId target) { return targets_[target].next_id++; }

void AdviceLedger::record(StationId target, Advice advice, double now) {
    auto& t = targets_[target];
    const AdviceId id = advice_id(advice);
    if (!t.entries.empty() && id <= advice_id(t.entries.back().advice)) {
        throw Error(ErrorKind::invalid_parameter, "advice ids must be strictly increasing per target");
    }
    t.next_id = std::max(t.next_id, id + 1);
    t.entries.push_back({std::move(advice), now, false});
}

bool AdviceLedger::acknowledge(StationId target, AdviceId id) {
    auto it = targets_.find(target);
    if (it == targets_.end()) return false;
    for (auto& e : it->second.entries) {
        if (advice_id(e.advice) == id) {
            e.acknowledged = true;
            return true;
        }
    }
    return false;
}

std::vector<Advice> AdviceLedger::unacknowledged(StationId target) const {
    std::vector<Advice> out;
    if (auto it = targets_.find(target); it != targets_.end()) {
        for (const auto& e : it->second.entries) {
            if (!e.acknowledged) out.push_back(e.advice);
        }
    }
    return out;
}

std::vector<AdviceLedger::Entry> AdviceLedger::entries(StationId target) const {
    if (auto it = targets_.find(target); it != targets_.end()) return it->second.entries;
    return {};
}

std::vector<StationId> AdviceLedger::targets() const {
    std::vector<StationId> out;
    out.reserve(targets_.size());
    for (const auto& [id, _] : targets_) out.push_back(id);
    return out;
}

double AdviceLedger::next_retransmit(StationId target) const {
    auto it = targets_.find(target);
    return it == targets_.end() ? 0.0 : it->second.next_retransmit;
}

void AdviceLedger::set_next_retransmit(StationId target, double when) { targets_[target].next_retransmit = when; }

std::optional<DenmMessage> DenmBroadcaster::tick_denm(double now) {
    // Tolerance absorbs clock accumulation over many small ticks.
    if (now + 1e-9 < next_emit_) return std::nullopt;
    next_emit_ += 1.0;
    DenmMessage denm;
    denm.station_id = rsu_id_;
    denm.event_type = EventType::roadworks;
    denm.event_position_mm = 0;
    denm.affected_lane = 1;
    denm.relevance_distance_mm = to_mm(cfg_.relevance_distance);
    return denm;
}

int assign_safe_spot(double /*cav_x*/, const EmergencyLaneOccupancy& occ, const ScenarioConfig& cfg) {
    for (int k = 0; k < cfg.window_count(); ++k) {
        if (occ.window_free(cfg, k)) return k;
    }
    throw Error(ErrorKind::no_spot, "no free safe-spot window in the layout");
}

double min_dist_to_safespot(int window, const CalibrationProfile& profile, const ScenarioConfig& cfg) {
    return cfg.window_far_edge(window) + profile.d_tor() + profile.d_2speedmrm + cfg.y_margin;
}

double schedule_tor(double cav_x, int window, RsuOption option, Rng& rng, const CalibrationProfile& profile,
                    const ScenarioConfig& cfg) {
    const double lo = min_dist_to_safespot(window, profile, cfg);
    const double hi = std::min(cav_x, cfg.max_toc_range);
    if (hi < lo) {
        throw Error(ErrorKind::infeasible_schedule, "TOR range [" + std::to_string(lo) + ", " +
                                                        std::to_string(hi) + "] is empty for window " +
                                                        std::to_string(window));
    }
    if (option == RsuOption::min_dmrm) return lo;
    return rng.uniform(lo, hi);
}

McmMessage build_mcm(StationId rsu_id, StationId target, double tor_x, int window, AdviceLedger& ledger,
                     const ScenarioConfig& cfg, double now) {
    TransitionOfControlAdvice toc;
    toc.advice_id = ledger.allocate_id(target);
    toc.target_automation_level = SaeLevel::l0;
    toc.trigger = DistanceRange{to_mm(tor_x), to_mm(tor_x)};

    SafeSpotAdvice spot;
    spot.advice_id = ledger.allocate_id(target);
    spot.range = DistanceRange{to_mm(cfg.window_far_edge(window)), to_mm(cfg.window_near_edge(window))};

    ledger.record(target, toc, now);
    ledger.record(target, spot, now);

    McmMessage msg;
    msg.station_id = rsu_id;
    msg.gen_time_ms = to_ms(now);
    msg.station_type = StationType::rsu;
    msg.body = RsuSuggestedManeuverContainer{{TargetedAdvices{target, {toc, spot}}}};
    return msg;
}

int handle_vehicle_mcm(const McmMessage& msg, AdviceLedger& ledger) {
    const auto* veh = std::get_if<VehicleManeuverContainer>(&msg.body);
    if (veh == nullptr) return 0;
    int acked = 0;
    for (const auto& resp : veh->advice_responses) {
        if (resp.compliance_status == ComplianceStatus::rejected) continue;
        if (ledger.acknowledge(msg.station_id, resp.advice_id)) {
            ++acked;
        } else {
            spdlog::warn("station {} responded to unknown advice {}", msg.station_id, resp.advice_id);
        }
    }
    return acked;
}

RsuAgent::RsuAgent(const ScenarioConfig& cfg, const CalibrationProfile& profile, EmergencyLaneOccupancy occupancy,
                   std::uint64_t run_seed, StationId station_id)
    : cfg_(cfg),
      profile_(profile),
      occupancy_(std::move(occupancy)),
      station_id_(station_id),
      schedule_rng_(run_seed, StreamTag::schedule),
      denm_(station_id, cfg) {}

void RsuAgent::receive(const Message& msg, double now) {
    if (const auto* cam = std::get_if<CamMessage>(&msg)) {
        if (cfg_.scheme != Scheme::mcm) return;
        const bool known = std::any_of(assignments_.begin(), assignments_.end(),
                                       [&](const Assignment& a) { return a.target == cam->station_id; });
        if (known) return;
        // Position the CAV will have when the advice reaches it (next tick).
        const double lag = now + cfg_.timestep - static_cast<double>(cam->gen_time_ms) / 1000.0;
        const double predicted_x = mm_to_m(cam->position_mm) - cms_to_mps(cam->speed_cms) * lag;
        const int window = assign_safe_spot(predicted_x, occupancy_, cfg_);
        const double tor_x = schedule_tor(predicted_x, window, cfg_.mcm_rsu_option, schedule_rng_, profile_, cfg_);
        assignments_.push_back({cam->station_id, window, tor_x, predicted_x, now});
        fresh_.push_back(build_mcm(station_id_, cam->station_id, tor_x, window, ledger_, cfg_, now));
        ledger_.set_next_retransmit(cam->station_id, now + retransmit_period);
        return;
    }
    if (const auto* mcm = std::get_if<McmMessage>(&msg)) {
        if (mcm->station_type == StationType::vehicle) handle_vehicle_mcm(*mcm, ledger_);
    }
}

std::vector<Message> RsuAgent::tick(double now) {
    std::vector<Message> out;
    if (cfg_.scheme == Scheme::denm) {
        if (auto denm = denm_.tick_denm(now)) out.emplace_back(*denm);
        return out;
    }
    for (auto& m : fresh_) out.emplace_back(std::move(m));
    fresh_.clear();
    for (const auto& a : assignments_) {
        if (now + 1e-9 < ledger_.next_retransmit(a.target)) continue;
        auto pending = ledger_.unacknowledged(a.target);
        if (pending.empty()) continue;
        McmMessage msg;
        msg.station_id = station_id_;
        msg.gen_time_ms = to_ms(now);
        msg.station_type = StationType::rsu;
        msg.body = RsuSuggestedManeuverContainer{{TargetedAdvices{a.target, std::move(pending)}}};
        out.emplace_back(std::move(msg));
        ledger_.set_next_retransmit(a.target, now + retransmit_period);
    }
    return out;
}

}  // namespace tocsim
