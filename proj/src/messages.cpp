#include "tocsim/messages.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "tocsim/error.hpp"

// Wire layout (all integers big-endian):
//
//   u16 BTP destination port
//   CAM  : u32 station_id, u32 gen_time_ms, u32 position_mm, u16 speed_cms,
//          i16 accel_cms2, u8 sae_level
//   DENM : u32 station_id, u8 event_type, u32 event_position_mm,
//          u8 affected_lane, u32 relevance_distance_mm
//   MCM  : u32 station_id, u32 gen_time_ms, u8 station_type, u8 body tag
//          (0 vehicle, 1 rsu), then the container:
//     vehicle : dynamics (u32 pos_mm, u16 speed_cms, i16 accel_cms2),
//               list<waypoint> planned, u8 desired-present + list<waypoint>,
//               list<response>
//     rsu     : list<entry>; entry = u32 target, list<advice>
//   list<T>  : u8 count followed by the elements
//   waypoint : u32 x_mm, u16 v_cms
//   response : u32 advice_id, u8 status
//   advice   : u8 kind tag, u32 advice_id, then
//     ToC       : u8 target level, u8 trigger tag (0 distance, 1 time),
//                 u32 far_mm/start_ms, u32 near_mm/end_ms
//     SafeSpot  : u32 far_mm, u32 near_mm

namespace tocsim {

namespace {

constexpr std::size_t max_list = std::numeric_limits<std::uint8_t>::max();

class Writer {
public:
    explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) {
        out_.push_back(static_cast<std::uint8_t>(v >> 8));
        out_.push_back(static_cast<std::uint8_t>(v));
    }
    void i16(std::int16_t v) { u16(static_cast<std::uint16_t>(v)); }
    void u32(std::uint32_t v) {
        u16(static_cast<std::uint16_t>(v >> 16));
        u16(static_cast<std::uint16_t>(v));
    }

private:
    std::vector<std::uint8_t>& out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    std::uint8_t u8() {
        need(1);
        return in_[pos_++];
    }
    std::uint16_t u16() {
        need(2);
        auto v = static_cast<std::uint16_t>((in_[pos_] << 8) | in_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    std::int16_t i16() { return static_cast<std::int16_t>(u16()); }
    std::uint32_t u32() {
        std::uint32_t hi = u16();
        return (hi << 16) | u16();
    }
    bool done() const noexcept { return pos_ == in_.size(); }

private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) {
            throw Error(ErrorKind::malformed_payload, "truncated payload");
        }
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

[[noreturn]] void bad_field(const char* field, const char* why) {
    throw Error(ErrorKind::encode_error, std::string(field) + ": " + why);
}

void check_list(std::size_t n, const char* field) {
    if (n > max_list) bad_field(field, "more than 255 elements");
}

bool valid_level(SaeLevel level) { return static_cast<std::uint8_t>(level) <= 5; }

void validate_trajectory(const std::vector<Waypoint>& traj, const char* field, bool require_nonempty) {
    check_list(traj.size(), field);
    if (require_nonempty && traj.empty()) bad_field(field, "must not be empty");
    for (std::size_t i = 1; i < traj.size(); ++i) {
        if (traj[i].x_mm >= traj[i - 1].x_mm) bad_field(field, "waypoint x must be strictly decreasing");
    }
}

void validate_advice(const Advice& advice) {
    if (const auto* toc = std::get_if<TransitionOfControlAdvice>(&advice)) {
        if (!valid_level(toc->target_automation_level)) bad_field("target_automation_level", "not in 0..5");
        if (const auto* r = std::get_if<DistanceRange>(&toc->trigger)) {
            if (r->far_mm < r->near_mm) bad_field("distance_range", "far_x below near_x");
        } else {
            const auto& w = std::get<TimeWindow>(toc->trigger);
            if (w.end_ms < w.start_ms) bad_field("time_window", "end before start");
        }
    } else {
        const auto& spot = std::get<SafeSpotAdvice>(advice);
        if (spot.range.far_mm < spot.range.near_mm) bad_field("safe_spot.range", "far_x below near_x");
    }
}

void validate_mcm(const McmMessage& m) {
    const bool rsu_body = std::holds_alternative<RsuSuggestedManeuverContainer>(m.body);
    if (m.station_type != StationType::vehicle && m.station_type != StationType::rsu) {
        bad_field("station_type", "unknown station type");
    }
    if ((m.station_type == StationType::rsu) != rsu_body) {
        bad_field("station_type", "rsu station type requires an RSU suggested maneuver container");
    }
    if (const auto* veh = std::get_if<VehicleManeuverContainer>(&m.body)) {
        validate_trajectory(veh->planned_trajectory, "planned_trajectory", true);
        if (veh->desired_trajectory) validate_trajectory(*veh->desired_trajectory, "desired_trajectory", false);
        check_list(veh->advice_responses.size(), "advice_responses");
        for (const auto& r : veh->advice_responses) {
            if (static_cast<std::uint8_t>(r.compliance_status) > 2) bad_field("compliance_status", "unknown value");
        }
        return;
    }
    const auto& rsu = std::get<RsuSuggestedManeuverContainer>(m.body);
    check_list(rsu.entries.size(), "entries");
    for (const auto& entry : rsu.entries) {
        check_list(entry.advices.size(), "advices");
        int toc = 0;
        int spot = 0;
        for (const auto& advice : entry.advices) {
            validate_advice(advice);
            (std::holds_alternative<TransitionOfControlAdvice>(advice) ? toc : spot) += 1;
        }
        if (toc > 1) bad_field("advices", "more than one transition-of-control advice for a target");
        if (spot > 1) bad_field("advices", "more than one safe-spot advice for a target");
    }
}

void write_trajectory(Writer& w, const std::vector<Waypoint>& traj) {
    w.u8(static_cast<std::uint8_t>(traj.size()));
    for (const auto& p : traj) {
        w.u32(p.x_mm);
        w.u16(p.v_cms);
    }
}

std::vector<Waypoint> read_trajectory(Reader& r) {
    std::vector<Waypoint> traj(r.u8());
    for (auto& p : traj) {
        p.x_mm = r.u32();
        p.v_cms = r.u16();
    }
    return traj;
}

void write_range(Writer& w, const DistanceRange& range) {
    w.u32(range.far_mm);
    w.u32(range.near_mm);
}

void write_advice(Writer& w, const Advice& advice) {
    w.u8(static_cast<std::uint8_t>(advice_kind(advice)));
    w.u32(advice_id(advice));
    if (const auto* toc = std::get_if<TransitionOfControlAdvice>(&advice)) {
        w.u8(static_cast<std::uint8_t>(toc->target_automation_level));
        if (const auto* range = std::get_if<DistanceRange>(&toc->trigger)) {
            w.u8(0);
            write_range(w, *range);
        } else {
            const auto& window = std::get<TimeWindow>(toc->trigger);
            w.u8(1);
            w.u32(window.start_ms);
            w.u32(window.end_ms);
        }
    } else {
        write_range(w, std::get<SafeSpotAdvice>(advice).range);
    }
}

Advice read_advice(Reader& r) {
    const auto kind = static_cast<AdviceKind>(r.u8());
    const AdviceId id = r.u32();
    if (kind == AdviceKind::transition_of_control) {
        TransitionOfControlAdvice toc;
        toc.advice_id = id;
        toc.target_automation_level = static_cast<SaeLevel>(r.u8());
        const auto tag = r.u8();
        if (tag == 0) {
            DistanceRange range;
            range.far_mm = r.u32();
            range.near_mm = r.u32();
            toc.trigger = range;
        } else if (tag == 1) {
            TimeWindow window;
            window.start_ms = r.u32();
            window.end_ms = r.u32();
            toc.trigger = window;
        } else {
            throw Error(ErrorKind::malformed_payload, "unknown transition trigger tag");
        }
        return toc;
    }
    if (kind == AdviceKind::safe_spot) {
        SafeSpotAdvice spot;
        spot.advice_id = id;
        spot.range.far_mm = r.u32();
        spot.range.near_mm = r.u32();
        return spot;
    }
    throw Error(ErrorKind::malformed_payload, "unsupported advice kind");
}

McmMessage read_mcm(Reader& r) {
    McmMessage m;
    m.station_id = r.u32();
    m.gen_time_ms = r.u32();
    m.station_type = static_cast<StationType>(r.u8());
    const auto tag = r.u8();
    if (tag == 0) {
        VehicleManeuverContainer veh;
        veh.dynamics.position_mm = r.u32();
        veh.dynamics.speed_cms = r.u16();
        veh.dynamics.accel_cms2 = r.i16();
        veh.planned_trajectory = read_trajectory(r);
        const auto has_desired = r.u8();
        if (has_desired > 1) throw Error(ErrorKind::malformed_payload, "bad desired-trajectory flag");
        if (has_desired == 1) veh.desired_trajectory = read_trajectory(r);
        veh.advice_responses.resize(r.u8());
        for (auto& resp : veh.advice_responses) {
            resp.advice_id = r.u32();
            resp.compliance_status = static_cast<ComplianceStatus>(r.u8());
        }
        m.body = std::move(veh);
    } else if (tag == 1) {
        RsuSuggestedManeuverContainer rsu;
        rsu.entries.resize(r.u8());
        for (auto& entry : rsu.entries) {
            entry.target_station_id = r.u32();
            const auto n = r.u8();
            entry.advices.reserve(n);
            for (int i = 0; i < n; ++i) entry.advices.push_back(read_advice(r));
        }
        m.body = std::move(rsu);
    } else {
        throw Error(ErrorKind::malformed_payload, "unknown maneuver container tag");
    }
    return m;
}

}  // namespace

AdviceId advice_id(const Advice& advice) noexcept {
    return std::visit([](const auto& a) { return a.advice_id; }, advice);
}

AdviceKind advice_kind(const Advice& advice) noexcept {
    return std::holds_alternative<TransitionOfControlAdvice>(advice) ? AdviceKind::transition_of_control
                                                                     : AdviceKind::safe_spot;
}

std::string_view message_name(const Message& msg) noexcept {
    switch (msg.index()) {
        case 0: return "cam";
        case 1: return "denm";
        default: return "mcm";
    }
}

void validate(const Message& msg) {
    if (const auto* cam = std::get_if<CamMessage>(&msg)) {
        if (!valid_level(cam->sae_level)) bad_field("sae_level", "not in 0..5");
    } else if (const auto* denm = std::get_if<DenmMessage>(&msg)) {
        if (denm->event_type != EventType::roadworks) bad_field("event_type", "unsupported event type");
        if (denm->relevance_distance_mm == 0) bad_field("relevance_distance", "must be positive");
    } else {
        validate_mcm(std::get<McmMessage>(msg));
    }
}

void encode_into(const Message& msg, std::vector<std::uint8_t>& out) {
    validate(msg);
    out.clear();
    out.reserve(64);
    Writer w(out);
    if (const auto* cam = std::get_if<CamMessage>(&msg)) {
        w.u16(btp::cam_port);
        w.u32(cam->station_id);
        w.u32(cam->gen_time_ms);
        w.u32(cam->position_mm);
        w.u16(cam->speed_cms);
        w.i16(cam->accel_cms2);
        w.u8(static_cast<std::uint8_t>(cam->sae_level));
    } else if (const auto* denm = std::get_if<DenmMessage>(&msg)) {
        w.u16(btp::denm_port);
        w.u32(denm->station_id);
        w.u8(static_cast<std::uint8_t>(denm->event_type));
        w.u32(denm->event_position_mm);
        w.u8(denm->affected_lane);
        w.u32(denm->relevance_distance_mm);
    } else {
        const auto& m = std::get<McmMessage>(msg);
        w.u16(btp::mcm_port);
        w.u32(m.station_id);
        w.u32(m.gen_time_ms);
        w.u8(static_cast<std::uint8_t>(m.station_type));
        if (const auto* veh = std::get_if<VehicleManeuverContainer>(&m.body)) {
            w.u8(0);
            w.u32(veh->dynamics.position_mm);
            w.u16(veh->dynamics.speed_cms);
            w.i16(veh->dynamics.accel_cms2);
            write_trajectory(w, veh->planned_trajectory);
            w.u8(veh->desired_trajectory ? 1 : 0);
            if (veh->desired_trajectory) write_trajectory(w, *veh->desired_trajectory);
            w.u8(static_cast<std::uint8_t>(veh->advice_responses.size()));
            for (const auto& resp : veh->advice_responses) {
                w.u32(resp.advice_id);
                w.u8(static_cast<std::uint8_t>(resp.compliance_status));
            }
        } else {
            const auto& rsu = std::get<RsuSuggestedManeuverContainer>(m.body);
            w.u8(1);
            w.u8(static_cast<std::uint8_t>(rsu.entries.size()));
            for (const auto& entry : rsu.entries) {
                w.u32(entry.target_station_id);
                w.u8(static_cast<std::uint8_t>(entry.advices.size()));
                for (const auto& advice : entry.advices) write_advice(w, advice);
            }
        }
    }
}

std::vector<std::uint8_t> encode(const Message& msg) {
    std::vector<std::uint8_t> out;
    encode_into(msg, out);
    return out;
}

Message decode(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2) throw Error(ErrorKind::malformed_payload, "missing BTP header");
    const auto port = static_cast<std::uint16_t>((bytes[0] << 8) | bytes[1]);
    Reader r(bytes.subspan(2));
    Message msg;
    switch (port) {
        case btp::cam_port: {
            CamMessage cam;
            cam.station_id = r.u32();
            cam.gen_time_ms = r.u32();
            cam.position_mm = r.u32();
            cam.speed_cms = r.u16();
            cam.accel_cms2 = r.i16();
            cam.sae_level = static_cast<SaeLevel>(r.u8());
            msg = cam;
            break;
        }
        case btp::denm_port: {
            DenmMessage denm;
            denm.station_id = r.u32();
            denm.event_type = static_cast<EventType>(r.u8());
            denm.event_position_mm = r.u32();
            denm.affected_lane = r.u8();
            denm.relevance_distance_mm = r.u32();
            msg = denm;
            break;
        }
        case btp::mcm_port:
            msg = read_mcm(r);
            break;
        default:
            throw Error(ErrorKind::unknown_message, "no handler for BTP port " + std::to_string(port));
    }
    if (!r.done()) throw Error(ErrorKind::malformed_payload, "trailing bytes after message");
    try {
        validate(msg);
    } catch (const Error& e) {
        throw Error(ErrorKind::malformed_payload, e.what());
    }
    return msg;
}

std::uint32_t to_mm(double meters) noexcept {
    const double mm = std::round(meters * 1000.0);
    if (!(mm > 0.0)) return 0;
    if (mm >= static_cast<double>(std::numeric_limits<std::uint32_t>::max())) {
        return std::numeric_limits<std::uint32_t>::max();
    }
    return static_cast<std::uint32_t>(mm);
}

std::uint16_t to_cms(double meters_per_second) noexcept {
    const double cms = std::round(meters_per_second * 100.0);
    if (!(cms > 0.0)) return 0;
    if (cms >= 65535.0) return std::numeric_limits<std::uint16_t>::max();
    return static_cast<std::uint16_t>(cms);
}

std::int16_t to_cms2(double meters_per_second2) noexcept {
    const double cms2 = std::clamp(std::round(meters_per_second2 * 100.0), -32768.0, 32767.0);
    if (std::isnan(cms2)) return 0;
    return static_cast<std::int16_t>(cms2);
}

std::uint32_t to_ms(double seconds) noexcept { return to_mm(seconds); }

}  // namespace tocsim
