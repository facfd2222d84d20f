#pragma once

// V2X payloads exchanged between the RSU and the CAV: an extended CAM
// (AutomatedVehicle container), a roadworks DENM and an MCM whose maneuver
// container is either vehicle- or RSU-originated.
//
// Quantities are stored in the integer units used on the wire (mm, cm/s,
// cm/s^2, ms) so that decode(encode(m)) == m holds exactly. Use the helpers
// at the bottom of this header to convert from SI values.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace tocsim {

using StationId = std::uint32_t;
using AdviceId = std::uint32_t;

/// BTP destination ports used for demultiplexing.
namespace btp {
inline constexpr std::uint16_t denm_port = 2001;
inline constexpr std::uint16_t cam_port = 2002;
inline constexpr std::uint16_t mcm_port = 2010;
}  // namespace btp

enum class SaeLevel : std::uint8_t { l0 = 0, l1, l2, l3, l4, l5 };

struct CamMessage {
    StationId station_id = 0;
    std::uint32_t gen_time_ms = 0;
    std::uint32_t position_mm = 0;
    std::uint16_t speed_cms = 0;
    std::int16_t accel_cms2 = 0;
    SaeLevel sae_level = SaeLevel::l3;

    friend bool operator==(const CamMessage&, const CamMessage&) = default;
};

enum class EventType : std::uint8_t { roadworks = 3 };

struct DenmMessage {
    StationId station_id = 0;
    EventType event_type = EventType::roadworks;
    std::uint32_t event_position_mm = 0;
    std::uint8_t affected_lane = 0;
    std::uint32_t relevance_distance_mm = 0;

    friend bool operator==(const DenmMessage&, const DenmMessage&) = default;
};

// ---------------------------------------------------------------------------
// MCM advices

/// Wire tags of the RSU advice kinds. Gap, lane-change and speed advices are
/// reserved so the tag space stays stable; they cannot be built or decoded.
enum class AdviceKind : std::uint8_t {
    transition_of_control = 1,
    safe_spot = 2,
    gap = 3,
    lane_change = 4,
    speed = 5,
};

constexpr bool advice_kind_supported(AdviceKind kind) noexcept {
    return kind == AdviceKind::transition_of_control || kind == AdviceKind::safe_spot;
}

/// Range of positions on the approach axis; far_mm is the end farther from
/// the no-AD zone.
struct DistanceRange {
    std::uint32_t far_mm = 0;
    std::uint32_t near_mm = 0;

    friend bool operator==(const DistanceRange&, const DistanceRange&) = default;
};

struct TimeWindow {
    std::uint32_t start_ms = 0;
    std::uint32_t end_ms = 0;

    friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

struct TransitionOfControlAdvice {
    AdviceId advice_id = 0;
    SaeLevel target_automation_level = SaeLevel::l0;
    std::variant<DistanceRange, TimeWindow> trigger;

    friend bool operator==(const TransitionOfControlAdvice&, const TransitionOfControlAdvice&) = default;
};

struct SafeSpotAdvice {
    AdviceId advice_id = 0;
    DistanceRange range;

    friend bool operator==(const SafeSpotAdvice&, const SafeSpotAdvice&) = default;
};

using Advice = std::variant<TransitionOfControlAdvice, SafeSpotAdvice>;

AdviceId advice_id(const Advice& advice) noexcept;
AdviceKind advice_kind(const Advice& advice) noexcept;

enum class ComplianceStatus : std::uint8_t { received_will_try = 0, following = 1, rejected = 2 };

struct AdviceResponse {
    AdviceId advice_id = 0;
    ComplianceStatus compliance_status = ComplianceStatus::received_will_try;

    friend bool operator==(const AdviceResponse&, const AdviceResponse&) = default;
};

// ---------------------------------------------------------------------------
// MCM containers

struct Dynamics {
    std::uint32_t position_mm = 0;
    std::uint16_t speed_cms = 0;
    std::int16_t accel_cms2 = 0;

    friend bool operator==(const Dynamics&, const Dynamics&) = default;
};

struct Waypoint {
    std::uint32_t x_mm = 0;
    std::uint16_t v_cms = 0;

    friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

struct VehicleManeuverContainer {
    Dynamics dynamics;
    std::vector<Waypoint> planned_trajectory;
    std::optional<std::vector<Waypoint>> desired_trajectory;
    std::vector<AdviceResponse> advice_responses;

    friend bool operator==(const VehicleManeuverContainer&, const VehicleManeuverContainer&) = default;
};

struct TargetedAdvices {
    StationId target_station_id = 0;
    std::vector<Advice> advices;

    friend bool operator==(const TargetedAdvices&, const TargetedAdvices&) = default;
};

struct RsuSuggestedManeuverContainer {
    std::vector<TargetedAdvices> entries;

    friend bool operator==(const RsuSuggestedManeuverContainer&, const RsuSuggestedManeuverContainer&) = default;
};

enum class StationType : std::uint8_t { vehicle = 5, rsu = 15 };

struct McmMessage {
    StationId station_id = 0;
    std::uint32_t gen_time_ms = 0;
    StationType station_type = StationType::vehicle;
    std::variant<VehicleManeuverContainer, RsuSuggestedManeuverContainer> body;

    friend bool operator==(const McmMessage&, const McmMessage&) = default;
};

using Message = std::variant<CamMessage, DenmMessage, McmMessage>;

std::string_view message_name(const Message& msg) noexcept;

// ---------------------------------------------------------------------------
// Codec

/// Checks the type invariants; throws Error(encode_error) naming the field.
void validate(const Message& msg);

/// Serializes into `out` (cleared first). The first two bytes are the
/// big-endian BTP destination port.
void encode_into(const Message& msg, std::vector<std::uint8_t>& out);
std::vector<std::uint8_t> encode(const Message& msg);

/// Throws Error(unknown_message) for an unrecognised port and
/// Error(malformed_payload) for anything truncated, trailing or invalid.
Message decode(std::span<const std::uint8_t> bytes);

// ---------------------------------------------------------------------------
// Unit helpers (round to nearest, saturating at the type bounds)

std::uint32_t to_mm(double meters) noexcept;
std::uint16_t to_cms(double meters_per_second) noexcept;
std::int16_t to_cms2(double meters_per_second2) noexcept;
std::uint32_t to_ms(double seconds) noexcept;

constexpr double mm_to_m(std::uint32_t mm) noexcept { return static_cast<double>(mm) / 1000.0; }
constexpr double cms_to_mps(std::uint16_t cms) noexcept { return static_cast<double>(cms) / 100.0; }
constexpr double cms2_to_mps2(std::int16_t cms2) noexcept { return static_cast<double>(cms2) / 100.0; }

}  // namespace tocsim
