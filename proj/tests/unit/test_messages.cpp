#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <doctest.h>
#include <fmt/format.h>

#include "tocsim/error.hpp"
#include "tocsim/messages.hpp"

using namespace tocsim;

namespace {

using Bytes = std::vector<std::uint8_t>;

ErrorKind decode_error(const Bytes& bytes) {
    try {
        decode(bytes);
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("decode accepted the input");
    return ErrorKind::empty_input;
}

std::uint16_t port_of(const Bytes& b) { return static_cast<std::uint16_t>((b[0] << 8) | b[1]); }

// Random valid messages of every kind and container shape.
class MessageGen {
public:
    explicit MessageGen(std::uint64_t seed) : gen_(seed) {}

    Message next() {
        switch (pick(3)) {
            case 0: return cam();
            case 1: return denm();
            default: return mcm();
        }
    }

    CamMessage cam() {
        return {u32(), u32(), u32(), static_cast<std::uint16_t>(u32()), static_cast<std::int16_t>(u32()),
                static_cast<SaeLevel>(pick(6))};
    }

    DenmMessage denm() {
        return {u32(), EventType::roadworks, u32(), static_cast<std::uint8_t>(pick(256)), u32()};
    }

    McmMessage mcm() {
        McmMessage m;
        m.station_id = u32();
        m.gen_time_ms = u32();
        if (pick(2) == 0) {
            m.station_type = StationType::vehicle;
            VehicleManeuverContainer v;
            v.dynamics = {u32(), static_cast<std::uint16_t>(u32()), static_cast<std::int16_t>(u32())};
            v.planned_trajectory = trajectory(1 + pick(5));
            if (pick(2)) v.desired_trajectory = trajectory(pick(4));
            for (std::size_t i = 0, n = pick(6); i < n; ++i) {
                v.advice_responses.push_back({u32(), static_cast<ComplianceStatus>(pick(3))});
            }
            m.body = v;
        } else {
            m.station_type = StationType::rsu;
            RsuSuggestedManeuverContainer r;
            for (std::size_t i = 0, n = pick(4); i < n; ++i) {
                // At most one advice of each kind per target.
                TargetedAdvices t{u32(), {}};
                if (pick(2)) t.advices.push_back(toc_advice());
                if (pick(2)) t.advices.push_back(SafeSpotAdvice{u32(), range()});
                if (pick(2)) std::reverse(t.advices.begin(), t.advices.end());
                r.entries.push_back(t);
            }
            m.body = r;
        }
        return m;
    }

    std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(gen_); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(gen_()); }

private:
    std::vector<Waypoint> trajectory(std::size_t n) {
        std::vector<Waypoint> t;
        std::uint32_t x = 0xFFFFFFFFu - static_cast<std::uint32_t>(pick(1000));
        for (std::size_t i = 0; i < n; ++i) {
            t.push_back({x, static_cast<std::uint16_t>(u32())});
            x -= 1 + static_cast<std::uint32_t>(pick(100000));
        }
        return t;
    }

    DistanceRange range() {
        auto a = u32(), b = u32();
        return {std::max(a, b), std::min(a, b)};
    }

    Advice toc_advice() {
        TransitionOfControlAdvice toc{u32(), static_cast<SaeLevel>(pick(6)), range()};
        if (pick(2)) {
            auto a = u32(), b = u32();
            toc.trigger = TimeWindow{std::min(a, b), std::max(a, b)};
        }
        return toc;
    }

    std::mt19937_64 gen_;
};

std::map<std::string, Message> golden_messages() {
    std::map<std::string, Message> m;
    m["cam"] = CamMessage{7, 12300, to_mm(483.333), to_cms(16.667), to_cms2(-0.823), SaeLevel::l3};
    m["cam_manual"] = CamMessage{7, 99900, to_mm(159.333), 0, 0, SaeLevel::l0};
    m["denm"] = DenmMessage{1000, EventType::roadworks, 0, 1, to_mm(500.0)};

    McmMessage rsu;
    rsu.station_id = 1000;
    rsu.gen_time_ms = 2000;
    rsu.station_type = StationType::rsu;
    RsuSuggestedManeuverContainer body;
    body.entries.push_back(
        {7,
         {TransitionOfControlAdvice{1, SaeLevel::l0, DistanceRange{to_mm(406.667), to_mm(406.667)}},
          SafeSpotAdvice{2, DistanceRange{to_mm(75.0), 0}}}});
    rsu.body = body;
    m["mcm_rsu"] = rsu;

    McmMessage rsu_time = rsu;
    std::get<RsuSuggestedManeuverContainer>(rsu_time.body).entries[0].advices[0] =
        TransitionOfControlAdvice{3, SaeLevel::l0, TimeWindow{30000, 31000}};
    m["mcm_rsu_time_window"] = rsu_time;

    McmMessage veh;
    veh.station_id = 7;
    veh.gen_time_ms = 3000;
    veh.station_type = StationType::vehicle;
    VehicleManeuverContainer v;
    v.dynamics = {to_mm(950.0), to_cms(16.667), 0};
    v.planned_trajectory = {{to_mm(933.333), 1667}, {to_mm(916.667), 1667}, {to_mm(900.0), 1667}};
    v.advice_responses = {{1, ComplianceStatus::received_will_try}, {2, ComplianceStatus::following}};
    veh.body = v;
    m["mcm_vehicle"] = veh;

    McmMessage veh_desired = veh;
    std::get<VehicleManeuverContainer>(veh_desired.body).desired_trajectory = std::vector<Waypoint>{{1000, 5}};
    std::get<VehicleManeuverContainer>(veh_desired.body).advice_responses = {{9, ComplianceStatus::rejected}};
    m["mcm_vehicle_desired"] = veh_desired;
    return m;
}

std::string hex(const Bytes& b) {
    std::string s;
    for (auto byte : b) s += fmt::format("{:02x}", byte);
    return s;
}

}  // namespace

TEST_SUITE("messages") {

TEST_CASE("BTP destination ports") {
    MessageGen g(1);
    for (int i = 0; i < 50; ++i) {
        CHECK(port_of(encode(g.cam())) == 2002);
        CHECK(port_of(encode(g.denm())) == 2001);
        CHECK(port_of(encode(g.mcm())) == 2010);
    }
    CHECK(btp::cam_port == 2002);
    CHECK(btp::denm_port == 2001);
    CHECK(btp::mcm_port == 2010);
}

TEST_CASE("CAM byte layout") {
    const CamMessage cam{0x01020304, 0x0A0B0C0D, 500000, 1667, -82, SaeLevel::l3};
    const Bytes expected{0x07, 0xD2,                                  // port 2002
                         0x01, 0x02, 0x03, 0x04,                      // station id
                         0x0A, 0x0B, 0x0C, 0x0D,                      // generation time
                         0x00, 0x07, 0xA1, 0x20,                      // 500000 mm
                         0x06, 0x83,                                  // 1667 cm/s
                         0xFF, 0xAE,                                  // -82 cm/s^2
                         0x03};
    CHECK(encode(cam) == expected);
    CHECK(std::get<CamMessage>(decode(expected)) == cam);
}

TEST_CASE("unknown port and empty input") {
    CHECK(decode_error({0x07, 0xDB}) == ErrorKind::unknown_message);
    CHECK(decode_error({0x07, 0xDB, 1, 2, 3, 4, 5}) == ErrorKind::unknown_message);
    CHECK(decode_error({}) == ErrorKind::malformed_payload);
    CHECK(decode_error({0x07}) == ErrorKind::malformed_payload);
    CHECK(decode_error({0x07, 0xD2}) == ErrorKind::malformed_payload);
}

TEST_CASE("truncated and trailing payloads are malformed") {
    MessageGen g(2);
    for (int i = 0; i < 200; ++i) {
        const auto bytes = encode(g.next());
        auto cut = bytes;
        cut.resize(2 + g.pick(bytes.size() - 2));
        REQUIRE(decode_error(cut) == ErrorKind::malformed_payload);
        auto extra = bytes;
        extra.push_back(0);
        REQUIRE(decode_error(extra) == ErrorKind::malformed_payload);
    }
}

TEST_CASE("round trip of randomized messages") {
    MessageGen g(3);
    for (int i = 0; i < 10000; ++i) {
        const auto m = g.next();
        const auto bytes = encode(m);
        REQUIRE(decode(bytes) == m);
        // Equal values give identical bytes.
        REQUIRE(encode(Message(m)) == bytes);
    }
}

TEST_CASE("decode is total on arbitrary input") {
    MessageGen g(4);
    const std::uint16_t ports[] = {2001, 2002, 2010};
    std::size_t accepted = 0;
    for (int i = 0; i < 100000; ++i) {
        Bytes b;
        if (i % 2 == 0) {
            // Mutations of a valid encoding reach deep into the parser.
            b = encode(g.next());
            for (std::size_t k = 0, n = 1 + g.pick(4); k < n; ++k) {
                b[g.pick(b.size())] = static_cast<std::uint8_t>(g.pick(256));
            }
            if (g.pick(4) == 0) b.resize(g.pick(b.size() + 1));
        } else {
            b.resize(g.pick(48));
            for (auto& byte : b) byte = static_cast<std::uint8_t>(g.pick(256));
            if (b.size() >= 2 && g.pick(2)) {
                const auto port = ports[g.pick(3)];
                b[0] = static_cast<std::uint8_t>(port >> 8);
                b[1] = static_cast<std::uint8_t>(port);
            }
        }
        try {
            const auto m = decode(b);
            ++accepted;
            REQUIRE(encode(m) == b);
        } catch (const Error& e) {
            REQUIRE((e.kind() == ErrorKind::malformed_payload || e.kind() == ErrorKind::unknown_message));
        }
    }
    CHECK(accepted > 0);
}

TEST_CASE("encode rejects invariant violations naming the field") {
    auto check_field = [](const Message& m, std::string_view field) {
        try {
            encode(m);
            FAIL("encode accepted an invalid message");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::encode_error);
            CHECK(std::string(e.what()).find(field) != std::string::npos);
        }
    };
    auto rsu_with = [](Advice a) {
        McmMessage m;
        m.station_type = StationType::rsu;
        m.body = RsuSuggestedManeuverContainer{{{7, {a}}}};
        return m;
    };
    check_field(rsu_with(SafeSpotAdvice{1, {10, 20}}), "safe_spot.range");
    check_field(rsu_with(TransitionOfControlAdvice{1, SaeLevel::l0, DistanceRange{5, 6}}), "distance_range");
    check_field(rsu_with(TransitionOfControlAdvice{1, SaeLevel::l0, TimeWindow{6, 5}}), "time_window");
    check_field(rsu_with(TransitionOfControlAdvice{1, static_cast<SaeLevel>(9), DistanceRange{6, 5}}),
                "target_automation_level");

    auto rsu_pair = [](Advice a, Advice b) {
        McmMessage m;
        m.station_type = StationType::rsu;
        m.body = RsuSuggestedManeuverContainer{{{7, {a, b}}}};
        return m;
    };
    const TransitionOfControlAdvice toc{1, SaeLevel::l0, DistanceRange{20, 10}};
    const SafeSpotAdvice spot{2, {20, 10}};
    check_field(rsu_pair(toc, toc), "advices");
    check_field(rsu_pair(spot, spot), "advices");
    CHECK_NOTHROW(encode(rsu_pair(spot, toc)));

    McmMessage veh;
    veh.station_type = StationType::vehicle;
    veh.body = VehicleManeuverContainer{};
    check_field(veh, "planned_trajectory");
    std::get<VehicleManeuverContainer>(veh.body).planned_trajectory = {{100, 1}, {100, 1}};
    check_field(veh, "planned_trajectory");
    std::get<VehicleManeuverContainer>(veh.body).planned_trajectory = {{100, 1}};
    std::get<VehicleManeuverContainer>(veh.body).advice_responses.resize(256);
    check_field(veh, "advice_responses");

    McmMessage mismatch;
    mismatch.station_type = StationType::rsu;
    mismatch.body = VehicleManeuverContainer{{}, {{1, 1}}, {}, {}};
    check_field(mismatch, "station_type");

    check_field(CamMessage{1, 1, 1, 1, 1, static_cast<SaeLevel>(6)}, "sae_level");
}

TEST_CASE("reserved advice kinds cannot be decoded") {
    McmMessage m;
    m.station_type = StationType::rsu;
    m.body = RsuSuggestedManeuverContainer{{{7, {SafeSpotAdvice{1, {75000, 0}}}}}};
    auto bytes = encode(m);
    // Layout: port(2) station(4) time(4) type(1) tag(1) count(1) target(4)
    // count(1), then the advice kind byte.
    const std::size_t kind_at = 2 + 4 + 4 + 1 + 1 + 1 + 4 + 1;
    REQUIRE(bytes[kind_at] == static_cast<std::uint8_t>(AdviceKind::safe_spot));
    for (auto reserved : {AdviceKind::gap, AdviceKind::lane_change, AdviceKind::speed}) {
        CHECK_FALSE(advice_kind_supported(reserved));
        bytes[kind_at] = static_cast<std::uint8_t>(reserved);
        CHECK(decode_error(bytes) == ErrorKind::malformed_payload);
    }
}

TEST_CASE("unit helpers round and saturate") {
    CHECK(to_mm(406.6666) == 406667u);
    CHECK(to_mm(-3.0) == 0u);
    CHECK(to_mm(1e12) == 0xFFFFFFFFu);
    CHECK(to_cms(16.6667) == 1667);
    CHECK(to_cms2(-0.823) == -82);
    CHECK(to_cms2(-1e9) == std::numeric_limits<std::int16_t>::min());
    CHECK(to_ms(2.0004) == 2000u);
    CHECK(to_ms(2.0006) == 2001u);
    CHECK(mm_to_m(406667) == doctest::Approx(406.667));
}

TEST_CASE("golden encodings") {
    const std::string path = std::string(TOCSIM_GOLDEN_DIR) + "/messages.hex";
    const auto messages = golden_messages();
    if (std::getenv("TOCSIM_REGENERATE_GOLDEN")) {
        std::ofstream out(path);
        out << "# name hex; regenerate with TOCSIM_REGENERATE_GOLDEN=1\n";
        for (const auto& [name, m] : messages) out << name << ' ' << hex(encode(m)) << '\n';
    }
    std::ifstream in(path);
    REQUIRE(in);
    std::map<std::string, std::string> golden;
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string name, h;
        ls >> name >> h;
        golden[name] = h;
    }
    REQUIRE(golden.size() == messages.size());
    for (const auto& [name, m] : messages) {
        INFO(name);
        const auto bytes = encode(m);
        CHECK(hex(bytes) == golden[name]);
        CHECK(decode(bytes) == m);
    }
}

}
