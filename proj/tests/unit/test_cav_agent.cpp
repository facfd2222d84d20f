#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <utility>

#include <doctest.h>

#include "tocsim/cav_agent.hpp"
#include "tocsim/rsu_agent.hpp"

using namespace tocsim;

namespace {

constexpr double v_drive = 60.0 / 3.6;
constexpr double v_mrm = 20.0 / 3.6;

CavContext context(Variant v, int spots = 1) {
    CavContext ctx;
    apply_variant(ctx.cfg, v);
    ctx.cfg.spot_count = spots;
    return ctx;
}

VehicleState at(double x, Mode mode = Mode::automated) {
    VehicleState s;
    s.x = x;
    s.v = v_drive;
    s.mode = mode;
    return s;
}

DenmMessage roadworks_denm() { return {1000, EventType::roadworks, 0, 1, 500000}; }

struct Flow {
    VehicleState state;
    std::vector<ModeChange> log;
};

// DENM approach from just outside the relevance area until a terminal mode.
Flow run_denm(const CavContext& ctx, const EmergencyLaneOccupancy& layout, double dt) {
    Flow f;
    f.state = on_denm(roadworks_denm(), at(520.0), ctx);
    for (int i = 0; i < 1000000 && !is_terminal(f.state.mode); ++i) {
        f.state = denm_mrm_step(std::move(f.state), layout, dt, ctx, &f.log);
    }
    return f;
}

// MCM approach with advices built by the RSU helpers for the layout.
Flow run_mcm(const CavContext& ctx, const EmergencyLaneOccupancy& layout, double dt, double tor_x) {
    AdviceLedger ledger;
    const int window = assign_safe_spot(1000.0, layout, ctx.cfg);
    const auto msg = build_mcm(1000, ctx.station_id, tor_x, window, ledger, ctx.cfg, 0.0);
    Flow f;
    f.state = on_mcm(msg, at(1000.0), ctx).state;
    for (int i = 0; i < 1000000 && !is_terminal(f.state.mode); ++i) {
        f.state = mcm_step(std::move(f.state), layout, dt, ctx, &f.log);
    }
    return f;
}

// Independent success predicate for the DENM variants on the default road,
// evaluated by walking the emergency lane in 1 cm steps. v_mrm is reached at
// p = 500 - d_tor - d_2speedmrm; a free region qualifies if at least
// theta_park of free lane lies ahead of the first point alongside it.
struct DenmOracle {
    bool parked = false;
    double stop_x = 0.0;
};

DenmOracle denm_oracle(const std::vector<bool>& free, DenmDmrm d_mrm) {
    const double s_len = 25.0, theta = 50.0, d_2stop = 24.0;
    const long p = std::lround((500.0 - v_drive * 10.0 - 150.0) * 100.0);
    auto free_below = [&](long c) {
        const double x = (static_cast<double>(c) - 0.5) / 100.0;
        const auto j = static_cast<std::size_t>(x / s_len);
        return x > 0.0 && j < free.size() && free[j];
    };
    auto clearance = [&](long c) {
        long e = c;
        while (e > 0 && free_below(e)) --e;
        return static_cast<double>(c - e) / 100.0;
    };
    const long end = d_mrm == DenmDmrm::zero    ? p
                     : d_mrm == DenmDmrm::fifty ? p - 5000
                                                : std::lround(d_2stop * 100.0);
    long c = p;
    if (free_below(c)) {
        if (clearance(c) >= theta) return {true, 0.0};
        while (c > 0 && free_below(c)) --c;  // the run alongside is unusable
    }
    for (; c > end; --c) {
        if (free_below(c) && !free_below(c + 1) && clearance(c) >= theta) return {true, 0.0};
    }
    return {false, static_cast<double>(end) / 100.0 - d_2stop};
}

std::set<std::pair<Mode, Mode>> allowed_denm() {
    using M = Mode;
    return {{M::automated, M::tor_pending},
            {M::tor_pending, M::mrm_brake_to_mrm_speed},
            {M::mrm_brake_to_mrm_speed, M::lane_change},
            {M::mrm_brake_to_mrm_speed, M::mrm_search},
            {M::mrm_brake_to_mrm_speed, M::mrm_brake_to_stop},
            {M::mrm_search, M::lane_change},
            {M::mrm_search, M::mrm_brake_to_stop},
            {M::lane_change, M::parked_in_safe_spot},
            {M::mrm_brake_to_stop, M::stopped_on_driving_lane}};
}

std::set<std::pair<Mode, Mode>> allowed_mcm() {
    using M = Mode;
    return {{M::automated, M::tor_pending},
            {M::tor_pending, M::mrm_brake_to_mrm_speed},
            {M::tor_pending, M::mrm_hold_speed},
            {M::mrm_hold_speed, M::mrm_brake_to_mrm_speed},
            {M::mrm_brake_to_mrm_speed, M::mrm_cruise},
            {M::mrm_brake_to_mrm_speed, M::lane_change},
            {M::mrm_brake_to_mrm_speed, M::mrm_brake_to_stop},
            {M::mrm_cruise, M::lane_change},
            {M::mrm_cruise, M::mrm_brake_to_stop},
            {M::lane_change, M::parked_in_safe_spot},
            {M::mrm_brake_to_stop, M::stopped_on_driving_lane}};
}

void check_flow(const Flow& f, const std::set<std::pair<Mode, Mode>>& allowed) {
    int tors = 0;
    double last_x = 1e9;
    for (const auto& c : f.log) {
        INFO(to_string(c.from), " -> ", to_string(c.to));
        CHECK(allowed.count({c.from, c.to}) == 1);
        tors += c.to == Mode::tor_pending;
        CHECK(c.x <= last_x + 1e-9);
        last_x = c.x;
    }
    // The DENM TOR is issued during reception, outside the step log.
    CHECK(tors <= 1);
    CHECK(f.state.toc_x.has_value());
}

}  // namespace

TEST_SUITE("cav_agent") {

TEST_CASE("DENM reception gates on the relevance area") {
    const auto ctx = context(Variant::denm_zero);
    auto s = on_denm(roadworks_denm(), at(600.0), ctx);
    CHECK(s.mode == Mode::automated);
    CHECK_FALSE(s.toc_x);

    s = on_denm(roadworks_denm(), at(500.0), ctx);
    CHECK(s.mode == Mode::tor_pending);
    REQUIRE(s.toc_x);
    CHECK(*s.toc_x == doctest::Approx(500.0));
    CHECK(s.tor_deadline == doctest::Approx(10.0));

    auto pending = at(480.0, Mode::tor_pending);
    pending.toc_x = 500.0;
    pending.tor_deadline = 8.8;
    const auto again = on_denm(roadworks_denm(), pending, ctx);
    CHECK(again.mode == Mode::tor_pending);
    CHECK(*again.toc_x == 500.0);
    CHECK(again.tor_deadline == 8.8);
}

TEST_CASE("DENM flow examples") {
    {
        const auto ctx = context(Variant::denm_zero);
        const auto f = run_denm(ctx, EmergencyLaneOccupancy::from_windows(ctx.cfg, {5}), 0.1);
        CHECK(f.state.mode == Mode::parked_in_safe_spot);
        CHECK(f.state.parked_window == 5);
        CHECK(*f.state.toc_x == doctest::Approx(500.0));
    }
    {
        const auto ctx = context(Variant::denm_zero);
        const auto f = run_denm(ctx, EmergencyLaneOccupancy::from_windows(ctx.cfg, {6}), 0.1);
        CHECK(f.state.mode == Mode::stopped_on_driving_lane);
        REQUIRE(f.state.stop_x);
        CHECK(std::abs(*f.state.stop_x - 160.0) <= 1.0);
        CHECK(f.state.lane == Lane::driving);
    }
    {
        const auto ctx = context(Variant::denm_fifty);
        const auto f = run_denm(ctx, EmergencyLaneOccupancy::from_windows(ctx.cfg, {3}), 0.1);
        CHECK(f.state.mode == Mode::parked_in_safe_spot);
        CHECK(f.state.parked_window == 3);
        CHECK(f.state.lane == Lane::emergency);
    }
}

TEST_CASE("v_mrm is reached d_tor + d_2speedmrm after the TOR for any dt") {
    const auto ctx = context(Variant::denm_unlimited);
    const auto layout = EmergencyLaneOccupancy::from_windows(ctx.cfg, {0});
    for (double dt : {0.01, 0.1, 0.5}) {
        const auto f = run_denm(ctx, layout, dt);
        REQUIRE(f.state.mrm_speed_x);
        CHECK(std::abs(*f.state.mrm_speed_x - (500.0 - v_drive * 10.0 - 150.0)) <= 0.1);
    }
}

TEST_CASE("DENM outcomes match the lane-walk oracle") {
    for (int spots : {1, 2}) {
        for (auto v : {Variant::denm_zero, Variant::denm_fifty, Variant::denm_unlimited}) {
            const auto ctx = context(v, spots);
            int parked = 0;
            for (const auto& layout : enumerate_layouts(ctx.cfg)) {
                const auto f = run_denm(ctx, layout, 0.1);
                const auto want = denm_oracle(layout.free, ctx.cfg.denm_d_mrm);
                INFO(to_string(v), " windows ", layout.windows[0], " ", layout.windows.back());
                CHECK((f.state.mode == Mode::parked_in_safe_spot) == want.parked);
                if (!want.parked) {
                    REQUIRE(f.state.stop_x);
                    CHECK(*f.state.stop_x == doctest::Approx(want.stop_x).epsilon(1e-4));
                }
                parked += f.state.mode == Mode::parked_in_safe_spot;
                check_flow(f, allowed_denm());
            }
            // 1 spot: 1, 3 and 6 of 18. 2 spots: 15, 39 and 75 of 120; adjacent
            // windows form one longer free run, which adds two layouts to the
            // zero variant.
            const int expected[2][3] = {{1, 3, 6}, {15, 39, 75}};
            CHECK(parked == expected[spots - 1][static_cast<int>(ctx.cfg.denm_d_mrm)]);
        }
    }
}

TEST_CASE("DENM success sets are nested") {
    for (int spots : {1, 2}) {
        const auto layouts = enumerate_layouts(context(Variant::denm_zero, spots).cfg);
        for (const auto& layout : layouts) {
            bool prev = false;
            for (auto v : {Variant::denm_zero, Variant::denm_fifty, Variant::denm_unlimited}) {
                const bool ok = run_denm(context(v, spots), layout, 0.1).state.mode == Mode::parked_in_safe_spot;
                CHECK((!prev || ok));
                prev = ok;
            }
        }
    }
}

TEST_CASE("MCM reception") {
    const auto ctx = context(Variant::min_dmrm_rsu);
    McmMessage msg;
    msg.station_id = 1000;
    msg.station_type = StationType::rsu;
    msg.body = RsuSuggestedManeuverContainer{
        {{7, {TransitionOfControlAdvice{1, SaeLevel::l0, DistanceRange{406700, 406700}}}}}};
    auto rx = on_mcm(msg, at(900.0), ctx);
    REQUIRE(rx.responses.size() == 1);
    CHECK(rx.responses[0] == AdviceResponse{1, ComplianceStatus::received_will_try});
    CHECK(rx.state.received_advices.size() == 1);
    CHECK(*rx.state.tor_trigger_x == doctest::Approx(406.7));

    // Duplicate: one stored copy, response re-sent.
    auto dup = on_mcm(msg, rx.state, ctx);
    CHECK(dup.responses == rx.responses);
    CHECK(dup.state.received_advices.size() == 1);

    McmMessage other = msg;
    std::get<RsuSuggestedManeuverContainer>(other.body).entries[0].target_station_id = 42;
    const auto ignored = on_mcm(other, at(900.0), ctx);
    CHECK(ignored.responses.empty());
    CHECK(ignored.state.received_advices.empty());
    CHECK_FALSE(ignored.state.tor_trigger_x);

    McmMessage bad = msg;
    std::get<RsuSuggestedManeuverContainer>(bad.body).entries[0].advices = {SafeSpotAdvice{5, {1000, 2000}}};
    const auto rejected = on_mcm(bad, at(900.0), ctx);
    REQUIRE(rejected.responses.size() == 1);
    CHECK(rejected.responses[0].compliance_status == ComplianceStatus::rejected);
    CHECK_FALSE(rejected.state.assigned_spot);
}

TEST_CASE("MCM flows park in the advised spot") {
    const CalibrationProfile p;
    for (auto v : {Variant::min_dmrm_rsu, Variant::min_dmrm_cav}) {
        for (int spots : {1, 2}) {
            const auto ctx = context(v, spots);
            for (const auto& layout : enumerate_layouts(ctx.cfg)) {
                const int window = layout.windows[0];
                const double tor_x = min_dist_to_safespot(window, p, ctx.cfg);
                const auto f = run_mcm(ctx, layout, 0.1, tor_x);
                CHECK(f.state.mode == Mode::parked_in_safe_spot);
                CHECK(f.state.parked_window == window);
                CHECK(*f.state.toc_x == doctest::Approx(tor_x).epsilon(1e-6));
                const double expected = v == Variant::min_dmrm_rsu ? 15.0 : 0.0;
                CHECK(std::abs(f.state.dist_at_mrm_speed - expected) <= 1.0);
                check_flow(f, allowed_mcm());
                for (const auto& r : f.state.received_advices) CHECK(r.status == ComplianceStatus::following);
            }
        }
    }
}

TEST_CASE("cav_decision reaches v_mrm exactly at the far edge from any trigger") {
    const auto ctx = context(Variant::distr_toc_cav);
    const auto layout = EmergencyLaneOccupancy::from_windows(ctx.cfg, {4});
    for (double tor_x : {516.7, 600.0, 750.0, 899.0}) {
        for (double dt : {0.01, 0.1, 0.5}) {
            const auto f = run_mcm(ctx, layout, dt, tor_x);
            CHECK(f.state.mode == Mode::parked_in_safe_spot);
            REQUIRE(f.state.mrm_speed_x);
            CHECK(*f.state.mrm_speed_x == doctest::Approx(175.0).epsilon(1e-9));
            CHECK(f.state.dist_at_mrm_speed <= 1e-6);
        }
    }
}

TEST_CASE("an occupied advised spot ends on the driving lane") {
    const auto ctx = context(Variant::min_dmrm_rsu);
    AdviceLedger ledger;
    const auto msg = build_mcm(1000, 7, min_dist_to_safespot(2, {}, ctx.cfg), 2, ledger, ctx.cfg, 0.0);
    auto s = on_mcm(msg, at(1000.0), ctx).state;
    const auto truth = EmergencyLaneOccupancy::from_windows(ctx.cfg, {10});
    for (int i = 0; i < 100000 && !is_terminal(s.mode); ++i) s = mcm_step(std::move(s), truth, 0.1, ctx);
    CHECK(s.mode == Mode::stopped_on_driving_lane);
    CHECK(*s.stop_x == doctest::Approx(ctx.cfg.window_far_edge(2) - 24.0));
}

TEST_CASE("time-window trigger") {
    const auto ctx = context(Variant::min_dmrm_rsu);
    McmMessage msg;
    msg.station_type = StationType::rsu;
    msg.body = RsuSuggestedManeuverContainer{{{7,
                                               {TransitionOfControlAdvice{1, SaeLevel::l0, TimeWindow{5000, 6000}},
                                                SafeSpotAdvice{2, {75000, 0}}}}}};
    auto s = on_mcm(msg, at(1000.0), ctx).state;
    const auto layout = EmergencyLaneOccupancy::from_windows(ctx.cfg, {0});
    for (int i = 0; i < 100000 && !is_terminal(s.mode); ++i) s = mcm_step(std::move(s), layout, 0.3, ctx);
    CHECK(s.mode == Mode::parked_in_safe_spot);
    CHECK(*s.toc_x == doctest::Approx(1000.0 - 5.0 * v_drive));
}

TEST_CASE("driver takeover hook") {
    auto ctx = context(Variant::denm_zero);
    ctx.driver_response_time = 4.0;
    const auto f = run_denm(ctx, EmergencyLaneOccupancy::from_windows(ctx.cfg, {6}), 0.1);
    CHECK(f.state.mode == Mode::manual);
    CHECK(f.state.x == doctest::Approx(500.0 - 4.0 * v_drive).epsilon(1e-6));

    CavAgent agent(ctx, at(500.0));
    agent.receive(roadworks_denm());
    for (int i = 0; i < 50; ++i) agent.step(0.1, EmergencyLaneOccupancy::from_windows(ctx.cfg, {6}));
    const auto cam = agent.emit_cam(5.0);
    REQUIRE(cam);
    CHECK(cam->sae_level == SaeLevel::l0);
}

TEST_CASE("CAM and MCM emission rates") {
    const auto ctx = context(Variant::min_dmrm_rsu);
    CavAgent agent(ctx, at(1000.0));
    const auto layout = EmergencyLaneOccupancy::from_windows(ctx.cfg, {0});
    int cams = 0, mcms = 0;
    for (int i = 0; i < 10; ++i) {
        const double now = i * 0.1;
        if (auto c = agent.emit_cam(now)) {
            ++cams;
            CHECK(c->sae_level == SaeLevel::l3);
            CHECK(c->station_id == 7);
        }
        mcms += agent.emit_mcm(now).has_value();
        agent.step(0.1, layout);
    }
    CHECK(cams == 10);
    CHECK(mcms == 1);

    AdviceLedger ledger;
    agent.receive(build_mcm(1000, 7, 406.667, 0, ledger, ctx.cfg, 1.0));
    const auto mcm = agent.emit_mcm(1.0);
    REQUIRE(mcm);
    const auto& veh = std::get<VehicleManeuverContainer>(mcm->body);
    REQUIRE(veh.advice_responses.size() == 2);
    CHECK(veh.advice_responses[0] == AdviceResponse{1, ComplianceStatus::received_will_try});
    CHECK(veh.advice_responses[1] == AdviceResponse{2, ComplianceStatus::received_will_try});
    CHECK(veh.planned_trajectory.size() == 3);
    CHECK_NOTHROW(encode(*mcm));

    // Vehicle MCMs are only sent in the MCM scheme and CAVs ignore MCMs
    // from other vehicles.
    CavAgent denm(context(Variant::denm_zero), at(1000.0));
    CHECK_FALSE(denm.emit_mcm(0.0));
    CavAgent peer(ctx, at(1000.0));
    peer.receive(*mcm);
    CHECK(peer.state().received_advices.empty());
}

TEST_CASE("planned trajectory is strictly decreasing") {
    const CalibrationProfile p;
    for (Mode m : {Mode::automated, Mode::mrm_brake_to_mrm_speed, Mode::mrm_cruise, Mode::mrm_brake_to_stop}) {
        auto s = at(300.0, m);
        if (m == Mode::mrm_cruise || m == Mode::mrm_brake_to_stop) s.v = v_mrm;
        const auto t = planned_trajectory(s, p);
        REQUIRE(t.size() == 3);
        CHECK(t[0].x_mm < to_mm(300.0));
        CHECK(t[1].x_mm < t[0].x_mm);
        CHECK(t[2].x_mm < t[1].x_mm);
    }
}

}
