#include <cmath>
#include <algorithm>
#include <optional>
#include <random>

#include <doctest.h>

#include "tocsim/core_model.hpp"
#include "tocsim/error.hpp"

using namespace tocsim;

namespace {

bool throws_kind(auto&& fn, ErrorKind kind) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind() == kind;
    }
    return false;
}

VehicleState driving(double x, double v, Mode mode = Mode::automated) {
    VehicleState s;
    s.x = x;
    s.v = v;
    s.mode = mode;
    return s;
}

}  // namespace

TEST_SUITE("core_model") {

TEST_CASE("deceleration fits the characterised distances") {
    CHECK(calibrate_deceleration(16.667, 5.556, 150) == doctest::Approx(-0.823).epsilon(0.001));
    CHECK(calibrate_deceleration(5.556, 0, 24) == doctest::Approx(-0.643).epsilon(0.001));
    CHECK(throws_kind([] { calibrate_deceleration(10, 10, 50); }, ErrorKind::invalid_calibration));
    CHECK(throws_kind([] { calibrate_deceleration(10, 5, 0); }, ErrorKind::invalid_calibration));
    CHECK(throws_kind([] { calibrate_deceleration(5, 10, 10); }, ErrorKind::invalid_calibration));
}

TEST_CASE("braking distance inverts the fit") {
    CHECK(std::abs(braking_distance(16.667, 5.556, -0.823) - 150.0) <= 0.5);
    CHECK(std::abs(braking_distance(5.556, 0, -0.643) - 24.0) <= 0.5);
    CHECK(braking_distance(7.0, 7.0, -1.0) == 0.0);
    CHECK(throws_kind([] { braking_distance(10, 5, 0.0); }, ErrorKind::invalid_parameter));
    CHECK(throws_kind([] { braking_distance(10, 5, 0.5); }, ErrorKind::invalid_parameter));

    const CalibrationProfile p;
    CHECK(braking_distance(p.v_drive, p.v_mrm, p.a_to_mrm()) == doctest::Approx(150.0));
    CHECK(braking_distance(p.v_mrm, 0.0, p.a_to_stop()) == doctest::Approx(24.0));
    CHECK(p.d_tor() == doctest::Approx(166.667).epsilon(1e-4));
}

TEST_CASE("profile validation") {
    CalibrationProfile p;
    CHECK_NOTHROW(p.validate(75.0));
    CHECK(throws_kind([&] { p.validate(40.0); }, ErrorKind::invalid_calibration));
    p.v_mrm = p.v_drive;
    CHECK(throws_kind([&] { p.validate(75.0); }, ErrorKind::invalid_calibration));
    p = {};
    p.d_2stop = 0.0;
    CHECK(throws_kind([&] { p.validate(75.0); }, ErrorKind::invalid_calibration));
}

TEST_CASE("uniform motion") {
    const CalibrationProfile p;
    const auto s = advance(driving(500.0, 16.667), 1.0, p);
    CHECK(s.x == doctest::Approx(483.333));
    CHECK(s.v == doctest::Approx(16.667));
    CHECK(s.t == doctest::Approx(1.0));
}

TEST_CASE("brake to stop covers d_2stop") {
    const CalibrationProfile p;
    auto s = driving(100.0, p.v_mrm, Mode::mrm_brake_to_stop);
    const double t_stop = time_to_target_speed(s, p);
    CHECK(t_stop == doctest::Approx(2.0 * p.d_2stop / p.v_mrm));
    s = advance(s, t_stop, p);
    CHECK(s.v == 0.0);
    CHECK(s.x == doctest::Approx(100.0 - 24.0));
    // Once stopped the vehicle does not creep.
    s = advance(s, 5.0, p);
    CHECK(s.x == doctest::Approx(76.0));
    CHECK(s.v == 0.0);
}

TEST_CASE("a step across the end of braking equals two half steps") {
    const CalibrationProfile p;
    auto s = driving(400.0, p.v_drive, Mode::mrm_brake_to_mrm_speed);
    const double t_end = time_to_target_speed(s, p);
    s = advance(s, t_end - 0.3, p);
    const auto whole = advance(s, 1.0, p);
    const auto halves = advance(advance(s, 0.5, p), 0.5, p);
    CHECK(whole.x == doctest::Approx(halves.x).epsilon(1e-12));
    CHECK(whole.v == doctest::Approx(halves.v).epsilon(1e-12));
    CHECK(whole.v == doctest::Approx(p.v_mrm));
}

TEST_CASE("advance is split invariant over random split points") {
    const CalibrationProfile p;
    std::mt19937_64 gen(42);
    std::uniform_real_distribution<double> frac(0.0, 1.0);
    const Mode modes[] = {Mode::automated, Mode::mrm_brake_to_mrm_speed, Mode::mrm_cruise, Mode::mrm_brake_to_stop,
                          Mode::lane_change};
    for (int i = 0; i < 2000; ++i) {
        const Mode m = modes[i % 5];
        const double v = m == Mode::mrm_brake_to_mrm_speed ? p.v_mrm + (p.v_drive - p.v_mrm) * frac(gen)
                         : m == Mode::automated            ? p.v_drive
                                                           : p.v_mrm * frac(gen);
        auto s = driving(800.0, m == Mode::mrm_cruise || m == Mode::lane_change ? p.v_mrm : v, m);
        s.lane_change_remaining = 68.0;
        const double dt = 0.01 + 20.0 * frac(gen);
        const double cut = dt * frac(gen);
        const auto a = advance(s, dt, p);
        const auto b = advance(advance(s, cut, p), dt - cut, p);
        REQUIRE(a.x == doctest::Approx(b.x).epsilon(1e-9));
        REQUIRE(a.v == doctest::Approx(b.v).epsilon(1e-9));
        REQUIRE(a.lane_change_remaining == doctest::Approx(b.lane_change_remaining).epsilon(1e-9));
        REQUIRE(a.x <= s.x);
        REQUIRE(a.v >= 0.0);
        REQUIRE(a.v <= p.v_drive + 1e-12);
    }
}

TEST_CASE("deceleration after the TOR ends at x0 - d_tor - d_2speedmrm for any dt") {
    CalibrationProfile profiles[3];
    profiles[1].v_drive = 100.0 / 3.6;
    profiles[1].d_2speedmrm = 220.0;
    profiles[2].t_tor = 4.0;
    profiles[2].v_mrm = 30.0 / 3.6;
    for (const auto& p : profiles) {
        for (double dt : {0.01, 0.1, 0.5}) {
            const double x0 = 700.0;
            auto s = driving(x0, p.v_drive);
            // Tick at fixed dt, splitting a tick exactly where the lead time
            // runs out and where v_mrm is reached.
            double tor_left = p.t_tor;
            std::optional<double> end_x;
            for (int guard = 0; guard < 100000 && !end_x; ++guard) {
                double left = dt;
                while (left > 0.0 && !end_x) {
                    if (s.mode == Mode::automated) {
                        const double h = std::min(left, tor_left);
                        s = advance(s, h, p);
                        tor_left -= h;
                        left -= h;
                        if (tor_left <= 1e-12) s.mode = Mode::mrm_brake_to_mrm_speed;
                    } else {
                        const double h = std::min(left, time_to_target_speed(s, p));
                        s = advance(s, h, p);
                        left -= h;
                        if (s.v <= p.v_mrm) end_x = s.x;
                    }
                }
            }
            REQUIRE(end_x);
            CHECK(std::abs(*end_x - (x0 - p.d_tor() - p.d_2speedmrm)) <= 0.1);
        }
    }
}

TEST_CASE("time to position agrees with advance") {
    const CalibrationProfile p;
    auto s = driving(300.0, p.v_drive, Mode::mrm_brake_to_mrm_speed);
    for (double target : {290.0, 200.0, 150.0, 100.0}) {
        const double t = time_to_position(s, target, p);
        CHECK(advance(s, t, p).x == doctest::Approx(target).epsilon(1e-9));
    }
    auto stop = driving(100.0, p.v_mrm, Mode::mrm_brake_to_stop);
    CHECK(std::isinf(time_to_position(stop, 50.0, p)));
    CHECK(time_to_position(stop, 120.0, p) == 0.0);
}

TEST_CASE("terminal modes") {
    CHECK(is_terminal(Mode::parked_in_safe_spot));
    CHECK(is_terminal(Mode::stopped_on_driving_lane));
    CHECK(is_terminal(Mode::manual));
    CHECK_FALSE(is_terminal(Mode::mrm_search));
    CHECK(to_string(Mode::tor_pending) == "tor_pending");
}

}
