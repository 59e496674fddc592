#include <doctest.h>

#include <cmath>
#include <numbers>

#include "crashforge/errors.hpp"
#include "crashforge/vehicle.hpp"
#include "oracles.hpp"

using namespace crashforge;

namespace {
FootprintOBB square(double x, double y, double heading = 0.0) {
  FootprintOBB b;
  b.center = {x, y};
  b.half_length = 1.0;
  b.half_width = 1.0;
  b.heading = heading;
  return b;
}

WaypointPath straight(double length, double speed = 10.0, double decel = 6.0) {
  return WaypointPath({{0, 0}, {length, 0}}, speed, decel);
}
}  // namespace

TEST_CASE("step_kinematic straight line") {
  VehicleState s{0, 0, 0, 10, 0};
  const VehicleState n = step_kinematic(s, 0.0, 0.0, 0.1);
  CHECK(n.x == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(n.y == 0.0);
  CHECK(n.heading == 0.0);
}

TEST_CASE("step_kinematic at rest only stores the steer") {
  VehicleState s{3, 4, 0.5, 0, 0};
  const VehicleState n = step_kinematic(s, 0.0, 0.2, 0.1);
  CHECK(n.x == 3.0);
  CHECK(n.y == 4.0);
  CHECK(n.heading == 0.5);
  CHECK(n.speed == 0.0);
  CHECK(n.steer == 0.2);
}

TEST_CASE("step_kinematic heading rate") {
  VehicleState s{0, 0, 0, 10, 0};
  const VehicleState n = step_kinematic(s, 0.0, 0.1, 0.01);
  CHECK(n.heading == doctest::Approx(3.7161e-3).epsilon(1e-4));
  CHECK(n.heading == doctest::Approx(10.0 / 2.7 * std::tan(0.1) * 0.01).epsilon(1e-14));
}

TEST_CASE("step_kinematic clamps steer and floors speed") {
  VehicleState s{0, 0, 0, 1, 0};
  const VehicleState n = step_kinematic(s, -100.0, 2.0, 0.1);
  CHECK(n.steer == doctest::Approx(vehicle::kMaxSteer));
  CHECK(n.speed == 0.0);
  CHECK_THROWS_AS(step_kinematic(s, std::nan(""), 0.0, 0.1), NonFinite);
}

TEST_CASE("constant-steer trajectories follow wheelbase / tan(steer)") {
  RngStream rng = derive_stream(4, 0);
  for (int i = 0; i < 20; ++i) {
    const double v = 1.0 + 29.0 * rng.uniform();
    const double steer = 0.05 + 0.45 * rng.uniform();
    const auto pts = oracle::constant_steer_trajectory(v, steer, 1e-3);
    const auto c = oracle::fit_circle(pts);
    const double expect = vehicle::kWheelbase / std::tan(steer);
    CHECK(std::abs(c.r - expect) / expect < 0.01);
  }
}

TEST_CASE("pure pursuit") {
  SUBCASE("aligned on a straight path") {
    VehicleState s{0, 0, 0, 10, 0};
    CHECK(pure_pursuit_steer(s, straight(100), 10.0) == 0.0);
  }
  SUBCASE("goal directly left saturates") {
    VehicleState s{0, 0, 0, 10, 0};
    const WaypointPath p({{0, 0}, {0, 5}, {0, 20}}, 10, 6);
    CHECK(pure_pursuit_steer(s, p, 5.0) == doctest::Approx(vehicle::kMaxSteer));
  }
  SUBCASE("goal at (10, 1)") {
    VehicleState s{0, 0, 0, 10, 0};
    const WaypointPath p({{0, 0}, {10, 1}}, 10, 6);
    const double la = std::hypot(10.0, 1.0);
    CHECK(pure_pursuit_steer(s, p, la) == doctest::Approx(0.05349).epsilon(1e-3));
    CHECK(pure_pursuit_steer(s, p, la) ==
          doctest::Approx(std::atan(2 * 2.7 * std::sin(std::atan2(1.0, 10.0)) / la)).epsilon(1e-14));
  }
  SUBCASE("past the end aims at the last point") {
    VehicleState s{0, 0, 0, 10, 0};
    const WaypointPath p({{0, 0}, {2, 0}, {3, -1}}, 10, 6);
    CHECK(pure_pursuit_steer(s, p, 50.0) < 0.0);
  }
}

TEST_CASE("longitudinal control") {
  const WaypointPath p = straight(200, 10.0, 6.0);
  BrakeLatch latch;
  SUBCASE("on target speed far from the end") {
    VehicleState s{0, 0, 0, 10, 0};
    CHECK(longitudinal_accel(s, p, 150.0, latch, 3.0) == 0.0);
  }
  SUBCASE("past the end brakes at the path deceleration and latches") {
    VehicleState s{0, 0, 0, 10, 0};
    CHECK(longitudinal_accel(s, p, -1.0, latch, 3.0) == -6.0);
    CHECK(latch.engaged);
    CHECK(longitudinal_accel(s, p, 150.0, latch, 3.0) == -6.0);
  }
  SUBCASE("acceleration is limited by mass") {
    VehicleState s{0, 0, 0, 0, 0};
    CHECK(longitudinal_accel(s, p, 150.0, latch, vehicle::max_accel_for_mass(2500)) ==
          doctest::Approx(2.4));
  }
  SUBCASE("stopped after braking stays stopped") {
    Agent a({0, 0, 0, 2, 0}, WaypointPath({{0, 0}, {1, 0}}, 2.0, 6.0), 1500);
    for (int i = 0; i < 200; ++i) a.step(0.02);
    CHECK(a.braking());
    CHECK(a.state().speed == 0.0);
  }
}

TEST_CASE("max acceleration from mass") {
  CHECK(vehicle::max_accel_for_mass(1500) == doctest::Approx(4.0));
  CHECK(vehicle::max_accel_for_mass(800) == doctest::Approx(6.0));
  CHECK(vehicle::max_accel_for_mass(5000) == doctest::Approx(1.5));
}

TEST_CASE("waypoint path validation and projection") {
  CHECK_THROWS_AS(WaypointPath({{0, 0}}, 10, 6), ConfigError);
  CHECK_THROWS_AS(WaypointPath({{0, 0}, {0, 0}}, 10, 6), ConfigError);
  CHECK_THROWS_AS(WaypointPath({{0, 0}, {1, 0}}, 0, 6), ConfigError);
  CHECK_THROWS_AS(WaypointPath({{0, 0}, {1, 0}}, 10, 0), ConfigError);
  const WaypointPath p({{0, 0}, {10, 0}, {10, 10}}, 10, 6);
  CHECK(p.total_length() == 20.0);
  CHECK(p.project({4, 3}) == doctest::Approx(4.0));
  CHECK(p.project({12, 6}) == doctest::Approx(16.0));
}

TEST_CASE("obb intersection basics") {
  CHECK(obb_intersect(square(0, 0), square(1, 0)));
  CHECK_FALSE(obb_intersect(square(0, 0), square(10, 0)));
  CHECK(min_clearance(square(0, 0), square(1, 0)) == 0.0);
  CHECK(min_clearance(square(0, 0), square(5, 0)) == doctest::Approx(3.0));
  const FootprintOBB a = square(0, 0), b = square(2.9, 0, std::numbers::pi / 4);
  CHECK(obb_intersect(a, b) == oracle::raster_overlap(a, b));
}

TEST_CASE("obb intersection agrees with the raster oracle on random pairs") {
  RngStream rng = derive_stream(17, 0);
  int tested = 0, disagreements = 0;
  while (tested < 1000) {
    const auto [a, b] = oracle::random_obb_pair(rng);
    if (std::abs(oracle::signed_separation(a, b)) <= 1e-6) continue;
    ++tested;
    disagreements += obb_intersect(a, b) != oracle::raster_overlap(a, b);
  }
  CHECK(disagreements == 0);
}

TEST_CASE("min_clearance agrees with boundary sampling on rotated pairs") {
  RngStream rng = derive_stream(18, 0);
  int tested = 0;
  while (tested < 200) {
    const auto [a, b] = oracle::random_obb_pair(rng);
    if (obb_intersect(a, b)) continue;
    ++tested;
    CHECK(std::abs(min_clearance(a, b) - oracle::sampled_clearance(a, b)) < 1e-3);
  }
}

TEST_CASE("footprint corners are counterclockwise around the center") {
  const FootprintOBB b = FootprintOBB::of({1, 2, 0.7, 0, 0});
  const auto c = b.corners();
  for (int i = 0; i < 4; ++i) {
    const Vec2 e0 = c[(i + 1) % 4] - c[i], e1 = c[(i + 2) % 4] - c[(i + 1) % 4];
    CHECK(distance(c[i], {1, 2}) == doctest::Approx(std::hypot(2.25, 0.95)));
    CHECK(e0.x * e1.y - e0.y * e1.x > 0.0);
    CHECK(dot(e0, e1) == doctest::Approx(0.0));
  }
  CHECK(distance(c[0], c[1]) + distance(c[1], c[2]) == doctest::Approx(4.5 + 1.9));
}

TEST_CASE("outcome classification") {
  const double c1[] = {5.0, 3.2, 0.0, 0.0};
  CHECK(classify_outcome(c1) == Outcome{OutcomeKind::Collision, 0.0});
  const double c2[] = {5.0, 0.6, 2.0};
  CHECK(classify_outcome(c2, 1.0) == Outcome{OutcomeKind::NearMiss, 0.6});
  const double c3[] = {9, 8, 7};
  CHECK(classify_outcome(c3, 1.0) == Outcome{OutcomeKind::Pass, 7.0});
  CHECK_THROWS_AS(classify_outcome(std::span<const double>{}), EmptyTrace);
  CHECK(outcome_from_string("NearMiss") == OutcomeKind::NearMiss);
  CHECK_FALSE(outcome_from_string("Crash").has_value());
}
