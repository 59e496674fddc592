#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace crashforge {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
};

double dot(Vec2 a, Vec2 b);
double norm(Vec2 v);
double distance(Vec2 a, Vec2 b);

/// Shared passenger-car geometry and controller tuning.
namespace vehicle {
inline constexpr double kWheelbase = 2.7;
inline constexpr double kLength = 4.5;
inline constexpr double kWidth = 1.9;
inline constexpr double kMaxSteer = 0.5235987755982988;  // 30 degrees
inline constexpr double kSpeedGain = 0.8;
inline constexpr double kMinLookahead = 5.0;
inline constexpr double kLookaheadPerSpeed = 0.8;
inline constexpr double kTimestep = 0.02;
inline constexpr double kNearMissThreshold = 1.0;

/// a_max = clamp(4.0 * 1500 / mass, 1.5, 6.0) m/s^2.
double max_accel_for_mass(double mass_kg);
double lookahead_for_speed(double speed);
}  // namespace vehicle

struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // radians, counterclockwise from +x
  double speed = 0.0;    // m/s, never negative
  double steer = 0.0;    // front-wheel angle, positive = left, |steer| <= 30 deg

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

/// Point on a path where the vehicle must come to rest and wait.
struct StopPoint {
  double arc_length = 0.0;
  double dwell_s = 1.0;

  friend bool operator==(const StopPoint&, const StopPoint&) = default;
};

/// Guideline polyline with cached cumulative arc length. Construction
/// validates >= 2 points, consecutive points distinct, positive speed and
/// deceleration.
class WaypointPath {
 public:
  WaypointPath(std::vector<Vec2> points, double target_speed, double brake_decel,
               std::optional<StopPoint> stop = std::nullopt);

  const std::vector<Vec2>& points() const { return points_; }
  const std::vector<double>& arc_lengths() const { return arc_; }
  double total_length() const { return arc_.back(); }
  double target_speed() const { return target_speed_; }
  double brake_decel() const { return brake_decel_; }
  const std::optional<StopPoint>& stop() const { return stop_; }

  std::size_t closest_index(Vec2 p) const;

  /// Continuous arc length of the projection of p onto the segments next to
  /// its closest vertex.
  double project(Vec2 p) const;

  friend bool operator==(const WaypointPath& a, const WaypointPath& b) {
    return a.points_ == b.points_ && a.target_speed_ == b.target_speed_ &&
           a.brake_decel_ == b.brake_decel_ && a.stop_ == b.stop_;
  }

 private:
  std::vector<Vec2> points_;
  std::vector<double> arc_;
  double target_speed_;
  double brake_decel_;
  std::optional<StopPoint> stop_;
};

struct FootprintOBB {
  Vec2 center;
  double half_length = vehicle::kLength / 2;
  double half_width = vehicle::kWidth / 2;
  double heading = 0.0;

  /// Corners in counterclockwise order.
  std::array<Vec2, 4> corners() const;
  static FootprintOBB of(const VehicleState& s);
};

enum class OutcomeKind { Collision, NearMiss, Pass };

struct Outcome {
  OutcomeKind kind = OutcomeKind::Pass;
  double min_clearance_m = 0.0;

  friend bool operator==(const Outcome&, const Outcome&) = default;
};

const char* to_string(OutcomeKind kind);
std::optional<OutcomeKind> outcome_from_string(std::string_view s);

/// Forward-Euler kinematic bicycle step. Position and heading advance with
/// the incoming speed and heading; the commanded steer is clamped to +/-30
/// degrees and stored. Throws NonFinite on any non-finite output.
VehicleState step_kinematic(const VehicleState& state, double accel, double steer_cmd, double dt,
                            double wheelbase = vehicle::kWheelbase);

/// Pure pursuit: goal is the first vertex at arc length >= lookahead beyond
/// the closest vertex (last vertex if none); steer = atan(2 L sin(alpha) /
/// lookahead), clamped.
double pure_pursuit_steer(const VehicleState& state, const WaypointPath& path, double lookahead,
                          double wheelbase = vehicle::kWheelbase);

/// Once engaged, stays engaged: the agent brakes at full deceleration until
/// it stops and never accelerates again.
struct BrakeLatch {
  bool engaged = false;
};

double stopping_margin(double speed, double brake_decel);

/// Proportional speed tracking until dist_to_path_end falls within the
/// stopping margin, then latched full braking.
double longitudinal_accel(const VehicleState& state, const WaypointPath& path,
                          double dist_to_path_end, BrakeLatch& latch, double max_accel);

/// Exact separating-axis test on the four face normals.
bool obb_intersect(const FootprintOBB& a, const FootprintOBB& b);

/// 0 when intersecting, otherwise the minimum vertex-to-edge distance over
/// both orderings.
double min_clearance(const FootprintOBB& a, const FootprintOBB& b);

Outcome classify_outcome(std::span<const double> clearance_trace,
                         double near_miss_threshold = vehicle::kNearMissThreshold);

struct ControlCommand {
  double accel = 0.0;
  double steer = 0.0;
};

/// One simulated vehicle: its state, guideline path and longitudinal phase
/// (cruise, stop-line approach, dwell, end-of-path braking).
class Agent {
 public:
  Agent(VehicleState initial, WaypointPath path, double mass_kg);

  /// Control for the current state. Advances no state.
  ControlCommand command() const;

  /// Applies command() for dt and updates the longitudinal phase.
  void step(double dt);

  const VehicleState& state() const { return state_; }
  const WaypointPath& path() const { return path_; }
  bool braking() const { return latch_.engaged; }
  double max_accel() const { return max_accel_; }

 private:
  enum class Phase { Cruise, StopApproach, Dwell, Released };

  struct Longitudinal {
    double accel;
    Phase phase;
    BrakeLatch latch;
  };
  Longitudinal plan() const;

  VehicleState state_;
  WaypointPath path_;
  double max_accel_;
  Phase phase_ = Phase::Cruise;
  double dwell_elapsed_ = 0.0;
  BrakeLatch latch_;
};

}  // namespace crashforge
