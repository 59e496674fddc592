#include "crashforge/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crashforge/errors.hpp"

namespace crashforge {

double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double norm(Vec2 v) { return std::hypot(v.x, v.y); }
double distance(Vec2 a, Vec2 b) { return norm(a - b); }

namespace vehicle {

double max_accel_for_mass(double mass_kg) { return std::clamp(4.0 * (1500.0 / mass_kg), 1.5, 6.0); }

double lookahead_for_speed(double speed) { return std::max(kMinLookahead, kLookaheadPerSpeed * speed); }

}  // namespace vehicle

WaypointPath::WaypointPath(std::vector<Vec2> points, double target_speed, double brake_decel,
                           std::optional<StopPoint> stop)
    : points_(std::move(points)),
      target_speed_(target_speed),
      brake_decel_(brake_decel),
      stop_(stop) {
  if (points_.size() < 2) throw ConfigError("waypoint path needs at least two points");
  if (!(target_speed_ > 0.0) || !(brake_decel_ > 0.0)) {
    throw ConfigError("waypoint path needs positive target speed and brake deceleration");
  }
  arc_.reserve(points_.size());
  arc_.push_back(0.0);
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const double d = distance(points_[i - 1], points_[i]);
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw ConfigError("waypoint path has coincident or non-finite consecutive points at index " +
                        std::to_string(i));
    }
    arc_.push_back(arc_.back() + d);
  }
}

std::size_t WaypointPath::closest_index(Vec2 p) const {
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const Vec2 d = points_[i] - p;
    const double d2 = dot(d, d);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

double WaypointPath::project(Vec2 p) const {
  const std::size_t i = closest_index(p);
  double best_s = arc_[i];
  double best_d2 = dot(points_[i] - p, points_[i] - p);
  auto try_segment = [&](std::size_t a) {
    const Vec2 seg = points_[a + 1] - points_[a];
    const double len2 = dot(seg, seg);
    const double u = std::clamp(dot(p - points_[a], seg) / len2, 0.0, 1.0);
    const Vec2 q = points_[a] + u * seg;
    const double d2 = dot(q - p, q - p);
    if (d2 < best_d2) {
      best_d2 = d2;
      best_s = arc_[a] + u * std::sqrt(len2);
    }
  };
  if (i > 0) try_segment(i - 1);
  if (i + 1 < points_.size()) try_segment(i);
  return best_s;
}

std::array<Vec2, 4> FootprintOBB::corners() const {
  const Vec2 fwd{std::cos(heading), std::sin(heading)};
  const Vec2 left{-fwd.y, fwd.x};
  const Vec2 f = half_length * fwd;
  const Vec2 l = half_width * left;
  return {center + f - l, center + f + l, center - f + l, center - f - l};
}

FootprintOBB FootprintOBB::of(const VehicleState& s) {
  return FootprintOBB{{s.x, s.y}, vehicle::kLength / 2, vehicle::kWidth / 2, s.heading};
}

const char* to_string(OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::Collision: return "Collision";
    case OutcomeKind::NearMiss: return "NearMiss";
    case OutcomeKind::Pass: return "Pass";
  }
  return "?";
}

std::optional<OutcomeKind> outcome_from_string(std::string_view s) {
  if (s == "Collision") return OutcomeKind::Collision;
  if (s == "NearMiss") return OutcomeKind::NearMiss;
  if (s == "Pass") return OutcomeKind::Pass;
  return std::nullopt;
}

VehicleState step_kinematic(const VehicleState& state, double accel, double steer_cmd, double dt,
                            double wheelbase) {
  if (!std::isfinite(accel) || !std::isfinite(steer_cmd) || !std::isfinite(dt)) {
    throw NonFinite("kinematic step given a non-finite command");
  }
  const double steer = std::clamp(steer_cmd, -vehicle::kMaxSteer, vehicle::kMaxSteer);
  VehicleState next;
  next.speed = std::max(0.0, state.speed + accel * dt);
  next.heading = state.heading + (state.speed / wheelbase) * std::tan(steer) * dt;
  next.x = state.x + state.speed * std::cos(state.heading) * dt;
  next.y = state.y + state.speed * std::sin(state.heading) * dt;
  next.steer = steer;
  if (!(std::isfinite(next.x) && std::isfinite(next.y) && std::isfinite(next.heading) &&
        std::isfinite(next.speed) && std::isfinite(next.steer))) {
    throw NonFinite("kinematic step produced a non-finite state");
  }
  return next;
}

double pure_pursuit_steer(const VehicleState& state, const WaypointPath& path, double lookahead,
                          double wheelbase) {
  const auto& pts = path.points();
  const auto& arc = path.arc_lengths();
  const std::size_t closest = path.closest_index(state.position());
  std::size_t goal = pts.size() - 1;
  for (std::size_t i = closest; i < pts.size(); ++i) {
    if (arc[i] - arc[closest] >= lookahead) {
      goal = i;
      break;
    }
  }
  const Vec2 d = pts[goal] - state.position();
  const double c = std::cos(state.heading);
  const double s = std::sin(state.heading);
  const double alpha = std::atan2(-s * d.x + c * d.y, c * d.x + s * d.y);
  const double steer = std::atan(2.0 * wheelbase * std::sin(alpha) / lookahead);
  return std::clamp(steer, -vehicle::kMaxSteer, vehicle::kMaxSteer);
}

double stopping_margin(double speed, double brake_decel) {
  return speed * speed / (2.0 * brake_decel);
}

double longitudinal_accel(const VehicleState& state, const WaypointPath& path,
                          double dist_to_path_end, BrakeLatch& latch, double max_accel) {
  if (latch.engaged || dist_to_path_end <= stopping_margin(state.speed, path.brake_decel())) {
    latch.engaged = true;
    return -path.brake_decel();
  }
  const double a = vehicle::kSpeedGain * (path.target_speed() - state.speed);
  return std::clamp(a, -path.brake_decel(), max_accel);
}

bool obb_intersect(const FootprintOBB& a, const FootprintOBB& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  const std::array<Vec2, 4> axes = {
      Vec2{std::cos(a.heading), std::sin(a.heading)}, Vec2{-std::sin(a.heading), std::cos(a.heading)},
      Vec2{std::cos(b.heading), std::sin(b.heading)}, Vec2{-std::sin(b.heading), std::cos(b.heading)}};
  for (const Vec2& axis : axes) {
    double amin = std::numeric_limits<double>::infinity(), amax = -amin;
    double bmin = amin, bmax = -amin;
    for (int i = 0; i < 4; ++i) {
      const double pa = dot(ca[i], axis);
      const double pb = dot(cb[i], axis);
      amin = std::min(amin, pa);
      amax = std::max(amax, pa);
      bmin = std::min(bmin, pb);
      bmax = std::max(bmax, pb);
    }
    if (amax < bmin || bmax < amin) return false;
  }
  return true;
}

namespace {

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double u = std::clamp(dot(p - a, ab) / dot(ab, ab), 0.0, 1.0);
  return distance(p, a + u * ab);
}

double vertex_to_edges(const std::array<Vec2, 4>& verts, const std::array<Vec2, 4>& poly) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec2& v : verts) {
    for (int i = 0; i < 4; ++i) best = std::min(best, point_segment_distance(v, poly[i], poly[(i + 1) % 4]));
  }
  return best;
}

}  // namespace

double min_clearance(const FootprintOBB& a, const FootprintOBB& b) {
  if (obb_intersect(a, b)) return 0.0;
  const auto ca = a.corners();
  const auto cb = b.corners();
  return std::min(vertex_to_edges(ca, cb), vertex_to_edges(cb, ca));
}

Outcome classify_outcome(std::span<const double> trace, double near_miss_threshold) {
  if (trace.empty()) throw EmptyTrace("clearance trace is empty");
  const double m = *std::min_element(trace.begin(), trace.end());
  if (m == 0.0) return {OutcomeKind::Collision, 0.0};
  if (m < near_miss_threshold) return {OutcomeKind::NearMiss, m};
  return {OutcomeKind::Pass, m};
}

Agent::Agent(VehicleState initial, WaypointPath path, double mass_kg)
    : state_(initial), path_(std::move(path)), max_accel_(vehicle::max_accel_for_mass(mass_kg)) {}

Agent::Longitudinal Agent::plan() const {
  Longitudinal out{0.0, phase_, latch_};
  const double s = path_.project(state_.position());
  switch (phase_) {
    case Phase::Cruise:
      if (path_.stop()) {
        const double dist_to_stop = path_.stop()->arc_length - s;
        if (dist_to_stop <= stopping_margin(state_.speed, path_.brake_decel())) {
          out.phase = Phase::StopApproach;
          out.accel = -path_.brake_decel();
          return out;
        }
      }
      break;
    case Phase::StopApproach:
      out.accel = -path_.brake_decel();
      return out;
    case Phase::Dwell:
      out.accel = 0.0;
      return out;
    case Phase::Released:
      break;
  }
  const double dist_to_end = std::max(0.0, path_.total_length() - s);
  out.accel = longitudinal_accel(state_, path_, dist_to_end, out.latch, max_accel_);
  return out;
}

ControlCommand Agent::command() const {
  return {plan().accel,
          pure_pursuit_steer(state_, path_, vehicle::lookahead_for_speed(state_.speed))};
}

void Agent::step(double dt) {
  const Longitudinal lon = plan();
  const double steer = pure_pursuit_steer(state_, path_, vehicle::lookahead_for_speed(state_.speed));
  state_ = step_kinematic(state_, lon.accel, steer, dt);
  phase_ = lon.phase;
  latch_ = lon.latch;
  if (phase_ == Phase::StopApproach && state_.speed == 0.0) {
    phase_ = Phase::Dwell;
    dwell_elapsed_ = 0.0;
  } else if (phase_ == Phase::Dwell) {
    dwell_elapsed_ += dt;
    if (dwell_elapsed_ >= path_.stop()->dwell_s - 1e-9) phase_ = Phase::Released;
  }
}

}  // namespace crashforge
