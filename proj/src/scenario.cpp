#include "crashforge/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "crashforge/errors.hpp"

namespace crashforge {
namespace {

using std::numbers::pi;

constexpr double kHalfLane = road::kLaneWidth / 2;

// Ego initial-pose perturbation: gives the steering labels a recovery
// component instead of a constant zero.
constexpr double kEgoLateralStd = 0.5;
constexpr double kEgoLateralMax = 1.0;
constexpr double kEgoHeadingStd = 0.1;
constexpr double kEgoHeadingMax = 0.25;
constexpr double kEgoMergeDistance = 5.0;

// Highway adversary placement relative to the ego and where maneuvers begin,
// as travel distance from the adversary's start.
constexpr double kLaneChangeLead = 12.0;
constexpr double kLaneChangeStart = 25.0;
constexpr double kDriftStart = 10.0;
constexpr double kDriftLengthFactor = 3.0;
constexpr double kOncomingStart = 280.0;
constexpr double kOvertakeStart = 60.0;
constexpr double kOvertakeHold = 20.0;
constexpr double kOncomingDriftStart = 80.0;
constexpr double kLeadGap = 30.0;

// Stop line sits this far before the edge of the intersection box.
constexpr double kStopLineSetback = 1.0;
constexpr double kStopDwell = 1.0;

double clamped_normal(RngStream& rng, double std, double limit) {
  return std::clamp(std * rng.standard_normal(), -limit, limit);
}

VehicleState make_state(Vec2 p, double heading, double speed) {
  return VehicleState{p.x, p.y, heading, speed, 0.0};
}

void append_line(std::vector<Vec2>& pts, Vec2 to, double spacing = 1.0) {
  const Vec2 from = pts.back();
  const double len = distance(from, to);
  const int n = std::max(1, static_cast<int>(std::ceil(len / spacing - 1e-9)));
  for (int i = 1; i <= n; ++i) pts.push_back(from + (static_cast<double>(i) / n) * (to - from));
}

// Arc around center from angle a0 to a1 (counterclockwise if a1 > a0).
void append_arc(std::vector<Vec2>& pts, Vec2 center, double radius, double a0, double a1,
                double spacing = 0.5) {
  const int n = std::max(2, static_cast<int>(std::ceil(std::abs(a1 - a0) * radius / spacing)));
  for (int i = 1; i <= n; ++i) {
    const double a = a0 + (a1 - a0) * static_cast<double>(i) / n;
    pts.push_back(center + radius * Vec2{std::cos(a), std::sin(a)});
  }
}

double turn_radius(const RuleContext& ctx) {
  return std::get<IntersectionGeometry>(ctx.road).lane_width + 2.0;
}

// --- ego rules ----------------------------------------------------------------

AgentPlan ego_highway_lane(const RuleContext& ctx) {
  const auto& hw = std::get<HighwayGeometry>(ctx.road);
  const double lane_y = -hw.lane_width / 2;
  const double dy = clamped_normal(ctx.rng, kEgoLateralStd, kEgoLateralMax);
  const double dh = clamped_normal(ctx.rng, kEgoHeadingStd, kEgoHeadingMax);
  const Vec2 start{road::kHighwayEgoStart, lane_y + dy};
  std::vector<Vec2> pts{start, {start.x + kEgoMergeDistance, lane_y}};
  append_line(pts, {hw.length, lane_y});
  return {make_state(start, dh, ctx.params.speed_mps),
          WaypointPath(std::move(pts), ctx.params.speed_mps, ctx.params.brake_decel_mps2)};
}

AgentPlan ego_intersection_straight(const RuleContext& ctx) {
  const auto& ix = std::get<IntersectionGeometry>(ctx.road);
  const double lane_y = -ix.lane_width / 2;
  const double dy = clamped_normal(ctx.rng, kEgoLateralStd, kEgoLateralMax);
  const double dh = clamped_normal(ctx.rng, kEgoHeadingStd, kEgoHeadingMax);
  // Keep the straight-line distance to the center equal to the adversary's.
  const double radius = std::hypot(road::kIntersectionStart, lane_y);
  const double y = lane_y + dy;
  const Vec2 start{-std::sqrt(radius * radius - y * y), y};
  std::vector<Vec2> pts{start, {start.x + kEgoMergeDistance, lane_y}};
  append_line(pts, {ix.arm_length, lane_y});

  std::optional<StopPoint> stop;
  if (ctx.tmpl.traffic_control == TrafficControl::StopSign) {
    const double stop_x = -ix.lane_width - kStopLineSetback - vehicle::kLength / 2;
    const WaypointPath probe(pts, ctx.params.speed_mps, ctx.params.brake_decel_mps2);
    stop = StopPoint{probe.project({stop_x, lane_y}), kStopDwell};
  }
  return {make_state(start, dh, ctx.params.speed_mps),
          WaypointPath(std::move(pts), ctx.params.speed_mps, ctx.params.brake_decel_mps2, stop)};
}

// --- intersection adversary rules -------------------------------------------

// Adversary start on an arm: `dir` is the unit travel direction toward the
// center, lane offset to the right of travel.
AgentPlan straight_through(const RuleContext& ctx, Vec2 dir) {
  const auto& ix = std::get<IntersectionGeometry>(ctx.road);
  const Vec2 right{dir.y, -dir.x};
  const Vec2 start = (-road::kIntersectionStart) * dir + (ix.lane_width / 2) * right;
  const Vec2 end = ix.arm_length * dir + (ix.lane_width / 2) * right;
  std::vector<Vec2> pts{start};
  append_line(pts, end);
  const double v = ctx.params.adversary_speed_mps;
  return {make_state(start, std::atan2(dir.y, dir.x), v),
          WaypointPath(std::move(pts), v, ctx.params.brake_decel_mps2)};
}

AgentPlan cross_from_south(const RuleContext& ctx) { return straight_through(ctx, {0.0, 1.0}); }
AgentPlan cross_from_north(const RuleContext& ctx) { return straight_through(ctx, {0.0, -1.0}); }

// South arm, northbound, clockwise quarter turn into the eastbound ego lane.
AgentPlan right_turn_from_south(const RuleContext& ctx) {
  const auto& ix = std::get<IntersectionGeometry>(ctx.road);
  const double r = turn_radius(ctx);
  const Vec2 start{kHalfLane, -road::kIntersectionStart};
  const Vec2 center{kHalfLane + r, -kHalfLane - r};
  std::vector<Vec2> pts{start};
  append_line(pts, {kHalfLane, -kHalfLane - r});
  append_arc(pts, center, r, pi, pi / 2);
  append_line(pts, {ix.arm_length, -kHalfLane});
  const double v = ctx.params.adversary_speed_mps;
  return {make_state(start, pi / 2, v), WaypointPath(std::move(pts), v, ctx.params.brake_decel_mps2)};
}

// North arm, southbound, counterclockwise quarter turn into the eastbound ego
// lane, crossing the westbound lane.
AgentPlan left_turn_from_north(const RuleContext& ctx) {
  const auto& ix = std::get<IntersectionGeometry>(ctx.road);
  const double r = turn_radius(ctx);
  const Vec2 start{-kHalfLane, road::kIntersectionStart};
  const Vec2 center{-kHalfLane + r, -kHalfLane + r};
  std::vector<Vec2> pts{start};
  append_line(pts, {-kHalfLane, -kHalfLane + r});
  append_arc(pts, center, r, pi, 1.5 * pi);
  append_line(pts, {ix.arm_length, -kHalfLane});
  const double v = ctx.params.adversary_speed_mps;
  return {make_state(start, -pi / 2, v), WaypointPath(std::move(pts), v, ctx.params.brake_decel_mps2)};
}

// East arm, westbound, counterclockwise quarter turn onto the south arm:
// left turn across the ego's path from the opposite direction.
AgentPlan left_turn_from_east(const RuleContext& ctx) {
  const auto& ix = std::get<IntersectionGeometry>(ctx.road);
  const double r = turn_radius(ctx);
  const Vec2 start{road::kIntersectionStart, kHalfLane};
  const Vec2 center{-kHalfLane + r, kHalfLane - r};
  std::vector<Vec2> pts{start};
  append_line(pts, {-kHalfLane + r, kHalfLane});
  append_arc(pts, center, r, pi / 2, pi);
  append_line(pts, {-kHalfLane, -ix.arm_length});
  const double v = ctx.params.adversary_speed_mps;
  return {make_state(start, pi, v), WaypointPath(std::move(pts), v, ctx.params.brake_decel_mps2)};
}

// --- highway adversary rules ------------------------------------------------

AgentPlan highway_shift(const RuleContext& ctx, Vec2 start, double direction,
                        std::vector<LateralTransition> transitions) {
  const auto& hw = std::get<HighwayGeometry>(ctx.road);
  const double travel = direction > 0 ? hw.length - start.x : start.x;
  const double v = ctx.params.adversary_speed_mps;
  return {make_state(start, direction > 0 ? 0.0 : pi, v),
          WaypointPath(lateral_shift_polyline(start, direction, travel, transitions), v,
                       ctx.params.brake_decel_mps2)};
}

AgentPlan lane_change(const RuleContext& ctx) {
  const Vec2 start{road::kHighwayEgoStart + kLaneChangeLead, kHalfLane};
  return highway_shift(ctx, start, 1.0,
                       {{kLaneChangeStart, ctx.params.lane_change_distance_m,
                         -ctx.params.vertical_offset_m}});
}

AgentPlan drift(const RuleContext& ctx) {
  const Vec2 start{road::kHighwayEgoStart + kLaneChangeLead, kHalfLane};
  return highway_shift(ctx, start, 1.0,
                       {{kDriftStart, kDriftLengthFactor * ctx.params.lane_change_distance_m,
                         -ctx.params.vertical_offset_m}});
}

AgentPlan oncoming_overtake(const RuleContext& ctx) {
  const double d = ctx.params.lane_change_distance_m;
  const double off = ctx.params.vertical_offset_m;
  const Vec2 start{kOncomingStart, kHalfLane};
  return highway_shift(ctx, start, -1.0,
                       {{kOvertakeStart, d, -off}, {kOvertakeStart + d + kOvertakeHold, d, off}});
}

AgentPlan oncoming_drift(const RuleContext& ctx) {
  const Vec2 start{kOncomingStart, kHalfLane};
  return highway_shift(ctx, start, -1.0,
                       {{kOncomingDriftStart, ctx.params.lane_change_distance_m,
                         -ctx.params.vertical_offset_m}});
}

AgentPlan lead_vehicle(const RuleContext& ctx, double initial_speed, double target_speed,
                       double path_length) {
  const auto& hw = std::get<HighwayGeometry>(ctx.road);
  const Vec2 start{road::kHighwayEgoStart + kLeadGap, -kHalfLane};
  std::vector<Vec2> pts{start};
  append_line(pts, {std::min(hw.length, start.x + path_length), -kHalfLane});
  return {make_state(start, 0.0, initial_speed),
          WaypointPath(std::move(pts), target_speed, ctx.params.brake_decel_mps2)};
}

AgentPlan lead_accelerating(const RuleContext& ctx) {
  return lead_vehicle(ctx, 0.3 * ctx.params.speed_mps, ctx.params.adversary_speed_mps,
                      road::kHighwayLength);
}

AgentPlan lead_slower(const RuleContext& ctx) {
  const double v = 0.5 * ctx.params.speed_mps;
  return lead_vehicle(ctx, v, v, road::kHighwayLength);
}

AgentPlan lead_decelerating(const RuleContext& ctx) {
  // Path ends just past the lead's stopping distance, so it brakes at the
  // sampled deceleration almost immediately.
  const double v = ctx.params.speed_mps;
  return lead_vehicle(ctx, v, v, stopping_margin(v, ctx.params.brake_decel_mps2) + 10.0);
}

std::map<std::string, BehaviorRule, std::less<>> builtin_rules() {
  return {
      {"ego.highway_lane", ego_highway_lane},
      {"ego.intersection_straight", ego_intersection_straight},
      {"adv.cross_from_south", cross_from_south},
      {"adv.cross_from_north", cross_from_north},
      {"adv.right_turn_from_south", right_turn_from_south},
      {"adv.left_turn_from_north", left_turn_from_north},
      {"adv.left_turn_from_east", left_turn_from_east},
      {"adv.lane_change", lane_change},
      {"adv.drift", drift},
      {"adv.oncoming_overtake", oncoming_overtake},
      {"adv.oncoming_drift", oncoming_drift},
      {"lead.accelerating", lead_accelerating},
      {"lead.slower", lead_slower},
      {"lead.decelerating", lead_decelerating},
  };
}

ScenarioTemplate intersection(std::string id, std::string name, std::string adversary,
                              TrafficControl control) {
  return {std::move(id), std::move(name), Environment::Intersection, "ego.intersection_straight",
          std::move(adversary), false, true, control};
}

ScenarioTemplate highway(std::string id, std::string name, std::string adversary,
                         bool lane_change_params, bool in_default) {
  return {std::move(id), std::move(name), Environment::Highway, "ego.highway_lane",
          std::move(adversary), lane_change_params, in_default, TrafficControl::None};
}

bool opposite_direction(const ScenarioTemplate& t) {
  return t.adversary_behavior == "adv.oncoming_overtake" ||
         t.adversary_behavior == "adv.oncoming_drift";
}

}  // namespace

std::vector<Vec2> lateral_shift_polyline(Vec2 start, double direction_sign, double travel_length,
                                         const std::vector<LateralTransition>& transitions) {
  std::vector<double> stations;
  for (double d = 0.0; d < travel_length; d += 1.0) stations.push_back(d);
  stations.push_back(travel_length);
  for (const auto& t : transitions) {
    stations.push_back(t.start);
    stations.push_back(t.start + t.length);
  }
  std::sort(stations.begin(), stations.end());
  std::vector<double> unique;
  for (double d : stations) {
    if (d < 0.0 || d > travel_length) continue;
    if (unique.empty() || d - unique.back() > 1e-6) unique.push_back(d);
  }

  std::vector<Vec2> pts;
  pts.reserve(unique.size());
  for (double d : unique) {
    double lateral = start.y;
    for (const auto& t : transitions) {
      const double u = (d - t.start) / t.length;
      if (u >= 1.0) {
        lateral += t.delta;
      } else if (u > 0.0) {
        lateral += t.delta * 0.5 * (1.0 - std::cos(pi * u));
      }
    }
    pts.push_back({start.x + direction_sign * d, lateral});
  }
  return pts;
}

std::vector<ScenarioTemplate> builtin_templates() {
  using TC = TrafficControl;
  return {
      intersection("RunningRedLight", "Running Red Light", "adv.cross_from_south", TC::Signal),
      intersection("RunningStopSign", "Running Stop Sign", "adv.cross_from_south", TC::StopSign),
      intersection("TurningSameDirection", "Turning/Same Direction", "adv.right_turn_from_south",
                   TC::None),
      highway("ChangingLanesSameDirection", "Changing Lanes/Same Direction", "adv.lane_change", true,
              true),
      highway("DriftingSameDirection", "Drifting/Same Direction", "adv.drift", true, true),
      highway("OppositeDirectionManeuver", "Opposite Direction/Maneuver", "adv.oncoming_overtake",
              true, true),
      highway("OppositeDirectionNoManeuver", "Opposite Direction/No Maneuver",
              "adv.oncoming_drift", true, true),
      highway("RearEndLeadAccelerating", "Rear-End/Lead Vehicle Accelerating",
              "lead.accelerating", false, false),
      highway("RearEndLeadSlower", "Rear-End/Lead Vehicle Moving Slower", "lead.slower", false,
              false),
      highway("RearEndLeadDecelerating", "Rear-End/Lead Vehicle Decelerating",
              "lead.decelerating", false, false),
      intersection("LtapOdAtSignal", "LTAP/OD at Signal", "adv.left_turn_from_east", TC::Signal),
      intersection("TurnRightAtSignal", "Turn Right at Signal", "adv.right_turn_from_south",
                   TC::Signal),
      intersection("LtapOdAtNonSignal", "LTAP/OD at Non-Signal", "adv.left_turn_from_east",
                   TC::None),
      intersection("StraightCrossingPathAtNonSignal", "Straight Crossing Path at Non-Signal",
                   "adv.cross_from_north", TC::None),
      intersection("TurnAtNonSignal", "Turn at Non-Signal", "adv.left_turn_from_north", TC::None),
  };
}

ScenarioCatalog::ScenarioCatalog() : ScenarioCatalog(builtin_templates()) {}

ScenarioCatalog::ScenarioCatalog(std::vector<ScenarioTemplate> templates)
    : templates_(std::move(templates)), rules_(builtin_rules()) {}

const ScenarioCatalog& ScenarioCatalog::standard() {
  static const ScenarioCatalog catalog;
  return catalog;
}

const ScenarioTemplate& ScenarioCatalog::find(std::string_view id) const {
  for (const auto& t : templates_) {
    if (t.id == id) return t;
  }
  throw UnknownScenario("unknown scenario id '" + std::string(id) + "'");
}

std::vector<ScenarioTemplate> ScenarioCatalog::dataset_templates(bool include_rear_end) const {
  std::vector<ScenarioTemplate> out;
  for (const auto& t : templates_) {
    if (t.in_default_dataset || include_rear_end) out.push_back(t);
  }
  return out;
}

EpisodeSetup ScenarioCatalog::instantiate(const ScenarioTemplate& tmpl,
                                          const ParameterSample& params, RngStream& rng) const {
  const auto ego_rule = rules_.find(tmpl.ego_behavior);
  if (ego_rule == rules_.end()) {
    throw UnknownBehaviorRule("template '" + tmpl.id + "' references unregistered rule '" +
                              tmpl.ego_behavior + "'");
  }
  const auto adv_rule = rules_.find(tmpl.adversary_behavior);
  if (adv_rule == rules_.end()) {
    throw UnknownBehaviorRule("template '" + tmpl.id + "' references unregistered rule '" +
                              tmpl.adversary_behavior + "'");
  }

  RoadGeometry geometry;
  if (tmpl.environment == Environment::Highway) {
    geometry = HighwayGeometry{2, road::kLaneWidth, road::kHighwayLength, opposite_direction(tmpl)};
  } else {
    geometry = IntersectionGeometry{};
  }

  const RuleContext ctx{tmpl, params, geometry, rng};
  AgentPlan ego = ego_rule->second(ctx);
  AgentPlan adversary = adv_rule->second(ctx);
  return EpisodeSetup{tmpl.id,
                      ego.initial,
                      adversary.initial,
                      std::move(ego.path),
                      std::move(adversary.path),
                      geometry,
                      tmpl.traffic_control == TrafficControl::Signal ? SignalState::EgoGreenAdversaryRed
                                                                    : SignalState::NoSignal,
                      tmpl.traffic_control,
                      road::kEpisodeDuration};
}

std::vector<ScenarioTemplate> list_scenarios() { return ScenarioCatalog::standard().list_scenarios(); }

EpisodeSetup instantiate(const ScenarioTemplate& tmpl, const ParameterSample& params,
                         RngStream& rng) {
  return ScenarioCatalog::standard().instantiate(tmpl, params, rng);
}

}  // namespace crashforge
