#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "crashforge/rng.hpp"
#include "crashforge/sampling.hpp"
#include "crashforge/scenario_template.hpp"
#include "crashforge/vehicle.hpp"

namespace crashforge {

namespace road {
inline constexpr double kLaneWidth = 3.5;
inline constexpr double kHighwayLength = 300.0;
inline constexpr double kArmLength = 100.0;
inline constexpr double kIntersectionStart = 60.0;  // along-arm distance from center
inline constexpr double kTurnRadius = kLaneWidth + 2.0;
inline constexpr double kHighwayEgoStart = 20.0;
inline constexpr double kEpisodeDuration = 10.0;
}  // namespace road

/// Straight two-lane road along +x from x = 0 to x = length, centered on
/// y = 0. The ego lane is y in [-lane_width, 0].
struct HighwayGeometry {
  int lanes = 2;
  double lane_width = road::kLaneWidth;
  double length = road::kHighwayLength;
  bool opposite_direction = false;

  friend bool operator==(const HighwayGeometry&, const HighwayGeometry&) = default;
};

/// Four-way crossing of two two-lane roads along the x and y axes, centered
/// on the origin. Each arm extends arm_length from the center.
struct IntersectionGeometry {
  double arm_length = road::kArmLength;
  double lane_width = road::kLaneWidth;

  friend bool operator==(const IntersectionGeometry&, const IntersectionGeometry&) = default;
};

using RoadGeometry = std::variant<HighwayGeometry, IntersectionGeometry>;

enum class SignalState { NoSignal, EgoGreenAdversaryRed };

struct EpisodeSetup {
  std::string scenario_id;
  VehicleState ego_initial;
  VehicleState adversary_initial;
  WaypointPath ego_path;
  WaypointPath adversary_path;
  RoadGeometry road;
  SignalState signal_state = SignalState::NoSignal;
  TrafficControl traffic_control = TrafficControl::None;
  double duration_s = road::kEpisodeDuration;

  friend bool operator==(const EpisodeSetup&, const EpisodeSetup&) = default;
};

/// What a behavior rule emits for one agent.
struct AgentPlan {
  VehicleState initial;
  WaypointPath path;
};

struct RuleContext {
  const ScenarioTemplate& tmpl;
  const ParameterSample& params;
  const RoadGeometry& road;
  RngStream& rng;
};

using BehaviorRule = std::function<AgentPlan(const RuleContext&)>;

/// Immutable after construction; instantiate() is reentrant.
class ScenarioCatalog {
 public:
  /// The fifteen built-in templates and their behavior rules.
  ScenarioCatalog();
  /// Built-in rules with a caller-supplied template list.
  explicit ScenarioCatalog(std::vector<ScenarioTemplate> templates);

  static const ScenarioCatalog& standard();

  /// Templates in table order; a fresh copy on each call.
  std::vector<ScenarioTemplate> list_scenarios() const { return templates_; }

  /// Throws UnknownScenario.
  const ScenarioTemplate& find(std::string_view id) const;

  /// Templates eligible for dataset generation, in table order.
  std::vector<ScenarioTemplate> dataset_templates(bool include_rear_end) const;

  /// Throws UnknownBehaviorRule if either behavior id is unregistered. The
  /// rng supplies the ego's initial pose perturbation.
  EpisodeSetup instantiate(const ScenarioTemplate& tmpl, const ParameterSample& params,
                           RngStream& rng) const;

  bool has_rule(const std::string& id) const { return rules_.contains(id); }

 private:
  std::vector<ScenarioTemplate> templates_;
  std::map<std::string, BehaviorRule, std::less<>> rules_;
};

std::vector<ScenarioTemplate> list_scenarios();
std::vector<ScenarioTemplate> builtin_templates();

EpisodeSetup instantiate(const ScenarioTemplate& tmpl, const ParameterSample& params,
                         RngStream& rng);

/// Polyline through points sampled at unit spacing along a straight travel
/// direction, with smooth (half-cosine) lateral transitions. Used by the
/// highway rules; exposed for tests.
struct LateralTransition {
  double start;   // travel distance where the shift begins
  double length;  // longitudinal distance over which it completes
  double delta;   // signed lateral displacement
};
std::vector<Vec2> lateral_shift_polyline(Vec2 start, double direction_sign, double travel_length,
                                         const std::vector<LateralTransition>& transitions);

}  // namespace crashforge
