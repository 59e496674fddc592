#pragma once

#include <string>
#include <string_view>

namespace crashforge {

enum class Environment { Highway, Intersection };
enum class TrafficControl { None, Signal, StopSign };

std::string_view to_string(Environment env);
std::string_view to_string(TrafficControl control);

/// Declarative description of one pre-crash scenario. Behavior ids name
/// entries in the catalog's waypoint-generator registry.
struct ScenarioTemplate {
  std::string id;
  std::string name;
  Environment environment = Environment::Highway;
  std::string ego_behavior;
  std::string adversary_behavior;
  bool uses_lane_change_params = false;
  bool in_default_dataset = true;
  TrafficControl traffic_control = TrafficControl::None;

  friend bool operator==(const ScenarioTemplate&, const ScenarioTemplate&) = default;
};

}  // namespace crashforge
