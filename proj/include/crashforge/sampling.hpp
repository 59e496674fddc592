#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "crashforge/rng.hpp"
#include "crashforge/scenario_template.hpp"

namespace crashforge {

enum class DistributionKind { GaussianTruncated, HalfNormal };

/// For HalfNormal, `mean` is the location floor and only `std` and `upper`
/// shape the draw; `lower` must still be below `upper`.
struct DistributionSpec {
  DistributionKind kind = DistributionKind::GaussianTruncated;
  double mean = 0.0;
  double std = 0.0;
  double lower = 0.0;
  double upper = 0.0;

  void validate(std::string_view name) const;
  friend bool operator==(const DistributionSpec&, const DistributionSpec&) = default;
};

/// One draw of the scenario parameters. The first six fields are drawn in
/// declaration order; adversary_speed_mps is drawn last so earlier fields
/// keep their stream positions.
struct ParameterSample {
  double mass_kg = 0.0;
  double speed_mps = 0.0;
  double fog_density_per_m = 0.0;
  double brake_decel_mps2 = 0.0;
  double lane_change_distance_m = 0.0;
  double vertical_offset_m = 0.0;
  double adversary_speed_mps = 0.0;

  friend bool operator==(const ParameterSample&, const ParameterSample&) = default;
};

/// Range checks that every emitted sample must pass under the shipped
/// defaults.
bool satisfies_invariants(const ParameterSample& p);

struct SamplingConfig {
  DistributionSpec mass;
  DistributionSpec speed_highway;
  DistributionSpec speed_intersection;
  DistributionSpec fog;
  DistributionSpec brake;
  DistributionSpec lane_change;
  DistributionSpec vertical_offset;

  static SamplingConfig defaults();
  /// Starts from defaults() and applies every key present; unknown keys are
  /// rejected.
  static SamplingConfig from_text(std::string_view text, std::string_view origin = "<text>");
  static SamplingConfig load(const std::filesystem::path& path);

  /// Round-trips through from_text().
  std::string to_text() const;
  const DistributionSpec& speed_for(Environment env) const;
  void validate() const;

  friend bool operator==(const SamplingConfig&, const SamplingConfig&) = default;
};

/// Box-Muller draws rejected until inside [lower, upper]; throws
/// NonConvergent after kMaxRejections consecutive misses.
double sample_gaussian_truncated(const DistributionSpec& spec, RngStream& rng);
inline constexpr int kMaxRejections = 1000;

/// mean + |N(0, std)|, clamped to [mean, upper].
double sample_half_normal(const DistributionSpec& spec, RngStream& rng);

double sample(const DistributionSpec& spec, RngStream& rng);

/// Draw order: mass, speed, fog, brake, lane-change distance, vertical
/// offset, adversary speed. Lane-change fields are drawn for intersection
/// templates too so the stream stays aligned.
ParameterSample sample_parameters(const ScenarioTemplate& tmpl, const SamplingConfig& config,
                                  RngStream& rng);

}  // namespace crashforge
