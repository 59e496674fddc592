#include "crashforge/sampling.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include "crashforge/errors.hpp"
#include "crashforge/kvconfig.hpp"

namespace crashforge {
namespace {

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Stable prefix table shared by from_text and to_text.
std::vector<std::pair<std::string, DistributionSpec SamplingConfig::*>> spec_fields() {
  return {
      {"mass", &SamplingConfig::mass},
      {"speed.highway", &SamplingConfig::speed_highway},
      {"speed.intersection", &SamplingConfig::speed_intersection},
      {"fog", &SamplingConfig::fog},
      {"brake", &SamplingConfig::brake},
      {"lane_change", &SamplingConfig::lane_change},
      {"vertical_offset", &SamplingConfig::vertical_offset},
  };
}

DistributionSpec gaussian(double mean, double std, double lower, double upper) {
  return {DistributionKind::GaussianTruncated, mean, std, lower, upper};
}

}  // namespace

std::string_view to_string(Environment env) {
  return env == Environment::Highway ? "Highway" : "Intersection";
}

std::string_view to_string(TrafficControl control) {
  switch (control) {
    case TrafficControl::None: return "None";
    case TrafficControl::Signal: return "Signal";
    case TrafficControl::StopSign: return "StopSign";
  }
  return "?";
}

void DistributionSpec::validate(std::string_view name) const {
  const std::string n(name);
  if (!(std::isfinite(mean) && std::isfinite(std) && std::isfinite(lower) && std::isfinite(upper))) {
    throw ConfigError(n + ": distribution parameters must be finite");
  }
  if (std < 0.0) throw ConfigError(n + ": std must be >= 0");
  if (!(lower < upper)) throw ConfigError(n + ": lower bound must be below upper bound");
}

bool satisfies_invariants(const ParameterSample& p) {
  return p.mass_kg >= 800.0 && p.mass_kg <= 2500.0 && p.speed_mps > 0.0 &&
         p.adversary_speed_mps > 0.0 && p.brake_decel_mps2 >= 2.0 && p.brake_decel_mps2 <= 9.0 &&
         p.fog_density_per_m >= 0.0 && p.fog_density_per_m <= 0.05 &&
         p.lane_change_distance_m >= 10.0 && p.vertical_offset_m > 0.0;
}

SamplingConfig SamplingConfig::defaults() {
  SamplingConfig c;
  c.mass = gaussian(1500.0, 250.0, 800.0, 2500.0);
  c.speed_highway = gaussian(25.0, 3.0, 10.0, 40.0);
  c.speed_intersection = gaussian(12.5, 2.5, 4.0, 20.0);
  c.fog = {DistributionKind::HalfNormal, 0.0, 0.02, 0.0, 0.05};
  c.brake = gaussian(6.0, 1.0, 2.0, 9.0);
  c.lane_change = gaussian(30.0, 8.0, 10.0, 80.0);
  // Mean offset is one lane width: center of one lane to the center of the next.
  c.vertical_offset = gaussian(3.5, 0.5, 1.5, 5.5);
  return c;
}

SamplingConfig SamplingConfig::from_text(std::string_view text, std::string_view origin) {
  const KeyValueFile kv = KeyValueFile::parse(text, origin);
  SamplingConfig c = defaults();
  std::size_t consumed = 0;
  for (const auto& [prefix, member] : spec_fields()) {
    DistributionSpec& spec = c.*member;
    for (auto [suffix, field] : {std::pair{".mean", &DistributionSpec::mean},
                                 std::pair{".std", &DistributionSpec::std},
                                 std::pair{".lower", &DistributionSpec::lower},
                                 std::pair{".upper", &DistributionSpec::upper}}) {
      const std::string key = prefix + suffix;
      if (kv.contains(key)) {
        spec.*field = kv.number(key);
        ++consumed;
      }
    }
  }
  if (consumed != kv.entries().size()) {
    for (const auto& [key, value] : kv.entries()) {
      bool known = false;
      for (const auto& [prefix, member] : spec_fields()) {
        for (const char* suffix : {".mean", ".std", ".lower", ".upper"}) {
          known = known || key == prefix + suffix;
        }
      }
      if (!known) throw ConfigError(std::string(origin) + ": unknown sampling key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

SamplingConfig SamplingConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open sampling config: " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return from_text(text.str(), path.string());
}

std::string SamplingConfig::to_text() const {
  std::ostringstream out;
  for (const auto& [prefix, member] : spec_fields()) {
    const DistributionSpec& spec = this->*member;
    out << prefix << ".mean = " << shortest(spec.mean) << '\n';
    out << prefix << ".std = " << shortest(spec.std) << '\n';
    out << prefix << ".lower = " << shortest(spec.lower) << '\n';
    out << prefix << ".upper = " << shortest(spec.upper) << '\n';
  }
  return out.str();
}

const DistributionSpec& SamplingConfig::speed_for(Environment env) const {
  return env == Environment::Highway ? speed_highway : speed_intersection;
}

void SamplingConfig::validate() const {
  for (const auto& [prefix, member] : spec_fields()) (this->*member).validate(prefix);
  if (fog.mean < 0.0 || fog.upper > 0.05) throw ConfigError("fog: density must stay within [0, 0.05] per m");
}

double sample_gaussian_truncated(const DistributionSpec& spec, RngStream& rng) {
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    const double v = spec.mean + spec.std * rng.standard_normal();
    if (v >= spec.lower && v <= spec.upper) return v;
  }
  throw NonConvergent("truncated Gaussian rejected " + std::to_string(kMaxRejections) +
                      " consecutive draws (mean " + shortest(spec.mean) + ", std " +
                      shortest(spec.std) + ", bounds [" + shortest(spec.lower) + ", " +
                      shortest(spec.upper) + "])");
}

double sample_half_normal(const DistributionSpec& spec, RngStream& rng) {
  const double v = spec.mean + std::abs(spec.std * rng.standard_normal());
  return std::clamp(v, spec.mean, spec.upper);
}

double sample(const DistributionSpec& spec, RngStream& rng) {
  return spec.kind == DistributionKind::HalfNormal ? sample_half_normal(spec, rng)
                                                   : sample_gaussian_truncated(spec, rng);
}

ParameterSample sample_parameters(const ScenarioTemplate& tmpl, const SamplingConfig& config,
                                  RngStream& rng) {
  const DistributionSpec& speed = config.speed_for(tmpl.environment);
  ParameterSample p;
  p.mass_kg = sample(config.mass, rng);
  p.speed_mps = sample(speed, rng);
  p.fog_density_per_m = sample(config.fog, rng);
  p.brake_decel_mps2 = sample(config.brake, rng);
  p.lane_change_distance_m = sample(config.lane_change, rng);
  p.vertical_offset_m = sample(config.vertical_offset, rng);
  p.adversary_speed_mps = sample(speed, rng);
  return p;
}

}  // namespace crashforge
