#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "crashforge/render.hpp"
#include "crashforge/sampling.hpp"
#include "crashforge/scenario.hpp"
#include "crashforge/vehicle.hpp"

namespace crashforge {

struct RunConfig {
  static constexpr double kDt = vehicle::kTimestep;

  int frame_rate_hz = 5;
  double near_miss_threshold_m = vehicle::kNearMissThreshold;
  bool exclude_post_contact = true;
  /// Empty means plain round-robin. Templates missing from a non-empty map
  /// get weight 1.
  std::map<std::string, double> scenario_weights;
  std::string render_profile = "default";

  double dt_s() const { return kDt; }
  /// Physics steps between recorded frames.
  int frame_stride() const;
  void validate() const;

  static RunConfig from_text(std::string_view text, std::string_view origin = "<text>");
  static RunConfig load(const std::filesystem::path& path);
  std::string to_text() const;
};

struct Frame {
  double t = 0.0;
  std::string image_path;
  double steering_label_deg = 0.0;
  double speed_mps = 0.0;
  bool contact_flag = false;

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct EpisodeRecord {
  std::uint64_t episode_id = 0;
  std::string scenario_id;
  std::uint64_t master_seed = 0;
  std::uint64_t episode_index = 0;
  ParameterSample params;
  Outcome outcome;
  std::vector<Frame> frames;

  friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

/// A simulated episode with its rendered frames (empty when rendering was
/// disabled). Frame image paths are left for the caller to assign.
struct EpisodeResult {
  EpisodeRecord record;
  std::vector<Image> images;
  std::vector<double> clearance_trace;
};

/// Simulates both agents for the setup's duration at RunConfig::kDt,
/// evaluating clearance every step and recording (and rendering) a frame
/// every frame_stride() steps. The rng is consumed by rendering only.
EpisodeResult run_episode(const EpisodeSetup& setup, const ParameterSample& params,
                          const RunConfig& config, RngStream& rng, bool render = true);

/// Episode `index` of a dataset: stream derive_stream(master_seed, index)
/// feeds parameter sampling, instantiation and rendering in that order.
/// Sets ids and image paths.
EpisodeResult simulate_episode(const ScenarioCatalog& catalog, const ScenarioTemplate& tmpl,
                               std::uint64_t master_seed, std::uint64_t index, const SamplingConfig& sampling,
                               const RunConfig& run, bool render = true);

/// Stable identifier for (master_seed, episode_index).
std::uint64_t episode_id_for(std::uint64_t master_seed, std::uint64_t episode_index);

struct ScenarioStats {
  std::size_t episodes = 0;
  std::size_t collisions = 0;
  std::size_t near_misses = 0;
  std::size_t passes = 0;

  double contact_rate() const;
  double near_miss_rate() const;
};

struct StatsSummary {
  ScenarioStats overall;
  std::map<std::string, ScenarioStats> per_scenario;

  std::string to_table() const;
};

struct FrameRow {
  std::uint64_t episode_id = 0;
  int frame_index = 0;
  double t_s = 0.0;
  std::string image_path;
  double steering_deg = 0.0;
  double speed_mps = 0.0;
  bool contact = false;
};

struct EpisodeRow {
  std::uint64_t episode_id = 0;
  std::string scenario_id;
  std::uint64_t episode_index = 0;
  OutcomeKind outcome = OutcomeKind::Pass;
  double min_clearance_m = 0.0;
  ParameterSample params;
};

/// In-memory view of a dataset directory's frames.csv and episodes.csv.
/// Image paths are relative to `root`.
struct DatasetManifest {
  std::filesystem::path root;
  std::vector<FrameRow> frames;
  std::vector<EpisodeRow> episodes;
};

inline constexpr std::string_view kFramesHeader =
    "episode_id,frame_index,t_s,image_path,steering_deg,speed_mps,contact";
inline constexpr std::string_view kEpisodesHeader =
    "episode_id,scenario_id,episode_index,outcome,min_clearance_m,mass_kg,speed_mps,fog_density,"
    "brake_decel,lane_change_m,vertical_offset_m";

/// Formats with 6 significant digits ("%.6g"); negative zero prints as 0.
std::string format_decimal(double v);

std::vector<FrameRow> parse_frames_csv(std::string_view text, std::string_view origin);
std::vector<EpisodeRow> parse_episodes_csv(std::string_view text, std::string_view origin);
std::string frames_csv(const std::vector<FrameRow>& rows);
std::string episodes_csv(const std::vector<EpisodeRow>& rows);

/// Loads a dataset directory. Throws IoError if `_SUCCESS` is missing.
DatasetManifest load_manifest(const std::filesystem::path& dir);

/// Loads frame rows from a frames-format CSV file, or from <dir>/frames.csv
/// when given a directory. Image paths resolve against the CSV's directory.
DatasetManifest load_frames(const std::filesystem::path& path);

struct GenerateOptions {
  std::vector<std::string> scenario_ids;  // empty = all eligible
  bool include_rear_end = false;
  int workers = 1;
};

struct GenerateResult {
  std::size_t episodes = 0;
  std::size_t frames = 0;
  StatsSummary stats;
};

/// Template for each episode index: smooth weighted round-robin over the
/// eligible templates (plain round-robin when no weights are configured).
std::vector<std::string> assign_templates(const std::vector<ScenarioTemplate>& eligible,
                                          const std::map<std::string, double>& weights,
                                          std::size_t n_episodes);

/// Writes images/, frames.csv, episodes.csv, stats.csv and finally
/// _SUCCESS into out_dir. Output bytes depend only on the inputs, never on
/// the worker count.
GenerateResult generate_dataset(const ScenarioCatalog& catalog, std::size_t n_episodes,
                                std::uint64_t master_seed, const SamplingConfig& sampling,
                                const RunConfig& run, const std::filesystem::path& out_dir,
                                const GenerateOptions& options = {});

/// Throws EmptyManifest for an empty episode table.
StatsSummary collision_stats(const std::vector<EpisodeRow>& episodes);
StatsSummary collision_stats(const DatasetManifest& manifest);

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct DatasetSplits {
  DatasetManifest train;
  DatasetManifest val;
  DatasetManifest test;
};

/// Largest-remainder episode counts for the three ratios.
std::array<std::size_t, 3> split_counts(std::size_t n_episodes, const SplitRatios& ratios);

/// Splits by episode (never by frame), shuffling episodes with a stream
/// derived from seed. Frames flagged with contact are dropped when
/// exclude_post_contact is set.
DatasetSplits split_dataset(const DatasetManifest& manifest, const SplitRatios& ratios,
                            std::uint64_t seed, bool exclude_post_contact = true);

/// Writes train.csv, val.csv and test.csv (frames format) into dir.
void write_splits(const DatasetSplits& splits, const std::filesystem::path& dir);

}  // namespace crashforge
