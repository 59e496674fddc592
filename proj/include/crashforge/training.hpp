#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crashforge/dataset.hpp"
#include "crashforge/network.hpp"

namespace crashforge {

/// Decoded frames and labels held in memory for training or evaluation.
struct FrameSet {
  int width = 200;
  int height = 66;
  std::vector<std::uint8_t> pixels;  // size() images, row-major, back to back
  std::vector<FrameRow> rows;

  std::size_t size() const { return rows.size(); }
  std::span<const std::uint8_t> image(std::size_t i) const {
    const std::size_t n = static_cast<std::size_t>(width) * height;
    return {pixels.data() + i * n, n};
  }
  double label(std::size_t i) const { return rows[i].steering_deg / kSteeringScaleDeg; }

  /// Reads every frame's PGM relative to manifest.root. Throws ShapeMismatch
  /// for images of the wrong size.
  static FrameSet load(const DatasetManifest& manifest);
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 30;
  std::uint64_t seed = 1;
  std::optional<std::filesystem::path> init_checkpoint;  // Xavier when empty
  double accuracy_tolerance_deg = 1.5;

  void validate() const;
};

struct EpochMetrics {
  int epoch = 0;  // 0 holds the metrics of the initial weights
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

struct TrainResult {
  Weights<float> final_weights;
  Weights<float> best_weights;
  int best_epoch = 0;
  std::vector<EpochMetrics> metrics;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Mini-batch SGD on mean squared error of normalized steering. Each epoch
/// visits the training frames in an order shuffled by a stream derived from
/// (seed, epoch). `initial` overrides both Xavier and config.init_checkpoint.
TrainResult train(const FrameSet& train_set, const FrameSet& val_set, const TrainConfig& config,
                  const Weights<float>* initial = nullptr, const EpochCallback& on_epoch = {});

/// "epoch,train_loss,val_loss,val_acc", six significant digits.
std::string metrics_csv(const std::vector<EpochMetrics>& metrics);

/// Writes final.cfw, best.cfw and metrics.csv into dir.
void write_training_outputs(const TrainResult& result, const std::filesystem::path& dir);

struct Evaluation {
  double mean_abs_deviation_deg = 0.0;
  double mse = 0.0;       // normalized units
  double accuracy = 0.0;  // fraction within the tolerance band
  std::vector<double> predictions_deg;
  std::vector<double> deviations_deg;
};

/// Throws EmptyTestSet.
Evaluation evaluate(const Weights<float>& weights, const FrameSet& test_set, double tolerance_deg = 1.5);

/// "episode_id,frame_index,label_deg,pred_deg,abs_dev_deg"
std::string deviations_csv(const FrameSet& test_set, const Evaluation& evaluation);

/// Train/val/test frames of one dataset directory, split by episode.
struct StageData {
  FrameSet train;
  FrameSet val;
  FrameSet test;

  static StageData from_directory(const std::filesystem::path& dir, const SplitRatios& ratios = {},
                                  std::uint64_t split_seed = 0, bool exclude_post_contact = true);
};

struct TransferConfig {
  TrainConfig train;
  int seeds = 5;
  std::optional<double> threshold;  // default: the Xavier arm's final val loss
};

struct TransferArm {
  std::vector<EpochMetrics> metrics;
  std::optional<int> epochs_to_threshold;
  double test_deviation_deg = 0.0;
};

struct TransferSeed {
  std::uint64_t seed = 0;
  double threshold = 0.0;
  TransferArm xavier;
  TransferArm transfer;

  bool transfer_faster() const;
  bool transfer_not_worse() const;
  /// (xavier - transfer) / xavier deviation, as a percentage.
  double improvement_pct() const;
};

struct TransferReport {
  TrainConfig config;
  std::size_t stage1_train_frames = 0, stage1_val_frames = 0;
  std::size_t stage2_train_frames = 0, stage2_val_frames = 0, stage2_test_frames = 0;
  std::vector<EpochMetrics> stage1;
  std::vector<TransferSeed> seeds;

  int faster_count() const;
  int not_worse_count() const;
  double mean_improvement_pct() const;
  std::string to_text() const;
};

/// First epoch whose validation loss is at or below threshold.
std::optional<int> epochs_to_threshold(const std::vector<EpochMetrics>& metrics, double threshold);

/// Gradient check of the standard network in 64-bit at Xavier weights with
/// small random biases, on rendered dash-cam frames with random labels.
GradCheckReport gradient_check(std::uint64_t seed, std::size_t probes = 240, double h = 1e-3);

inline constexpr double kReferenceImprovementPct = 31.31;

/// Trains stage 1 once, then for each seed trains stage 2 from Xavier and
/// from the stage-1 weights with identical hyper-parameters and shuffling.
/// Throws ConfigError if the stages share an episode.
TransferReport transfer_experiment(const StageData& stage1, const StageData& stage2,
                                   const TransferConfig& config,
                                   const std::function<void(const std::string&)>& log = {});

}  // namespace crashforge
