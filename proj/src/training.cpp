#include "crashforge/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "crashforge/checkpoint.hpp"
#include "crashforge/errors.hpp"

namespace fs = std::filesystem;

namespace crashforge {
namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) throw IoError("failed to write " + path.string());
}

std::vector<double> predict(Network<float>& net, const Weights<float>& weights, const FrameSet& set) {
  std::vector<double> out(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) out[i] = net.forward(weights, set.image(i));
  return out;
}

struct SetScore {
  double mse = 0.0;
  double accuracy = 0.0;
};

SetScore score(const std::vector<double>& pred, const FrameSet& set, double tolerance_deg) {
  SetScore s;
  std::size_t within = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const double d = pred[i] - set.label(i);
    s.mse += d * d;
    if (std::abs(d) * kSteeringScaleDeg <= tolerance_deg) ++within;
  }
  s.mse /= static_cast<double>(set.size());
  s.accuracy = static_cast<double>(within) / static_cast<double>(set.size());
  if (!std::isfinite(s.mse)) throw NonFiniteLoss("loss is not finite (training diverged)");
  return s;
}

}  // namespace

FrameSet FrameSet::load(const DatasetManifest& manifest) {
  FrameSet set;
  set.rows = manifest.frames;
  const std::size_t n = static_cast<std::size_t>(set.width) * set.height;
  set.pixels.resize(set.rows.size() * n);
  for (std::size_t i = 0; i < set.rows.size(); ++i) {
    const fs::path path = manifest.root / set.rows[i].image_path;
    const Image img = read_pgm(path);
    if (img.width != set.width || img.height != set.height) {
      throw ShapeMismatch(path.string() + ": expected 200x66 image, got " + std::to_string(img.width) + "x" +
                          std::to_string(img.height));
    }
    std::copy(img.pixels.begin(), img.pixels.end(), set.pixels.begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  return set;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be finite and >= 0");
  }
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(accuracy_tolerance_deg >= 0.0)) throw ConfigError("accuracy tolerance must be >= 0");
}

TrainResult train(const FrameSet& train_set, const FrameSet& val_set, const TrainConfig& config,
                  const Weights<float>* initial, const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.size() == 0) throw EmptyManifest("training set is empty");
  if (val_set.size() == 0) throw EmptyManifest("validation set is empty");

  const NetworkSpec spec = NetworkSpec::standard();
  Weights<float> weights;
  if (initial) {
    weights = *initial;
  } else if (config.init_checkpoint) {
    weights = load_checkpoint(*config.init_checkpoint, spec);
  } else {
    RngStream rng = derive_stream(config.seed, 0);
    weights = xavier_init<float>(spec, rng);
  }

  Network<float> net(spec);
  TrainResult result;
  auto record = [&](int epoch, double train_loss) {
    const SetScore v = score(predict(net, weights, val_set), val_set, config.accuracy_tolerance_deg);
    const EpochMetrics m{epoch, train_loss, v.mse, v.accuracy};
    result.metrics.push_back(m);
    if (epoch == 0 || m.val_loss < result.metrics[result.best_epoch].val_loss) {
      result.best_epoch = epoch;
      result.best_weights = weights;
    }
    if (on_epoch) on_epoch(m);
  };
  record(0, score(predict(net, weights, train_set), train_set, config.accuracy_tolerance_deg).mse);

  std::vector<std::size_t> order(train_set.size());
  std::vector<Sample> batch;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    RngStream rng = derive_stream(config.seed, static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.bounded(i)]);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      batch.clear();
      for (std::size_t k = start; k < end; ++k) {
        batch.push_back({train_set.image(order[k]), train_set.label(order[k])});
      }
      BatchResult br;
      try {
        br = backward_batch(net, weights, batch);
      } catch (const NonFiniteLoss&) {
        throw NonFiniteLoss("non-finite loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                            std::to_string(start) + " (lower the learning rate)");
      }
      loss_sum += br.loss * static_cast<double>(end - start);
      sgd_step(weights, br.grads, config.learning_rate);
    }
    record(epoch, loss_sum / static_cast<double>(order.size()));
  }
  result.final_weights = std::move(weights);
  return result;
}

std::string metrics_csv(const std::vector<EpochMetrics>& metrics) {
  std::string out = "epoch,train_loss,val_loss,val_acc\n";
  for (const auto& m : metrics) {
    out += std::to_string(m.epoch) + ',' + format_decimal(m.train_loss) + ',' + format_decimal(m.val_loss) + ',' +
           format_decimal(m.val_acc) + '\n';
  }
  return out;
}

void write_training_outputs(const TrainResult& result, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  save_checkpoint(dir / "final.cfw", result.final_weights);
  save_checkpoint(dir / "best.cfw", result.best_weights);
  write_text(dir / "metrics.csv", metrics_csv(result.metrics));
}

Evaluation evaluate(const Weights<float>& weights, const FrameSet& test_set, double tolerance_deg) {
  if (test_set.size() == 0) throw EmptyTestSet("test set has no frames");
  Network<float> net(weights.spec);
  const std::vector<double> pred = predict(net, weights, test_set);
  const SetScore s = score(pred, test_set, tolerance_deg);
  Evaluation e;
  e.mse = s.mse;
  e.accuracy = s.accuracy;
  double sum = 0.0;
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    const double dev = std::abs(kSteeringScaleDeg * (pred[i] - test_set.label(i)));
    e.predictions_deg.push_back(kSteeringScaleDeg * pred[i]);
    e.deviations_deg.push_back(dev);
    sum += dev;
  }
  e.mean_abs_deviation_deg = sum / static_cast<double>(test_set.size());
  return e;
}

std::string deviations_csv(const FrameSet& test_set, const Evaluation& evaluation) {
  std::string out = "episode_id,frame_index,label_deg,pred_deg,abs_dev_deg\n";
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    const FrameRow& r = test_set.rows[i];
    out += std::to_string(r.episode_id) + ',' + std::to_string(r.frame_index) + ',' +
           format_decimal(r.steering_deg) + ',' + format_decimal(evaluation.predictions_deg[i]) + ',' +
           format_decimal(evaluation.deviations_deg[i]) + '\n';
  }
  return out;
}

StageData StageData::from_directory(const fs::path& dir, const SplitRatios& ratios, std::uint64_t split_seed,
                                    bool exclude_post_contact) {
  const DatasetManifest m = load_manifest(dir);
  const DatasetSplits s = split_dataset(m, ratios, split_seed, exclude_post_contact);
  return {FrameSet::load(s.train), FrameSet::load(s.val), FrameSet::load(s.test)};
}

std::optional<int> epochs_to_threshold(const std::vector<EpochMetrics>& metrics, double threshold) {
  for (const auto& m : metrics) {
    if (m.val_loss <= threshold) return m.epoch;
  }
  return std::nullopt;
}

bool TransferSeed::transfer_faster() const {
  if (!transfer.epochs_to_threshold) return false;
  return !xavier.epochs_to_threshold || *transfer.epochs_to_threshold < *xavier.epochs_to_threshold;
}

bool TransferSeed::transfer_not_worse() const { return transfer.test_deviation_deg <= xavier.test_deviation_deg; }

double TransferSeed::improvement_pct() const {
  if (xavier.test_deviation_deg == 0.0) return 0.0;
  return 100.0 * (xavier.test_deviation_deg - transfer.test_deviation_deg) / xavier.test_deviation_deg;
}

int TransferReport::faster_count() const {
  return static_cast<int>(std::count_if(seeds.begin(), seeds.end(), [](const auto& s) { return s.transfer_faster(); }));
}

int TransferReport::not_worse_count() const {
  return static_cast<int>(
      std::count_if(seeds.begin(), seeds.end(), [](const auto& s) { return s.transfer_not_worse(); }));
}

double TransferReport::mean_improvement_pct() const {
  if (seeds.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : seeds) sum += s.improvement_pct();
  return sum / static_cast<double>(seeds.size());
}

std::string TransferReport::to_text() const {
  auto ett = [](const std::optional<int>& e) { return e ? std::to_string(*e) : std::string("never"); };
  std::ostringstream out;
  out << "# transfer experiment\n";
  out << "learning_rate=" << format_decimal(config.learning_rate) << " batch_size=" << config.batch_size
      << " epochs=" << config.epochs << " base_seed=" << config.seed << '\n';
  out << "stage1_frames train=" << stage1_train_frames << " val=" << stage1_val_frames << '\n';
  out << "stage2_frames train=" << stage2_train_frames << " val=" << stage2_val_frames
      << " test=" << stage2_test_frames << '\n';
  out << "\n# stage 1 curve\n" << metrics_csv(stage1);
  out << "\n# per seed\n";
  out << "seed,threshold,xavier_epochs_to_threshold,transfer_epochs_to_threshold,xavier_test_dev_deg,"
         "transfer_test_dev_deg,improvement_pct\n";
  for (const auto& s : seeds) {
    out << s.seed << ',' << format_decimal(s.threshold) << ',' << ett(s.xavier.epochs_to_threshold) << ','
        << ett(s.transfer.epochs_to_threshold) << ',' << format_decimal(s.xavier.test_deviation_deg) << ','
        << format_decimal(s.transfer.test_deviation_deg) << ',' << format_decimal(s.improvement_pct()) << '\n';
  }
  out << "\n# stage 2 curves\n";
  out << "seed,arm,epoch,train_loss,val_loss,val_acc\n";
  for (const auto& s : seeds) {
    for (const auto* arm : {&s.xavier, &s.transfer}) {
      const char* name = arm == &s.xavier ? "xavier" : "transfer";
      for (const auto& m : arm->metrics) {
        out << s.seed << ',' << name << ',' << m.epoch << ',' << format_decimal(m.train_loss) << ','
            << format_decimal(m.val_loss) << ',' << format_decimal(m.val_acc) << '\n';
      }
    }
  }
  out << "\n# summary\n";
  out << "transfer_reaches_threshold_first " << faster_count() << '/' << seeds.size() << '\n';
  out << "transfer_deviation_not_worse " << not_worse_count() << '/' << seeds.size() << '\n';
  out << "mean_deviation_improvement_pct " << format_decimal(mean_improvement_pct())
      << " (reference figure " << format_decimal(kReferenceImprovementPct) << ")\n";
  return out.str();
}

GradCheckReport gradient_check(std::uint64_t seed, std::size_t probes, double h) {
  const NetworkSpec spec = NetworkSpec::standard();
  RngStream rng = derive_stream(seed, 0);
  Weights<double> weights = xavier_init<double>(spec, rng);
  for (auto& b : weights.b) {
    for (double& x : b) x = 0.1 * (2.0 * rng.uniform() - 1.0);
  }

  const ScenarioCatalog& catalog = ScenarioCatalog::standard();
  std::vector<Image> frames;
  for (const char* id : {"RunningRedLight", "ChangingLanesSameDirection"}) {
    const ScenarioTemplate& tmpl = catalog.find(id);
    RngStream episode_rng = derive_stream(seed, frames.size() + 1);
    const ParameterSample params = sample_parameters(tmpl, SamplingConfig::defaults(), episode_rng);
    const EpisodeSetup setup = catalog.instantiate(tmpl, params, episode_rng);
    EpisodeResult r = run_episode(setup, params, RunConfig{}, episode_rng, true);
    frames.push_back(std::move(r.images[r.images.size() / 4]));
  }
  std::vector<Sample> samples;
  for (const Image& img : frames) samples.push_back({img.pixels, 2.0 * rng.uniform() - 1.0});
  return gradient_check(weights, samples, rng, probes, h);
}

TransferReport transfer_experiment(const StageData& stage1, const StageData& stage2, const TransferConfig& config,
                                   const std::function<void(const std::string&)>& log) {
  config.train.validate();
  if (config.seeds < 1) throw ConfigError("transfer experiment needs at least one seed");
  std::set<std::uint64_t> stage1_episodes;
  for (const FrameSet* s : {&stage1.train, &stage1.val}) {
    for (const auto& r : s->rows) stage1_episodes.insert(r.episode_id);
  }
  for (const FrameSet* s : {&stage2.train, &stage2.val, &stage2.test}) {
    for (const auto& r : s->rows) {
      if (stage1_episodes.count(r.episode_id)) {
        throw ConfigError("stage 1 and stage 2 share episode " + std::to_string(r.episode_id));
      }
    }
  }
  auto note = [&](const std::string& msg) {
    if (log) log(msg);
  };

  TransferReport report;
  report.config = config.train;
  report.stage1_train_frames = stage1.train.size();
  report.stage1_val_frames = stage1.val.size();
  report.stage2_train_frames = stage2.train.size();
  report.stage2_val_frames = stage2.val.size();
  report.stage2_test_frames = stage2.test.size();

  TrainConfig base = config.train;
  base.init_checkpoint.reset();
  note("stage 1: " + std::to_string(stage1.train.size()) + " training frames");
  const TrainResult s1 = train(stage1.train, stage1.val, base, nullptr, [&](const EpochMetrics& m) {
    note("stage 1 epoch " + std::to_string(m.epoch) + " val_loss " + format_decimal(m.val_loss));
  });
  report.stage1 = s1.metrics;

  for (int i = 1; i <= config.seeds; ++i) {
    TrainConfig arm = base;
    arm.seed = base.seed + static_cast<std::uint64_t>(i);
    TransferSeed seed;
    seed.seed = arm.seed;

    note("seed " + std::to_string(arm.seed) + ": xavier arm");
    const TrainResult x = train(stage2.train, stage2.val, arm);
    note("seed " + std::to_string(arm.seed) + ": transfer arm");
    const TrainResult t = train(stage2.train, stage2.val, arm, &s1.final_weights);

    seed.threshold = config.threshold ? *config.threshold : x.metrics.back().val_loss;
    seed.xavier.metrics = x.metrics;
    seed.transfer.metrics = t.metrics;
    seed.xavier.epochs_to_threshold = epochs_to_threshold(x.metrics, seed.threshold);
    seed.transfer.epochs_to_threshold = epochs_to_threshold(t.metrics, seed.threshold);
    seed.xavier.test_deviation_deg = evaluate(x.final_weights, stage2.test, arm.accuracy_tolerance_deg).mean_abs_deviation_deg;
    seed.transfer.test_deviation_deg =
        evaluate(t.final_weights, stage2.test, arm.accuracy_tolerance_deg).mean_abs_deviation_deg;
    report.seeds.push_back(std::move(seed));
  }
  return report;
}

}  // namespace crashforge
