#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "crashforge/checkpoint.hpp"
#include "crashforge/errors.hpp"
#include "crashforge/training.hpp"

using namespace crashforge;
namespace fs = std::filesystem;

namespace {

fs::path dataset(const std::string& name, std::size_t episodes, std::uint64_t seed, int hz,
                 const std::string& profile = "default") {
  const fs::path dir = fs::temp_directory_path() / ("crashforge_unit_" + name);
  RunConfig run;
  run.frame_rate_hz = hz;
  run.render_profile = profile;
  generate_dataset(ScenarioCatalog::standard(), episodes, seed, SamplingConfig::defaults(), run, dir);
  return dir;
}

FrameSet labelled(std::vector<double> labels_deg) {
  FrameSet s;
  s.pixels.assign(labels_deg.size() * 66 * 200, 128);
  for (std::size_t i = 0; i < labels_deg.size(); ++i) {
    FrameRow r;
    r.episode_id = 1;
    r.frame_index = static_cast<int>(i);
    r.steering_deg = labels_deg[i];
    s.rows.push_back(r);
  }
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("train config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.learning_rate = 0.0;
  CHECK_NOTHROW(c.validate());
  c.learning_rate = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("evaluation arithmetic") {
  const auto zero = Weights<float>::zeros(NetworkSpec::standard());
  const Evaluation e = evaluate(zero, labelled({10.0, -10.0}));
  CHECK(e.mean_abs_deviation_deg == doctest::Approx(10.0));
  CHECK(e.accuracy == 0.0);
  const Evaluation perfect = evaluate(zero, labelled({0.0, 0.0, 0.0}));
  CHECK(perfect.mean_abs_deviation_deg == 0.0);
  CHECK(perfect.accuracy == 1.0);
  CHECK(evaluate(zero, labelled({1.0, 2.0})).accuracy == 0.5);
  CHECK_THROWS_AS(evaluate(zero, labelled({})), EmptyTestSet);
  const std::string csv = deviations_csv(labelled({10.0}), e);
  CHECK(csv.rfind("episode_id,frame_index,label_deg,pred_deg,abs_dev_deg\n", 0) == 0);
}

TEST_CASE("epochs to threshold") {
  std::vector<EpochMetrics> m{{0, 1, 0.9, 0}, {1, 1, 0.5, 0}, {2, 1, 0.3, 0}};
  CHECK(epochs_to_threshold(m, 0.5) == 1);
  CHECK(epochs_to_threshold(m, 1.0) == 0);
  CHECK_FALSE(epochs_to_threshold(m, 0.1).has_value());
}

TEST_CASE("frame set loading") {
  const fs::path dir = dataset("small", 4, 5, 1);
  const DatasetManifest m = load_manifest(dir);
  const FrameSet s = FrameSet::load(m);
  CHECK(s.size() == 40);
  CHECK(s.pixels.size() == 40 * 66 * 200);
  CHECK(s.label(3) == m.frames[3].steering_deg / 30.0);
  const Image img = read_pgm(dir / m.frames[7].image_path);
  CHECK(std::equal(img.pixels.begin(), img.pixels.end(), s.image(7).begin()));

  const fs::path odd = fs::temp_directory_path() / "crashforge_unit_odd";
  fs::create_directories(odd / "images");
  write_pgm(odd / "images/x.pgm", Image(10, 10));
  DatasetManifest bad;
  bad.root = odd;
  bad.frames.push_back({1, 0, 0, "images/x.pgm", 0, 0, false});
  CHECK_THROWS_AS(FrameSet::load(bad), ShapeMismatch);
  fs::remove_all(odd);
}

TEST_CASE("zero learning rate leaves weights and loss unchanged") {
  const StageData d = StageData::from_directory(dataset("small", 4, 5, 1), {0.5, 0.25, 0.25});
  TrainConfig c;
  c.learning_rate = 0.0;
  c.epochs = 2;
  c.batch_size = 8;
  const TrainResult r = train(d.train, d.val, c);
  RngStream rng = derive_stream(c.seed, 0);
  CHECK(r.final_weights == xavier_init<float>(NetworkSpec::standard(), rng));
  REQUIRE(r.metrics.size() == 3);
  CHECK(r.metrics[1].train_loss == doctest::Approx(r.metrics[0].train_loss).epsilon(1e-6));
  CHECK(r.metrics[2].train_loss == doctest::Approx(r.metrics[0].train_loss).epsilon(1e-6));
  CHECK(r.metrics[2].val_loss == r.metrics[0].val_loss);
}

TEST_CASE("training is reproducible and writes its outputs") {
  const StageData d = StageData::from_directory(dataset("small", 4, 5, 1), {0.5, 0.25, 0.25});
  TrainConfig c;
  c.epochs = 2;
  c.batch_size = 8;
  const TrainResult a = train(d.train, d.val, c), b = train(d.train, d.val, c);
  CHECK(metrics_csv(a.metrics) == metrics_csv(b.metrics));
  CHECK(a.final_weights == b.final_weights);
  CHECK(metrics_csv(a.metrics).rfind("epoch,train_loss,val_loss,val_acc\n0,", 0) == 0);

  const fs::path out = fs::temp_directory_path() / "crashforge_unit_train_out";
  write_training_outputs(a, out);
  CHECK(load_checkpoint(out / "final.cfw") == a.final_weights);
  CHECK(load_checkpoint(out / "best.cfw") == a.best_weights);
  CHECK(slurp(out / "metrics.csv") == metrics_csv(a.metrics));

  // warm start from the checkpoint
  c.init_checkpoint = out / "final.cfw";
  c.epochs = 0;
  CHECK(train(d.train, d.val, c).final_weights == a.final_weights);
  fs::remove_all(out);
}

TEST_CASE("transfer experiment plumbing with frozen weights") {
  const StageData s1 = StageData::from_directory(dataset("small", 4, 5, 1), {0.5, 0.25, 0.25});
  const StageData s2 = StageData::from_directory(dataset("small_shifted", 4, 6, 1, "shifted"), {0.5, 0.25, 0.25});
  TransferConfig c;
  c.train.learning_rate = 0.0;
  c.train.epochs = 2;
  c.train.batch_size = 8;
  c.seeds = 2;
  const TransferReport a = transfer_experiment(s1, s2, c);
  REQUIRE(a.seeds.size() == 2);
  for (const auto& s : a.seeds) {
    for (const auto* arm : {&s.xavier, &s.transfer}) {
      for (const auto& m : arm->metrics) CHECK(m.val_loss == arm->metrics[0].val_loss);
    }
    // frozen transfer weights are stage-1's Xavier init, seeded differently
    CHECK(s.xavier.metrics[0].val_loss != s.transfer.metrics[0].val_loss);
  }
  CHECK(a.seeds[0].seed == c.train.seed + 1);
  CHECK(a.seeds[1].seed == c.train.seed + 2);
  CHECK(transfer_experiment(s1, s2, c).to_text() == a.to_text());
  CHECK(a.to_text().find("reference figure 31.31") != std::string::npos);
  CHECK_THROWS_AS(transfer_experiment(s1, s1, c), ConfigError);
}

TEST_CASE("stage-1 training makes progress") {
  // 2k frames, 30 epochs
  const StageData d = StageData::from_directory(dataset("progress", 40, 9, 5));
  TrainConfig c;
  const TrainResult r = train(d.train, d.val, c);
  CHECK(r.metrics.back().val_loss < r.metrics.front().val_loss);
}
