#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "crashforge/checkpoint.hpp"
#include "crashforge/dataset.hpp"
#include "crashforge/errors.hpp"
#include "crashforge/render.hpp"
#include "crashforge/sampling.hpp"
#include "crashforge/scenario.hpp"
#include "crashforge/training.hpp"

namespace fs = std::filesystem;

namespace crashforge {
namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << text;
  f.close();
  if (!f) throw IoError("failed to write " + path.string());
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.resize(width, ' ');
  return s;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

// Frames for training or evaluation from a dataset directory or a frames CSV;
// frames after first contact are dropped.
FrameSet load_training_frames(const fs::path& path) {
  DatasetManifest m = load_frames(path);
  std::erase_if(m.frames, [](const FrameRow& r) { return r.contact; });
  return FrameSet::load(m);
}

// --- subcommands ---------------------------------------------------------------

void scenarios_list(std::ostream& out) {
  out << pad("#", 4) << pad("id", 34) << pad("environment", 14) << pad("control", 10) << pad("default", 9)
      << "name\n";
  int n = 0;
  for (const auto& t : ScenarioCatalog::standard().list_scenarios()) {
    out << pad(std::to_string(++n), 4) << pad(t.id, 34) << pad(std::string(to_string(t.environment)), 14)
        << pad(std::string(to_string(t.traffic_control)), 10) << pad(t.in_default_dataset ? "yes" : "no", 9)
        << t.name << '\n';
  }
}

struct GenerateArgs {
  std::string scenarios = "all";
  std::size_t episodes = 0;
  std::uint64_t seed = 0;
  std::string out;
  bool include_rear_end = false;
  int frame_rate = 5;
  std::string sampling_config;
  std::string run_config;
  std::string render_profile;
  int workers = 1;
};

void generate(const GenerateArgs& a, std::ostream& out) {
  const SamplingConfig sampling =
      a.sampling_config.empty() ? SamplingConfig::defaults() : SamplingConfig::load(a.sampling_config);
  RunConfig run = a.run_config.empty() ? RunConfig{} : RunConfig::load(a.run_config);
  run.frame_rate_hz = a.frame_rate;
  if (!a.render_profile.empty()) run.render_profile = a.render_profile;
  run.validate();

  GenerateOptions opts;
  opts.include_rear_end = a.include_rear_end;
  opts.workers = a.workers;
  if (a.scenarios != "all") opts.scenario_ids = split_list(a.scenarios);
  const GenerateResult r =
      generate_dataset(ScenarioCatalog::standard(), a.episodes, a.seed, sampling, run, a.out, opts);
  out << "wrote " << r.episodes << " episodes, " << r.frames << " frames to " << a.out << '\n';
  out << "collision " << r.stats.overall.collisions << ", near-miss " << r.stats.overall.near_misses
      << ", pass " << r.stats.overall.passes << " (contact rate " << fixed(100.0 * r.stats.overall.contact_rate(), 2)
      << "%)\n";
}

void stats(const std::string& dir, std::ostream& out) {
  const DatasetManifest m = load_manifest(dir);
  out << collision_stats(m).to_table();
}

void split(const std::string& dir, const std::string& ratios_text, std::uint64_t seed, bool keep_contact,
           std::ostream& out) {
  const auto parts = split_list(ratios_text);
  if (parts.size() != 3) throw UsageError("--ratios needs three comma-separated values");
  SplitRatios ratios;
  try {
    ratios = {std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2])};
  } catch (const std::exception&) {
    throw UsageError("--ratios values must be numbers");
  }
  const DatasetManifest m = load_manifest(dir);
  const DatasetSplits s = split_dataset(m, ratios, seed, !keep_contact);
  write_splits(s, dir);
  out << "train " << s.train.episodes.size() << " episodes / " << s.train.frames.size() << " frames\n";
  out << "val   " << s.val.episodes.size() << " episodes / " << s.val.frames.size() << " frames\n";
  out << "test  " << s.test.episodes.size() << " episodes / " << s.test.frames.size() << " frames\n";
}

void render_preview(const std::string& id, std::uint64_t seed, const std::string& path,
                    const std::string& profile, std::ostream& out) {
  const ScenarioCatalog& catalog = ScenarioCatalog::standard();
  const ScenarioTemplate& tmpl = catalog.find(id);
  RngStream rng = derive_stream(seed, 0);
  const ParameterSample params = sample_parameters(tmpl, SamplingConfig::defaults(), rng);
  const EpisodeSetup setup = catalog.instantiate(tmpl, params, rng);
  RunConfig run;
  run.render_profile = profile;
  const EpisodeResult r = run_episode(setup, params, run, rng, true);
  const std::size_t frame = static_cast<std::size_t>(5 * run.frame_rate_hz);
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  write_pgm(path, r.images.at(frame));
  out << "wrote t=5s frame of " << id << " (" << to_string(r.record.outcome.kind) << ") to " << path << '\n';
}

struct TrainArgs {
  std::string data, val, init = "xavier", out;
  double lr = 1e-3;
  int batch = 32, epochs = 30;
  std::uint64_t seed = 1;
};

void train_cmd(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  TrainConfig cfg;
  cfg.learning_rate = a.lr;
  cfg.batch_size = a.batch;
  cfg.epochs = a.epochs;
  cfg.seed = a.seed;
  if (a.init.rfind("ckpt:", 0) == 0) {
    cfg.init_checkpoint = a.init.substr(5);
  } else if (a.init != "xavier") {
    throw UsageError("--init must be xavier or ckpt:PATH");
  }
  cfg.validate();
  const FrameSet train_set = load_training_frames(a.data);
  const FrameSet val_set = load_training_frames(a.val);
  const TrainResult r = train(train_set, val_set, cfg, nullptr, [&](const EpochMetrics& m) {
    err << "epoch " << m.epoch << " train_loss " << format_decimal(m.train_loss) << " val_loss "
        << format_decimal(m.val_loss) << " val_acc " << format_decimal(m.val_acc) << '\n';
  });
  write_training_outputs(r, a.out);
  out << "trained " << a.epochs << " epochs on " << train_set.size() << " frames; best epoch " << r.best_epoch
      << "; wrote " << (fs::path(a.out) / "final.cfw").string() << ", best.cfw, metrics.csv\n";
}

void eval_cmd(const std::string& ckpt, const std::string& data, const std::string& csv, std::ostream& out) {
  const Weights<float> w = load_checkpoint(ckpt);
  const FrameSet test = load_training_frames(data);
  const Evaluation e = evaluate(w, test);
  write_file(csv, deviations_csv(test, e));
  out << "frames " << test.size() << " mean_abs_deviation_deg " << format_decimal(e.mean_abs_deviation_deg)
      << " mse " << format_decimal(e.mse) << " accuracy " << format_decimal(e.accuracy) << '\n';
}

void gradcheck_cmd(std::uint64_t seed, std::size_t probes, std::ostream& out) {
  const GradCheckReport r = gradient_check(seed, probes);
  out << "probes " << r.probes << " max_relative_error " << format_decimal(r.max_relative_error)
      << " kink_crossings " << r.kink_crossings << '\n';
  for (std::size_t i = 0; i < r.probes_per_layer.size(); ++i) {
    out << "  layer " << i << ": " << r.probes_per_layer[i] << " probes, max " << format_decimal(r.max_error_per_layer[i])
        << '\n';
  }
  out << (r.max_relative_error < 1e-3 ? "PASS" : "FAIL") << '\n';
  if (r.max_relative_error >= 1e-3) throw NonConvergent("gradient check exceeded relative error 1e-3");
}

struct TransferArgs {
  std::string stage1, stage2, out;
  int seeds = 5;
  double threshold = 0.0;
  bool has_threshold = false;
  double lr = 1e-3;
  int batch = 32, epochs = 30;
  std::uint64_t seed = 1, split_seed = 0;
};

void transfer_cmd(const TransferArgs& a, std::ostream& out, std::ostream& err) {
  TransferConfig cfg;
  cfg.train.learning_rate = a.lr;
  cfg.train.batch_size = a.batch;
  cfg.train.epochs = a.epochs;
  cfg.train.seed = a.seed;
  cfg.seeds = a.seeds;
  if (a.has_threshold) cfg.threshold = a.threshold;
  const StageData s1 = StageData::from_directory(a.stage1, {}, a.split_seed);
  const StageData s2 = StageData::from_directory(a.stage2, {}, a.split_seed);
  const TransferReport report = transfer_experiment(s1, s2, cfg, [&](const std::string& m) { err << m << '\n'; });
  write_file(a.out, report.to_text());
  out << "transfer reached the threshold first in " << report.faster_count() << '/' << report.seeds.size()
      << " seeds; deviation not worse in " << report.not_worse_count() << '/' << report.seeds.size()
      << "; report at " << a.out << '\n';
}

void config_show(std::ostream& out) {
  const TrainConfig t;
  const NetworkSpec spec = NetworkSpec::standard();
  const auto profile = [&](const char* name, const RenderProfile& p) {
    out << name << ".road = " << int(p.road) << '\n'
        << name << ".lane_marking = " << int(p.lane_marking) << '\n'
        << name << ".sky = " << int(p.sky) << '\n'
        << name << ".ground = " << int(p.ground) << '\n'
        << name << ".vehicle_body = " << int(p.vehicle_body) << '\n'
        << name << ".fog_color = " << int(p.fog_color) << '\n'
        << name << ".noise_std = " << format_decimal(p.noise_std) << '\n'
        << name << ".geometry_jitter = " << format_decimal(p.geometry_jitter) << '\n';
  };
  out << "# sampling (--sampling-config)\n" << SamplingConfig::defaults().to_text();
  out << "\n# run (--run-config)\n" << RunConfig{}.to_text();
  out << "\n# render profiles (--render-profile)\n";
  profile("default", RenderProfile::standard());
  profile("shifted", RenderProfile::shifted());
  const CameraModel cam;
  out << "\n# camera\nimage = " << cam.image_width << "x" << cam.image_height
      << "\nmount_height_m = " << format_decimal(cam.mount_height) << "\npitch_deg = 1.5\nhorizontal_fov_deg = 90\n";
  out << "\n# training\nlearning_rate = " << format_decimal(t.learning_rate) << "\nbatch_size = " << t.batch_size
      << "\nepochs = " << t.epochs << "\nseed = " << t.seed
      << "\naccuracy_tolerance_deg = " << format_decimal(t.accuracy_tolerance_deg) << '\n';
  out << "\n# network\nlayers = " << spec.describe() << "\nparameters = " << spec.parameter_count()
      << "\nspec_hash = " << spec.hash() << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pre-crash scenario dataset generator and steering transfer-learning harness", "crashforge"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  auto* scenarios = app.add_subcommand("scenarios", "Scenario catalog");
  scenarios->require_subcommand(1);
  auto* scenarios_list_cmd = scenarios->add_subcommand("list", "List the 15 pre-crash scenario templates");

  GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate", "Simulate and render a dataset");
  gen_cmd->add_option("--scenarios", gen.scenarios, "'all' or comma-separated scenario ids");
  gen_cmd->add_option("--episodes", gen.episodes, "Number of episodes (>= 1)")
      ->required()->default_str("")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Master seed")->required()->default_str("");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required()->default_str("");
  gen_cmd->add_flag("--include-rear-end", gen.include_rear_end, "Also use the three rear-end templates");
  gen_cmd->add_option("--frame-rate", gen.frame_rate, "Recorded frames per second (divides 50)")
      ->check(CLI::Range(1, 50));
  gen_cmd->add_option("--sampling-config", gen.sampling_config, "Parameter distribution file (key = value)")
      ->check(CLI::ExistingFile);
  gen_cmd->add_option("--run-config", gen.run_config, "Run config file (key = value)")->check(CLI::ExistingFile);
  gen_cmd->add_option("--render-profile", gen.render_profile, "default or shifted (overrides the run config)")
      ->check(CLI::IsMember({"default", "shifted"}));
  gen_cmd->add_option("--workers", gen.workers, "Parallel episode workers")
      ->envname("CRASHFORGE_WORKERS")
      ->check(CLI::Range(1, 256));

  std::string stats_dir;
  auto* stats_cmd = app.add_subcommand("stats", "Outcome statistics of a dataset");
  stats_cmd->add_option("dir", stats_dir, "Dataset directory")->required()->default_str("");

  std::string split_dir, split_ratios = "0.8,0.1,0.1";
  std::uint64_t split_seed = 0;
  bool keep_contact = false;
  auto* split_cmd = app.add_subcommand("split", "Write train/val/test frame lists split by episode");
  split_cmd->add_option("dir", split_dir, "Dataset directory")->required()->default_str("");
  split_cmd->add_option("--ratios", split_ratios, "train,val,test fractions");
  split_cmd->add_option("--seed", split_seed, "Shuffle seed");
  split_cmd->add_flag("--keep-post-contact", keep_contact, "Keep frames recorded after first contact");

  std::string preview_id, preview_out, preview_profile = "default";
  std::uint64_t preview_seed = 0;
  auto* preview_cmd = app.add_subcommand("render-preview", "Write the t = 5 s frame of one episode as PGM");
  preview_cmd->add_option("--scenario", preview_id, "Scenario id")->required()->default_str("");
  preview_cmd->add_option("--seed", preview_seed, "Episode seed");
  preview_cmd->add_option("--out", preview_out, "Output PGM path")->required()->default_str("");
  preview_cmd->add_option("--render-profile", preview_profile, "default or shifted")
      ->check(CLI::IsMember({"default", "shifted"}));

  TrainArgs tr;
  auto* train_sub = app.add_subcommand("train", "Train the steering network");
  train_sub->add_option("--data", tr.data, "Training frames: dataset directory or frames CSV")
      ->required()->default_str("");
  train_sub->add_option("--val", tr.val, "Validation frames: dataset directory or frames CSV")
      ->required()->default_str("");
  train_sub->add_option("--init", tr.init, "xavier or ckpt:PATH");
  train_sub->add_option("--lr", tr.lr, "SGD learning rate")->check(CLI::NonNegativeNumber);
  train_sub->add_option("--batch", tr.batch, "Mini-batch size")->check(CLI::PositiveNumber);
  train_sub->add_option("--epochs", tr.epochs, "Epochs")->check(CLI::NonNegativeNumber);
  train_sub->add_option("--seed", tr.seed, "Initialization and shuffling seed");
  train_sub->add_option("--out", tr.out, "Output directory for final.cfw, best.cfw, metrics.csv")
      ->required()->default_str("");

  std::string eval_ckpt, eval_data, eval_out = "deviations.csv";
  auto* eval_sub = app.add_subcommand("eval", "Mean absolute steering deviation of a checkpoint");
  eval_sub->add_option("--ckpt", eval_ckpt, "Checkpoint file")
      ->required()->default_str("")->check(CLI::ExistingFile);
  eval_sub->add_option("--data", eval_data, "Test frames: dataset directory or frames CSV")
      ->required()->default_str("");
  eval_sub->add_option("--out", eval_out, "Per-frame deviations CSV");

  std::uint64_t gc_seed = 0;
  std::size_t gc_probes = 240;
  auto* gc_sub = app.add_subcommand("gradcheck", "Finite-difference gradient check of the network");
  gc_sub->add_option("--seed", gc_seed, "Seed for weights, frames and probe choice");
  gc_sub->add_option("--probes", gc_probes, "Number of probed parameters")->check(CLI::PositiveNumber);

  TransferArgs tx;
  auto* tx_sub = app.add_subcommand("transfer-exp", "Compare Xavier and stage-1 initialization on stage 2");
  tx_sub->add_option("--stage1", tx.stage1, "Stage-1 dataset directory")->required()->default_str("");
  tx_sub->add_option("--stage2", tx.stage2, "Stage-2 (domain-shifted) dataset directory")
      ->required()->default_str("");
  tx_sub->add_option("--seeds", tx.seeds, "Stage-2 seeds")->check(CLI::PositiveNumber);
  auto* threshold_opt =
      tx_sub->add_option("--threshold", tx.threshold, "Validation loss threshold (default: Xavier final loss)")
          ->default_str("");
  tx_sub->add_option("--lr", tx.lr, "SGD learning rate")->check(CLI::NonNegativeNumber);
  tx_sub->add_option("--batch", tx.batch, "Mini-batch size")->check(CLI::PositiveNumber);
  tx_sub->add_option("--epochs", tx.epochs, "Epochs per arm")->check(CLI::NonNegativeNumber);
  tx_sub->add_option("--seed", tx.seed, "Stage-1 seed; stage-2 seeds follow it");
  tx_sub->add_option("--split-seed", tx.split_seed, "Episode split seed for both stages");
  tx_sub->add_option("--out", tx.out, "Report file")->required()->default_str("");

  auto* config = app.add_subcommand("config", "Built-in configuration");
  config->require_subcommand(1);
  auto* config_show_cmd = config->add_subcommand("show", "Print every default");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    // usage of the innermost subcommand that was reached
    const CLI::App* at = &app;
    for (bool deeper = true; deeper;) {
      deeper = false;
      for (const CLI::App* sub : at->get_subcommands()) {
        at = sub;
        deeper = true;
        break;
      }
    }
    err << "crashforge: " << e.what() << "\n\n" << at->help();
    return 1;
  }

  try {
    if (*scenarios_list_cmd) {
      scenarios_list(out);
    } else if (*gen_cmd) {
      generate(gen, out);
    } else if (*stats_cmd) {
      stats(stats_dir, out);
    } else if (*split_cmd) {
      split(split_dir, split_ratios, split_seed, keep_contact, out);
    } else if (*preview_cmd) {
      render_preview(preview_id, preview_seed, preview_out, preview_profile, out);
    } else if (*train_sub) {
      train_cmd(tr, out, err);
    } else if (*eval_sub) {
      eval_cmd(eval_ckpt, eval_data, eval_out, out);
    } else if (*gc_sub) {
      gradcheck_cmd(gc_seed, gc_probes, out);
    } else if (*tx_sub) {
      tx.has_threshold = threshold_opt->count() > 0;
      transfer_cmd(tx, out, err);
    } else if (*config_show_cmd) {
      config_show(out);
    }
  } catch (const UsageError& e) {
    err << "crashforge: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "crashforge: error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace crashforge
