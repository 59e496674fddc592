#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <filesystem>
#include <optional>

#include "crashforge/checkpoint.hpp"
#include "crashforge/dataset.hpp"
#include "crashforge/errors.hpp"
#include "crashforge/training.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace crashforge;

namespace {

py::dict params_dict(const ParameterSample& p) {
  py::dict d;
  d["mass_kg"] = p.mass_kg;
  d["speed_mps"] = p.speed_mps;
  d["fog_density_per_m"] = p.fog_density_per_m;
  d["brake_decel_mps2"] = p.brake_decel_mps2;
  d["lane_change_distance_m"] = p.lane_change_distance_m;
  d["vertical_offset_m"] = p.vertical_offset_m;
  d["adversary_speed_mps"] = p.adversary_speed_mps;
  return d;
}

py::dict stats_dict(const ScenarioStats& s) {
  py::dict d;
  d["episodes"] = s.episodes;
  d["collisions"] = s.collisions;
  d["near_misses"] = s.near_misses;
  d["passes"] = s.passes;
  d["contact_rate"] = s.contact_rate();
  d["near_miss_rate"] = s.near_miss_rate();
  return d;
}

py::dict summary_dict(const StatsSummary& s) {
  py::dict per;
  for (const auto& [id, st] : s.per_scenario) per[py::str(id)] = stats_dict(st);
  py::dict d;
  d["overall"] = stats_dict(s.overall);
  d["per_scenario"] = per;
  d["table"] = s.to_table();
  return d;
}

py::list metrics_list(const std::vector<EpochMetrics>& metrics) {
  py::list out;
  for (const auto& m : metrics) {
    py::dict d;
    d["epoch"] = m.epoch;
    d["train_loss"] = m.train_loss;
    d["val_loss"] = m.val_loss;
    d["val_acc"] = m.val_acc;
    out.append(d);
  }
  return out;
}

py::array_t<std::uint8_t> to_array(const Image& img) {
  py::array_t<std::uint8_t> a({img.height, img.width});
  std::copy(img.pixels.begin(), img.pixels.end(), a.mutable_data());
  return a;
}

using Tuple5 = std::tuple<double, double, double, double, double>;

FootprintOBB obb(Tuple5 t) {
  const auto [x, y, hl, hw, heading] = t;
  return {{x, y}, hl, hw, heading};
}

FrameSet training_frames(const fs::path& path) {
  DatasetManifest m = load_frames(path);
  std::erase_if(m.frames, [](const FrameRow& r) { return r.contact; });
  return FrameSet::load(m);
}

SamplingConfig sampling_from(const std::optional<fs::path>& path) {
  return path ? SamplingConfig::load(*path) : SamplingConfig::defaults();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Pre-crash scenario simulation, dash-cam rendering and steering-network training";

  static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
#define CF_EXC(T) py::register_exception<T>(m, #T, base.ptr())
  CF_EXC(ConfigError);
  CF_EXC(UnknownScenario);
  CF_EXC(UnknownBehaviorRule);
  CF_EXC(NonConvergent);
  CF_EXC(NonFinite);
  CF_EXC(EmptyTrace);
  CF_EXC(IoError);
  CF_EXC(ParseError);
  CF_EXC(EmptyManifest);
  CF_EXC(InsufficientEpisodes);
  CF_EXC(ShapeMismatch);
  CF_EXC(NonFiniteLoss);
  CF_EXC(ChecksumMismatch);
  CF_EXC(SpecHashMismatch);
  CF_EXC(EmptyTestSet);
#undef CF_EXC

  m.def("list_scenarios", [] {
    py::list out;
    for (const auto& t : ScenarioCatalog::standard().list_scenarios()) {
      py::dict d;
      d["id"] = t.id;
      d["name"] = t.name;
      d["environment"] = std::string(to_string(t.environment));
      d["traffic_control"] = std::string(to_string(t.traffic_control));
      d["ego_behavior"] = t.ego_behavior;
      d["adversary_behavior"] = t.adversary_behavior;
      d["in_default_dataset"] = t.in_default_dataset;
      out.append(d);
    }
    return out;
  });

  m.def(
      "rng_stream",
      [](std::uint64_t master_seed, std::uint64_t index, std::size_t n) {
        RngStream rng = derive_stream(master_seed, index);
        std::vector<std::uint64_t> out(n);
        for (auto& v : out) v = rng.next_u64();
        return out;
      },
      py::arg("master_seed"), py::arg("index"), py::arg("n") = 8, "First n 64-bit outputs of an episode stream.");

  m.def(
      "sample_parameters",
      [](const std::string& scenario, std::uint64_t master_seed, std::uint64_t index,
         const std::optional<fs::path>& sampling_config) {
        RngStream rng = derive_stream(master_seed, index);
        return params_dict(
            sample_parameters(ScenarioCatalog::standard().find(scenario), sampling_from(sampling_config), rng));
      },
      py::arg("scenario"), py::arg("master_seed"), py::arg("index") = 0, py::arg("sampling_config") = py::none());

  m.def(
      "simulate_episode",
      [](const std::string& scenario, std::uint64_t master_seed, std::uint64_t index, bool render, int frame_rate,
         const std::string& render_profile) {
        RunConfig run;
        run.frame_rate_hz = frame_rate;
        run.render_profile = render_profile;
        run.validate();
        const ScenarioCatalog& catalog = ScenarioCatalog::standard();
        EpisodeResult r = [&] {
          py::gil_scoped_release release;
          return simulate_episode(catalog, catalog.find(scenario), master_seed, index, SamplingConfig::defaults(),
                                  run, render);
        }();
        py::dict d;
        d["episode_id"] = r.record.episode_id;
        d["scenario_id"] = r.record.scenario_id;
        d["outcome"] = std::string(to_string(r.record.outcome.kind));
        d["min_clearance_m"] = r.record.outcome.min_clearance_m;
        d["params"] = params_dict(r.record.params);
        py::list frames;
        for (const Frame& f : r.record.frames) {
          py::dict fd;
          fd["t"] = f.t;
          fd["steering_deg"] = f.steering_label_deg;
          fd["speed_mps"] = f.speed_mps;
          fd["contact"] = f.contact_flag;
          frames.append(fd);
        }
        d["frames"] = frames;
        py::list images;
        for (const Image& img : r.images) images.append(to_array(img));
        d["images"] = images;
        return d;
      },
      py::arg("scenario"), py::arg("master_seed"), py::arg("index") = 0, py::arg("render") = false,
      py::arg("frame_rate") = 5, py::arg("render_profile") = "default");

  m.def(
      "generate",
      [](const fs::path& out, std::size_t episodes, std::uint64_t seed, std::vector<std::string> scenarios,
         bool include_rear_end, int frame_rate, const std::string& render_profile, int workers,
         const std::optional<fs::path>& sampling_config) {
        RunConfig run;
        run.frame_rate_hz = frame_rate;
        run.render_profile = render_profile;
        GenerateOptions opt;
        opt.scenario_ids = std::move(scenarios);
        opt.include_rear_end = include_rear_end;
        opt.workers = workers;
        const SamplingConfig sampling = sampling_from(sampling_config);
        GenerateResult r;
        {
          py::gil_scoped_release release;
          r = generate_dataset(ScenarioCatalog::standard(), episodes, seed, sampling, run, out, opt);
        }
        py::dict d;
        d["episodes"] = r.episodes;
        d["frames"] = r.frames;
        d["stats"] = summary_dict(r.stats);
        return d;
      },
      py::arg("out"), py::arg("episodes"), py::arg("seed"), py::arg("scenarios") = std::vector<std::string>{},
      py::arg("include_rear_end") = false, py::arg("frame_rate") = 5, py::arg("render_profile") = "default",
      py::arg("workers") = 1, py::arg("sampling_config") = py::none());

  m.def(
      "stats", [](const fs::path& dir) { return summary_dict(collision_stats(load_manifest(dir))); },
      py::arg("dataset"));

  m.def(
      "split",
      [](const fs::path& dir, std::tuple<double, double, double> ratios, std::uint64_t seed,
         bool keep_post_contact) {
        const auto [tr, va, te] = ratios;
        const DatasetSplits s = split_dataset(load_manifest(dir), {tr, va, te}, seed, !keep_post_contact);
        write_splits(s, dir);
        return std::make_tuple(s.train.frames.size(), s.val.frames.size(), s.test.frames.size());
      },
      py::arg("dataset"), py::arg("ratios") = std::make_tuple(0.8, 0.1, 0.1), py::arg("seed") = 0,
      py::arg("keep_post_contact") = false, "Writes train.csv, val.csv, test.csv; returns frame counts.");

  m.def(
      "render_preview",
      [](const std::string& scenario, std::uint64_t seed, const std::string& render_profile) {
        RunConfig run;
        run.render_profile = render_profile;
        const ScenarioCatalog& catalog = ScenarioCatalog::standard();
        const EpisodeResult r =
            simulate_episode(catalog, catalog.find(scenario), seed, 0, SamplingConfig::defaults(), run, true);
        return to_array(r.images.at(static_cast<std::size_t>(5 * run.frame_rate_hz)));
      },
      py::arg("scenario"), py::arg("seed") = 0, py::arg("render_profile") = "default",
      "The t = 5 s frame as a (66, 200) uint8 array.");

  m.def("apply_fog", &apply_fog, py::arg("intensity"), py::arg("depth"), py::arg("density"),
        py::arg("fog_color") = 200);

  m.def(
      "step_kinematic",
      [](Tuple5 s, double accel, double steer, double dt) {
        const auto [x, y, h, v, d] = s;
        const VehicleState n = step_kinematic({x, y, h, v, d}, accel, steer, dt);
        return std::make_tuple(n.x, n.y, n.heading, n.speed, n.steer);
      },
      py::arg("state"), py::arg("accel"), py::arg("steer"), py::arg("dt"),
      "state is (x, y, heading, speed, steer).");

  m.def(
      "obb_intersect", [](Tuple5 a, Tuple5 b) { return obb_intersect(obb(a), obb(b)); }, py::arg("a"), py::arg("b"),
      "Boxes are (cx, cy, half_length, half_width, heading).");
  m.def(
      "min_clearance",
      [](Tuple5 a, Tuple5 b) { return min_clearance(obb(a), obb(b)); },
      py::arg("a"), py::arg("b"));

  m.def("network_info", [] {
    const NetworkSpec spec = NetworkSpec::standard();
    py::dict d;
    d["parameters"] = spec.parameter_count();
    d["flatten_size"] = spec.flatten_size();
    d["spec_hash"] = spec.hash();
    d["description"] = spec.describe();
    return d;
  });

  m.def(
      "gradient_check",
      [](std::uint64_t seed, std::size_t probes) {
        GradCheckReport r;
        {
          py::gil_scoped_release release;
          r = gradient_check(seed, probes);
        }
        py::dict d;
        d["probes"] = r.probes;
        d["kink_crossings"] = r.kink_crossings;
        d["max_relative_error"] = r.max_relative_error;
        d["probes_per_layer"] = r.probes_per_layer;
        d["max_error_per_layer"] = r.max_error_per_layer;
        return d;
      },
      py::arg("seed") = 0, py::arg("probes") = 240);

  m.def(
      "train",
      [](const fs::path& data, const fs::path& val, const fs::path& out, double lr, int batch, int epochs,
         std::uint64_t seed, const std::optional<fs::path>& init_checkpoint) {
        TrainConfig cfg;
        cfg.learning_rate = lr;
        cfg.batch_size = batch;
        cfg.epochs = epochs;
        cfg.seed = seed;
        cfg.init_checkpoint = init_checkpoint;
        cfg.validate();
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(training_frames(data), training_frames(val), cfg);
          write_training_outputs(r, out);
        }
        return metrics_list(r.metrics);
      },
      py::arg("data"), py::arg("val"), py::arg("out"), py::arg("lr") = 1e-3, py::arg("batch") = 32,
      py::arg("epochs") = 30, py::arg("seed") = 1, py::arg("init_checkpoint") = py::none(),
      "Writes final.cfw, best.cfw and metrics.csv; returns per-epoch metrics.");

  m.def(
      "evaluate",
      [](const fs::path& ckpt, const fs::path& data) {
        Evaluation e;
        {
          py::gil_scoped_release release;
          e = evaluate(load_checkpoint(ckpt), training_frames(data));
        }
        py::dict d;
        d["frames"] = e.predictions_deg.size();
        d["mean_abs_deviation_deg"] = e.mean_abs_deviation_deg;
        d["mse"] = e.mse;
        d["accuracy"] = e.accuracy;
        d["predictions_deg"] = e.predictions_deg;
        d["deviations_deg"] = e.deviations_deg;
        return d;
      },
      py::arg("checkpoint"), py::arg("data"));

  m.def(
      "transfer_experiment",
      [](const fs::path& stage1, const fs::path& stage2, int seeds, std::optional<double> threshold, double lr,
         int batch, int epochs, std::uint64_t seed, std::uint64_t split_seed) {
        TransferConfig cfg;
        cfg.seeds = seeds;
        cfg.threshold = threshold;
        cfg.train.learning_rate = lr;
        cfg.train.batch_size = batch;
        cfg.train.epochs = epochs;
        cfg.train.seed = seed;
        TransferReport r;
        {
          py::gil_scoped_release release;
          r = transfer_experiment(StageData::from_directory(stage1, {}, split_seed),
                                  StageData::from_directory(stage2, {}, split_seed), cfg);
        }
        py::list per_seed;
        for (const auto& s : r.seeds) {
          py::dict d;
          d["seed"] = s.seed;
          d["threshold"] = s.threshold;
          d["xavier_epochs"] = s.xavier.epochs_to_threshold;
          d["transfer_epochs"] = s.transfer.epochs_to_threshold;
          d["xavier_deviation_deg"] = s.xavier.test_deviation_deg;
          d["transfer_deviation_deg"] = s.transfer.test_deviation_deg;
          d["improvement_pct"] = s.improvement_pct();
          d["transfer_faster"] = s.transfer_faster();
          d["transfer_not_worse"] = s.transfer_not_worse();
          per_seed.append(d);
        }
        py::dict d;
        d["seeds"] = per_seed;
        d["faster_count"] = r.faster_count();
        d["not_worse_count"] = r.not_worse_count();
        d["mean_improvement_pct"] = r.mean_improvement_pct();
        d["report"] = r.to_text();
        return d;
      },
      py::arg("stage1"), py::arg("stage2"), py::arg("seeds") = 5, py::arg("threshold") = py::none(),
      py::arg("lr") = 1e-3, py::arg("batch") = 32, py::arg("epochs") = 30, py::arg("seed") = 1,
      py::arg("split_seed") = 0);

  m.def("default_sampling_config", [] { return SamplingConfig::defaults().to_text(); });
  m.def("default_run_config", [] { return RunConfig{}.to_text(); });
}
