#include "crashforge/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <thread>

#include "crashforge/errors.hpp"
#include "crashforge/kvconfig.hpp"

namespace fs = std::filesystem;

namespace crashforge {
namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw IoError("failed to write " + path.string());
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// Iterates CSV lines after checking the header; calls fn(fields, line_no).
template <typename Fn>
void for_each_row(std::string_view text, std::string_view origin, std::string_view header,
                  std::size_t n_fields, Fn&& fn) {
  int line_no = 0;
  bool saw_header = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!saw_header) {
      if (line != header) {
        throw ParseError(std::string(origin) + ":" + std::to_string(line_no) + ": unexpected header");
      }
      saw_header = true;
      continue;
    }
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != n_fields) {
      throw ParseError(std::string(origin) + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(n_fields) + " fields, got " + std::to_string(fields.size()));
    }
    fn(fields, line_no);
  }
  if (!saw_header) throw ParseError(std::string(origin) + ":1: missing header");
}

struct FieldParser {
  std::string_view origin;
  int line;

  [[noreturn]] void fail(std::string_view what, std::string_view value) const {
    throw ParseError(std::string(origin) + ":" + std::to_string(line) + ": bad " + std::string(what) +
                     " '" + std::string(value) + "'");
  }
  double real(std::string_view what, std::string_view v) const {
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(out)) fail(what, v);
    return out;
  }
  std::uint64_t u64(std::string_view what, std::string_view v) const {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) fail(what, v);
    return out;
  }
};

void parse_weights(std::string_view text, std::map<std::string, double>& weights,
                   std::string_view origin) {
  for (std::string_view item : split_fields(text)) {
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) {
      throw ConfigError(std::string(origin) + ": scenario_weights entry '" + std::string(item) +
                        "' must be ID:WEIGHT");
    }
    double w = 0.0;
    const auto v = item.substr(colon + 1);
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), w);
    if (ec != std::errc{} || p != v.data() + v.size() || !(w >= 0.0) || !std::isfinite(w)) {
      throw ConfigError(std::string(origin) + ": bad weight in '" + std::string(item) + "'");
    }
    weights[std::string(item.substr(0, colon))] = w;
  }
}

std::string image_name(std::uint64_t episode_index, std::size_t frame_index) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "images/e%06llu/f%03zu.pgm",
                static_cast<unsigned long long>(episode_index), frame_index);
  return buf;
}

}  // namespace

// --- RunConfig ---------------------------------------------------------------

int RunConfig::frame_stride() const {
  return static_cast<int>(std::lround(1.0 / (frame_rate_hz * kDt)));
}

void RunConfig::validate() const {
  const int physics_hz = static_cast<int>(std::lround(1.0 / kDt));
  if (frame_rate_hz < 1 || frame_rate_hz > physics_hz || physics_hz % frame_rate_hz != 0) {
    throw ConfigError("frame_rate_hz must be in 1..50 and divide 50, got " + std::to_string(frame_rate_hz));
  }
  if (!(near_miss_threshold_m > 0.0)) throw ConfigError("near_miss_threshold_m must be > 0");
  for (const auto& [id, w] : scenario_weights) {
    if (!(w >= 0.0)) throw ConfigError("scenario weight for '" + id + "' must be >= 0");
  }
  RenderProfile::by_name(render_profile);
}

RunConfig RunConfig::from_text(std::string_view text, std::string_view origin) {
  const KeyValueFile kv = KeyValueFile::parse(text, origin);
  RunConfig c;
  for (const auto& [key, value] : kv.entries()) {
    if (key == "frame_rate_hz") {
      const double v = kv.number(key);
      if (v != std::floor(v)) throw ConfigError(std::string(origin) + ": frame_rate_hz must be an integer");
      c.frame_rate_hz = static_cast<int>(v);
    } else if (key == "near_miss_threshold_m") {
      c.near_miss_threshold_m = kv.number(key);
    } else if (key == "exclude_post_contact") {
      c.exclude_post_contact = kv.boolean(key);
    } else if (key == "scenario_weights") {
      parse_weights(value, c.scenario_weights, origin);
    } else if (key == "render_profile") {
      c.render_profile = value;
    } else if (key == "dt_s") {
      if (kv.number(key) != kDt) throw ConfigError(std::string(origin) + ": dt_s is fixed at 0.02");
    } else {
      throw ConfigError(std::string(origin) + ": unknown run config key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const fs::path& path) { return from_text(read_file(path), path.string()); }

std::string RunConfig::to_text() const {
  std::ostringstream out;
  out << "frame_rate_hz = " << frame_rate_hz << '\n';
  out << "near_miss_threshold_m = " << format_decimal(near_miss_threshold_m) << '\n';
  out << "exclude_post_contact = " << (exclude_post_contact ? "true" : "false") << '\n';
  out << "scenario_weights = ";
  bool first = true;
  for (const auto& [id, w] : scenario_weights) {
    out << (first ? "" : ",") << id << ':' << format_decimal(w);
    first = false;
  }
  out << '\n';
  out << "render_profile = " << render_profile << '\n';
  out << "dt_s = " << format_decimal(kDt) << "  # read-only\n";
  return out.str();
}

// --- simulation ----------------------------------------------------------------

EpisodeResult run_episode(const EpisodeSetup& setup, const ParameterSample& params,
                          const RunConfig& config, RngStream& rng, bool render) {
  config.validate();
  const RenderProfile profile = RenderProfile::by_name(config.render_profile);
  const CameraModel camera;
  Agent ego(setup.ego_initial, setup.ego_path, params.mass_kg);
  Agent adversary(setup.adversary_initial, setup.adversary_path, params.mass_kg);

  const double dt = RunConfig::kDt;
  const int steps = static_cast<int>(std::lround(setup.duration_s / dt));
  const int stride = config.frame_stride();

  EpisodeResult result;
  result.record.scenario_id = setup.scenario_id;
  result.record.params = params;
  result.clearance_trace.reserve(steps);
  bool contact = false;
  for (int k = 0; k < steps; ++k) {
    const FootprintOBB ego_box = FootprintOBB::of(ego.state());
    const FootprintOBB adv_box = FootprintOBB::of(adversary.state());
    const double clearance = min_clearance(ego_box, adv_box);
    result.clearance_trace.push_back(clearance);
    contact = contact || clearance == 0.0;

    if (k % stride == 0) {
      const ControlCommand cmd = ego.command();
      Frame frame;
      frame.t = k * dt;
      frame.steering_label_deg = cmd.steer * 180.0 / std::numbers::pi;
      frame.speed_mps = ego.state().speed;
      frame.contact_flag = contact;
      result.record.frames.push_back(frame);
      if (render) {
        result.images.push_back(render_frame(ego.state(), adv_box, setup.road, camera, profile,
                                             params.fog_density_per_m, rng));
      }
    }
    ego.step(dt);
    adversary.step(dt);
  }
  result.record.outcome = classify_outcome(result.clearance_trace, config.near_miss_threshold_m);
  return result;
}

EpisodeResult simulate_episode(const ScenarioCatalog& catalog, const ScenarioTemplate& tmpl,
                               std::uint64_t master_seed, std::uint64_t index, const SamplingConfig& sampling,
                               const RunConfig& run, bool render) {
  RngStream rng = derive_stream(master_seed, index);
  const ParameterSample params = sample_parameters(tmpl, sampling, rng);
  const EpisodeSetup setup = catalog.instantiate(tmpl, params, rng);
  EpisodeResult result = run_episode(setup, params, run, rng, render);
  result.record.episode_id = episode_id_for(master_seed, index);
  result.record.master_seed = master_seed;
  result.record.episode_index = index;
  for (std::size_t f = 0; f < result.record.frames.size(); ++f) {
    result.record.frames[f].image_path = image_name(index, f);
  }
  return result;
}

std::uint64_t episode_id_for(std::uint64_t master_seed, std::uint64_t episode_index) {
  return mix_seed(master_seed, episode_index);
}

// --- manifests -------------------------------------------------------------------

std::string format_decimal(double v) {
  if (v == 0.0) v = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string frames_csv(const std::vector<FrameRow>& rows) {
  std::string out(kFramesHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.episode_id) + ',' + std::to_string(r.frame_index) + ',' +
           format_decimal(r.t_s) + ',' + r.image_path + ',' + format_decimal(r.steering_deg) + ',' +
           format_decimal(r.speed_mps) + ',' + (r.contact ? "1" : "0") + '\n';
  }
  return out;
}

std::string episodes_csv(const std::vector<EpisodeRow>& rows) {
  std::string out(kEpisodesHeader);
  out += '\n';
  for (const auto& r : rows) {
    const auto& p = r.params;
    out += std::to_string(r.episode_id) + ',' + r.scenario_id + ',' + std::to_string(r.episode_index) +
           ',' + to_string(r.outcome) + ',' + format_decimal(r.min_clearance_m) + ',' +
           format_decimal(p.mass_kg) + ',' + format_decimal(p.speed_mps) + ',' +
           format_decimal(p.fog_density_per_m) + ',' + format_decimal(p.brake_decel_mps2) + ',' +
           format_decimal(p.lane_change_distance_m) + ',' + format_decimal(p.vertical_offset_m) + '\n';
  }
  return out;
}

std::vector<FrameRow> parse_frames_csv(std::string_view text, std::string_view origin) {
  std::vector<FrameRow> rows;
  for_each_row(text, origin, kFramesHeader, 7, [&](const auto& f, int line) {
    const FieldParser p{origin, line};
    FrameRow r;
    r.episode_id = p.u64("episode_id", f[0]);
    r.frame_index = static_cast<int>(p.u64("frame_index", f[1]));
    r.t_s = p.real("t_s", f[2]);
    r.image_path = std::string(f[3]);
    r.steering_deg = p.real("steering_deg", f[4]);
    r.speed_mps = p.real("speed_mps", f[5]);
    if (f[6] != "0" && f[6] != "1") p.fail("contact", f[6]);
    r.contact = f[6] == "1";
    rows.push_back(std::move(r));
  });
  return rows;
}

std::vector<EpisodeRow> parse_episodes_csv(std::string_view text, std::string_view origin) {
  std::vector<EpisodeRow> rows;
  for_each_row(text, origin, kEpisodesHeader, 11, [&](const auto& f, int line) {
    const FieldParser p{origin, line};
    EpisodeRow r;
    r.episode_id = p.u64("episode_id", f[0]);
    r.scenario_id = std::string(f[1]);
    r.episode_index = p.u64("episode_index", f[2]);
    const auto outcome = outcome_from_string(f[3]);
    if (!outcome) p.fail("outcome", f[3]);
    r.outcome = *outcome;
    r.min_clearance_m = p.real("min_clearance_m", f[4]);
    r.params.mass_kg = p.real("mass_kg", f[5]);
    r.params.speed_mps = p.real("speed_mps", f[6]);
    r.params.fog_density_per_m = p.real("fog_density", f[7]);
    r.params.brake_decel_mps2 = p.real("brake_decel", f[8]);
    r.params.lane_change_distance_m = p.real("lane_change_m", f[9]);
    r.params.vertical_offset_m = p.real("vertical_offset_m", f[10]);
    rows.push_back(std::move(r));
  });
  return rows;
}

DatasetManifest load_manifest(const fs::path& dir) {
  if (!fs::exists(dir / "_SUCCESS")) {
    throw IoError(dir.string() + ": missing _SUCCESS sentinel (incomplete or corrupt dataset)");
  }
  DatasetManifest m;
  m.root = dir;
  m.frames = parse_frames_csv(read_file(dir / "frames.csv"), (dir / "frames.csv").string());
  m.episodes = parse_episodes_csv(read_file(dir / "episodes.csv"), (dir / "episodes.csv").string());
  return m;
}

DatasetManifest load_frames(const fs::path& path) {
  if (fs::is_directory(path)) {
    DatasetManifest m = load_manifest(path);
    return m;
  }
  DatasetManifest m;
  m.root = path.parent_path();
  m.frames = parse_frames_csv(read_file(path), path.string());
  return m;
}

// --- generation -----------------------------------------------------------------

std::vector<std::string> assign_templates(const std::vector<ScenarioTemplate>& eligible,
                                          const std::map<std::string, double>& weights,
                                          std::size_t n_episodes) {
  if (eligible.empty()) throw ConfigError("no scenario templates selected");
  std::vector<std::string> out;
  out.reserve(n_episodes);
  if (weights.empty()) {
    for (std::size_t i = 0; i < n_episodes; ++i) out.push_back(eligible[i % eligible.size()].id);
    return out;
  }
  for (const auto& [id, w] : weights) {
    const bool known = std::any_of(eligible.begin(), eligible.end(),
                                   [&](const ScenarioTemplate& t) { return t.id == id; });
    if (!known) throw UnknownScenario("scenario_weights names unknown or ineligible scenario '" + id + "'");
  }
  std::vector<double> w(eligible.size());
  for (std::size_t j = 0; j < eligible.size(); ++j) {
    const auto it = weights.find(eligible[j].id);
    w[j] = it == weights.end() ? 1.0 : it->second;
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0.0)) throw ConfigError("scenario weights sum to zero");
  // Smooth weighted round-robin: deterministic, interleaved, exact in the limit.
  std::vector<double> current(eligible.size(), 0.0);
  for (std::size_t i = 0; i < n_episodes; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 0; j < eligible.size(); ++j) {
      current[j] += w[j];
      if (current[j] > current[best]) best = j;
    }
    current[best] -= total;
    out.push_back(eligible[best].id);
  }
  return out;
}

GenerateResult generate_dataset(const ScenarioCatalog& catalog, std::size_t n_episodes,
                                std::uint64_t master_seed, const SamplingConfig& sampling,
                                const RunConfig& run, const fs::path& out_dir,
                                const GenerateOptions& options) {
  if (n_episodes < 1) throw ConfigError("n_episodes must be >= 1");
  run.validate();
  sampling.validate();

  std::vector<ScenarioTemplate> eligible;
  if (options.scenario_ids.empty()) {
    eligible = catalog.dataset_templates(options.include_rear_end);
  } else {
    for (const auto& id : options.scenario_ids) {
      const ScenarioTemplate& t = catalog.find(id);
      if (!t.in_default_dataset && !options.include_rear_end) {
        throw ConfigError("scenario '" + id + "' is excluded from datasets unless rear-end templates are included");
      }
      eligible.push_back(t);
    }
  }
  const std::vector<std::string> assignment = assign_templates(eligible, run.scenario_weights, n_episodes);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  for (const char* stale : {"_SUCCESS", "frames.csv", "episodes.csv", "stats.csv"}) {
    fs::remove(out_dir / stale, ec);
  }
  fs::remove_all(out_dir / "images", ec);
  if (ec) throw IoError("cannot clear " + (out_dir / "images").string() + ": " + ec.message());

  std::vector<FrameRow> frame_rows;
  std::vector<EpisodeRow> episode_rows;
  frame_rows.reserve(n_episodes * 50);
  episode_rows.reserve(n_episodes);

  auto commit = [&](const EpisodeResult& res) {
    const auto& rec = res.record;
    const fs::path ep_dir = out_dir / fs::path(rec.frames.front().image_path).parent_path();
    fs::create_directories(ep_dir, ec);
    if (ec) throw IoError("cannot create " + ep_dir.string() + ": " + ec.message());
    for (std::size_t f = 0; f < rec.frames.size(); ++f) {
      const Frame& fr = rec.frames[f];
      write_pgm(out_dir / fr.image_path, res.images[f]);
      frame_rows.push_back({rec.episode_id, static_cast<int>(f), fr.t, fr.image_path,
                            fr.steering_label_deg, fr.speed_mps, fr.contact_flag});
    }
    episode_rows.push_back({rec.episode_id, rec.scenario_id, rec.episode_index, rec.outcome.kind,
                            rec.outcome.min_clearance_m, rec.params});
  };

  const std::size_t workers = static_cast<std::size_t>(std::max(1, options.workers));
  for (std::size_t begin = 0; begin < n_episodes; begin += workers) {
    const std::size_t end = std::min(n_episodes, begin + workers);
    std::vector<EpisodeResult> chunk(end - begin);
    std::vector<std::exception_ptr> errors(end - begin);
    auto work = [&](std::size_t i) {
      try {
        chunk[i - begin] = simulate_episode(catalog, catalog.find(assignment[i]), master_seed, i, sampling, run);
        chunk[i - begin].clearance_trace.clear();
      } catch (...) {
        errors[i - begin] = std::current_exception();
      }
    };
    if (workers == 1) {
      work(begin);
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t i = begin; i < end; ++i) pool.emplace_back(work, i);
    }
    // Commit strictly in index order; the first failure aborts before any
    // later episode is written.
    for (std::size_t i = begin; i < end; ++i) {
      if (errors[i - begin]) {
        try {
          std::rethrow_exception(errors[i - begin]);
        } catch (const Error& e) {
          throw std::runtime_error("episode " + std::to_string(i) + ": " + e.what());
        }
      }
      commit(chunk[i - begin]);
    }
  }

  write_file(out_dir / "frames.csv", frames_csv(frame_rows));
  write_file(out_dir / "episodes.csv", episodes_csv(episode_rows));
  GenerateResult result;
  result.episodes = episode_rows.size();
  result.frames = frame_rows.size();
  result.stats = collision_stats(episode_rows);
  write_file(out_dir / "stats.csv", result.stats.to_table());
  write_file(out_dir / "_SUCCESS", "");
  return result;
}

// --- statistics -------------------------------------------------------------------

double ScenarioStats::contact_rate() const {
  return episodes ? static_cast<double>(collisions) / episodes : 0.0;
}

double ScenarioStats::near_miss_rate() const {
  return episodes ? static_cast<double>(near_misses) / episodes : 0.0;
}

std::string StatsSummary::to_table() const {
  std::string out = "scenario_id,episodes,collisions,near_misses,passes,contact_rate,near_miss_rate\n";
  auto row = [&](const std::string& id, const ScenarioStats& s) {
    out += id + ',' + std::to_string(s.episodes) + ',' + std::to_string(s.collisions) + ',' +
           std::to_string(s.near_misses) + ',' + std::to_string(s.passes) + ',' +
           format_decimal(s.contact_rate()) + ',' + format_decimal(s.near_miss_rate()) + '\n';
  };
  for (const auto& [id, s] : per_scenario) row(id, s);
  row("ALL", overall);
  return out;
}

StatsSummary collision_stats(const std::vector<EpisodeRow>& episodes) {
  if (episodes.empty()) throw EmptyManifest("episode table is empty");
  StatsSummary s;
  for (const auto& e : episodes) {
    for (ScenarioStats* target : {&s.overall, &s.per_scenario[e.scenario_id]}) {
      ++target->episodes;
      switch (e.outcome) {
        case OutcomeKind::Collision: ++target->collisions; break;
        case OutcomeKind::NearMiss: ++target->near_misses; break;
        case OutcomeKind::Pass: ++target->passes; break;
      }
    }
  }
  return s;
}

StatsSummary collision_stats(const DatasetManifest& manifest) { return collision_stats(manifest.episodes); }

// --- splits -------------------------------------------------------------------------

std::array<std::size_t, 3> split_counts(std::size_t n, const SplitRatios& ratios) {
  const std::array<double, 3> r = {ratios.train, ratios.val, ratios.test};
  for (double x : r) {
    if (!(x > 0.0)) throw ConfigError("split ratios must be positive");
  }
  if (std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = r[i] * static_cast<double>(n);
    // Guard against 0.8 * 10 = 7.999999... style representation error.
    counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainder[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % 3]];
  return counts;
}

DatasetSplits split_dataset(const DatasetManifest& manifest, const SplitRatios& ratios,
                            std::uint64_t seed, bool exclude_post_contact) {
  std::vector<std::uint64_t> episode_ids;
  for (const auto& f : manifest.frames) {
    if (episode_ids.empty() || episode_ids.back() != f.episode_id) {
      if (std::find(episode_ids.begin(), episode_ids.end(), f.episode_id) == episode_ids.end()) {
        episode_ids.push_back(f.episode_id);
      }
    }
  }
  const auto counts = split_counts(episode_ids.size(), ratios);
  if (counts[0] == 0 || counts[1] == 0 || counts[2] == 0) {
    throw InsufficientEpisodes("cannot split " + std::to_string(episode_ids.size()) +
                               " episodes into three non-empty parts");
  }
  RngStream rng = derive_stream(seed, 0);
  std::vector<std::uint64_t> shuffled = episode_ids;
  for (std::size_t i = shuffled.size(); i > 1; --i) {
    std::swap(shuffled[i - 1], shuffled[rng.bounded(i)]);
  }
  std::map<std::uint64_t, int> part;
  for (std::size_t i = 0; i < shuffled.size(); ++i) {
    part[shuffled[i]] = i < counts[0] ? 0 : (i < counts[0] + counts[1] ? 1 : 2);
  }

  DatasetSplits out;
  DatasetManifest* targets[3] = {&out.train, &out.val, &out.test};
  for (DatasetManifest* t : targets) t->root = manifest.root;
  for (const auto& f : manifest.frames) {
    if (exclude_post_contact && f.contact) continue;
    targets[part.at(f.episode_id)]->frames.push_back(f);
  }
  for (const auto& e : manifest.episodes) {
    if (const auto it = part.find(e.episode_id); it != part.end()) targets[it->second]->episodes.push_back(e);
  }
  return out;
}

void write_splits(const DatasetSplits& splits, const fs::path& dir) {
  write_file(dir / "train.csv", frames_csv(splits.train.frames));
  write_file(dir / "val.csv", frames_csv(splits.val.frames));
  write_file(dir / "test.csv", frames_csv(splits.test.frames));
}

}  // namespace crashforge
