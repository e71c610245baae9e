#include "mdmd/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <opencv2/imgcodecs.hpp>

#include "mdmd/face_crop.hpp"
#include "mdmd/frame_ingest.hpp"
#include "mdmd/kv_config.hpp"
#include "mdmd/synth_bench.hpp"

namespace mdmd::cli {

namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw SpotError("cannot write " + path.string());
  return out;
}

std::optional<fs::path> find_landmarks(const fs::path& root, const std::string& video_id) {
  for (const char* ext : {".csv", ".json"}) {
    const fs::path candidate = root / (video_id + ext);
    if (fs::is_regular_file(candidate)) return candidate;
  }
  return std::nullopt;
}

ReferenceFlowParams flow_params(const RunConfig& config, const DatasetProfile& profile) {
  ReferenceFlowParams params;
  params.window_radius = config.flow_window;
  params.search_radius = config.flow_search > 0 ? config.flow_search : default_search_radius(profile.crop_size);
  params.stride = config.flow_stride;
  return params;
}

VideoResponses process_video(const RunConfig& config, const DatasetProfile& profile, const FlowBackend& backend,
                             const std::string& video_id) {
  VideoResponses result;
  result.video_id = video_id;
  const auto landmark_path = find_landmarks(config.landmarks_root, video_id);
  if (!landmark_path) {
    result.warnings.push_back("video " + video_id + " skipped: no landmark file in " +
                              config.landmarks_root.string());
    return result;
  }
  try {
    const LandmarkSet landmarks = parse_landmarks(*landmark_path);
    const FrameSequence raw = load_frame_sequence(config.frames_root / video_id, video_id, profile.fps);
    CropBox box = clamp_to_frame(box_from_landmarks(landmarks.pass1), raw.width(), raw.height());
    box = refine_box(box, landmarks.pass2);
    const FrameSequence face = crop_and_resize(raw, box, profile.crop_size);
    SpotOptions options;
    options.orientation = config.bins == "quadrant" ? BinOrientation::kQuadrant : BinOrientation::kAxisCentered;
    for (Kind kind : config.kinds()) {
      KindResponse response = compute_response(face, profile, kind, backend, options);
      if (response.warning) result.warnings.push_back(*response.warning + "; no " + std::string(to_string(kind)) +
                                                      " predictions");
      result.responses.push_back(std::move(response));
    }
  } catch (const std::exception& e) {
    result.error = e.what();
  }
  return result;
}

void report_video_messages(const std::vector<VideoResponses>& videos, std::ostream& log) {
  for (const auto& v : videos) {
    for (const auto& w : v.warnings) log << "warning: " << w << '\n';
    if (v.error) log << "error: video " << v.video_id << ": " << *v.error << '\n';
  }
}

int failed_count(const std::vector<VideoResponses>& videos) {
  return static_cast<int>(std::count_if(videos.begin(), videos.end(), [](const auto& v) { return v.error.has_value(); }));
}

std::vector<GroundTruthInterval> load_truth(const RunConfig& config) {
  if (config.gt.empty()) throw SpotError("--gt is required");
  return parse_annotations(config.gt);
}

void print_f1(std::ostream& out, const DatasetEval& eval) {
  auto line = [&out](const char* label, const KindSummary& s) {
    char buf[64];
    if (s.f1) {
      std::snprintf(buf, sizeof(buf), "%s F1: %.4f\n", label, *s.f1);
    } else {
      std::snprintf(buf, sizeof(buf), "%s F1: n/a\n", label);
    }
    out << buf;
  };
  line("macro", eval.macro);
  line("micro", eval.micro);
  line("overall", eval.overall);
}

}  // namespace

std::vector<Kind> RunConfig::kinds() const {
  if (kind == "macro") return {Kind::kMacro};
  if (kind == "micro") return {Kind::kMicro};
  if (kind == "both") return {Kind::kMacro, Kind::kMicro};
  throw SpotError("--kind must be macro, micro or both");
}

void RunConfig::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw SpotError("--p must lie in [0, 1]");
  if (jobs < 1) throw SpotError("--jobs must be >= 1");
  if (flow_window < 1 || flow_search < 0 || flow_stride < 1) throw SpotError("invalid flow parameters");
  if (bins != "axis" && bins != "quadrant") throw SpotError("--bins must be axis or quadrant");
  kinds();
}

std::vector<double> p_grid(double start, double end, double step) {
  constexpr double kEps = 1e-9;
  if (!(start >= 0.0 && end <= 1.0)) throw SpotError("p grid must lie within [0, 1]");
  if (end < start) throw SpotError("p grid is inverted (end < start)");
  if (end - start < kEps) return {start};
  if (!(step > 0.0)) throw SpotError("p step must be positive");
  if (step > end - start + kEps) throw SpotError("p step exceeds the grid range");
  const auto count = static_cast<int>(std::floor((end - start) / step + kEps)) + 1;
  std::vector<double> grid;
  for (int i = 0; i < count; ++i) grid.push_back(std::round((start + i * step) * 1e10) / 1e10);
  return grid;
}

std::vector<VideoResponses> compute_dataset_responses(const RunConfig& config, std::ostream& log) {
  config.validate();
  if (config.frames_root.empty() || !fs::is_directory(config.frames_root)) {
    throw SpotError("--frames-root must be an existing directory");
  }
  if (config.landmarks_root.empty() || !fs::is_directory(config.landmarks_root)) {
    throw SpotError("--landmarks-root must be an existing directory");
  }
  const DatasetProfile profile = resolve_profile(config.profile);
  const auto backend = make_flow_backend(config.flow, flow_params(config, profile));

  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(config.frames_root)) {
    if (entry.is_directory()) ids.push_back(entry.path().filename().string());
  }
  std::sort(ids.begin(), ids.end());

  std::vector<VideoResponses> results(ids.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < ids.size(); i = next++) {
      results[i] = process_video(config, profile, *backend, ids[i]);
    }
  };
  {
    const int threads = std::max(1, std::min<int>(config.jobs, static_cast<int>(ids.size())));
    std::vector<std::jthread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  report_video_messages(results, log);
  return results;
}

std::vector<SpottedInterval> predictions_at(const std::vector<VideoResponses>& videos, const DatasetProfile& profile,
                                            double p, const fs::path& dump_dir) {
  std::vector<SpottedInterval> rows;
  for (const auto& video : videos) {
    for (const auto& response : video.responses) {
      SpotOutcome outcome = spot_from_response(response, profile, p);
      rows.insert(rows.end(), outcome.intervals.begin(), outcome.intervals.end());
      if (!dump_dir.empty() && outcome.series) {
        auto dump = open_output(dump_dir / (video.video_id + "_" + std::string(to_string(response.kind)) + ".csv"));
        write_feature_dump(dump, *outcome.series);
      }
    }
  }
  sort_intervals(rows);
  return rows;
}

int cmd_spot(const RunConfig& config, std::ostream& out, std::ostream& log) {
  const auto videos = compute_dataset_responses(config, log);
  const auto rows = predictions_at(videos, resolve_profile(config.profile), config.p, config.dump_dir);
  if (config.out.empty()) {
    write_predictions(out, rows);
  } else {
    auto file = open_output(config.out);
    write_predictions(file, rows);
  }
  const int failed = failed_count(videos);
  log << "spotted " << rows.size() << " intervals in " << videos.size() << " videos";
  if (failed > 0) log << " (" << failed << " failed)";
  log << '\n';
  return failed > 0 ? 1 : 0;
}

int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& log) {
  if (config.pred.empty()) throw SpotError("--pred is required");
  std::ifstream pred_in(config.pred);
  if (!pred_in) throw SpotError("cannot open " + config.pred.string());
  const auto predictions = parse_predictions(pred_in);
  const auto truth = load_truth(config);
  const EvalReport report = evaluate(predictions, truth);
  for (const auto& w : report.warnings) log << "warning: " << w << '\n';
  if (!config.out.empty()) {
    auto file = open_output(config.out);
    file << report_to_json(report).dump(2) << '\n';
  }
  print_f1(out, report.dataset);
  return 0;
}

int cmd_sweep(const RunConfig& config, std::ostream& out, std::ostream& log) {
  const auto grid = p_grid(config.p_start, config.p_end, config.p_step);
  const auto truth = load_truth(config);
  const DatasetProfile profile = resolve_profile(config.profile);
  const auto videos = compute_dataset_responses(config, log);
  std::vector<SweepPoint> points;
  for (double p : grid) {
    const auto rows = predictions_at(videos, profile, p);
    points.push_back({p, evaluate(rows, truth).dataset});
  }
  const auto table = sweep_report(points, config.kinds());
  if (config.out.empty()) {
    write_sweep_table(out, profile.name, table);
  } else {
    auto file = open_output(config.out);
    write_sweep_table(file, profile.name, table);
  }
  return failed_count(videos) > 0 ? 1 : 0;
}

int cmd_synth(const fs::path& spec_path, const RunConfig& config, std::ostream& out, std::ostream& log) {
  if (config.out.empty()) throw SpotError("--out directory is required");
  std::ifstream in(spec_path);
  if (!in) throw SpotError("cannot open synth spec " + spec_path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SpotError(std::string("synth spec JSON: ") + e.what());
  }
  // Either one video object, or {"videos": [...]} with top-level defaults.
  std::vector<nlohmann::json> entries;
  if (doc.contains("videos")) {
    nlohmann::json defaults = doc;
    defaults.erase("videos");
    for (const auto& v : doc.at("videos")) {
      nlohmann::json merged = defaults;
      merged.update(v);
      entries.push_back(std::move(merged));
    }
  } else {
    entries.push_back(doc);
  }
  std::vector<SynthSpec> specs;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    SynthSpec spec = synth_spec_from_json(entries[i]);
    if (!ids.insert(spec.video_id).second) throw SpotError("synth spec: duplicate video id '" + spec.video_id + "'");
    if (config.seed) spec.seed = *config.seed + i;
    specs.push_back(std::move(spec));
  }

  const fs::path root = config.out;
  std::vector<GroundTruthInterval> truth;
  for (const auto& spec : specs) {
    const SynthVideo video = generate(spec);
    const fs::path frame_dir = root / "frames" / spec.video_id;
    fs::create_directories(frame_dir);
    for (int t = 1; t <= video.frames.size(); ++t) {
      char name[32];
      std::snprintf(name, sizeof(name), "%06d.png", t);
      if (!cv::imwrite((frame_dir / name).string(), video.frames.frame(t))) {
        throw SpotError("cannot write frame " + (frame_dir / name).string());
      }
    }
    auto landmarks = open_output(root / "landmarks" / (spec.video_id + ".csv"));
    write_landmarks_csv(landmarks, video.landmarks);
    truth.insert(truth.end(), video.truth.begin(), video.truth.end());
  }
  auto annotations = open_output(root / "annotations.csv");
  write_annotations(annotations, truth);
  nlohmann::json resolved = nlohmann::json::array();
  for (const auto& spec : specs) resolved.push_back(synth_spec_to_json(spec));
  auto spec_copy = open_output(root / "spec.json");
  spec_copy << nlohmann::json{{"videos", resolved}}.dump(2) << '\n';
  out << "wrote " << specs.size() << " videos to " << root.string() << '\n';
  (void)log;
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"Macro- and micro-expression interval spotting (MDMD) and MEGC-style evaluation"};
  app.require_subcommand(1);
  RunConfig config;
  fs::path config_file;
  fs::path spec_path;

  auto* spot = app.add_subcommand("spot", "Spot intervals in every video under --frames-root");
  auto* eval = app.add_subcommand("eval", "Score a prediction CSV against ground truth");
  auto* sweep = app.add_subcommand("sweep", "Spot and score over a grid of p values");
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset from a JSON spec");

  // Options set on the command line win over the --config file.
  struct Keyed {
    CLI::App* cmd;
    CLI::Option* opt;
    std::string key;
  };
  std::vector<Keyed> keyed;
  auto add = [&keyed](CLI::App* cmd, const std::string& flag, auto& target, const std::string& help) {
    auto* opt = cmd->add_option(flag, target, help);
    std::string key = flag.substr(2);
    std::replace(key.begin(), key.end(), '-', '_');
    keyed.push_back({cmd, opt, key});
    return opt;
  };
  for (auto* cmd : {spot, sweep}) {
    add(cmd, "--profile", config.profile, "Built-in profile (casme2, samm) or profile file");
    add(cmd, "--kind", config.kind, "macro, micro or both");
    add(cmd, "--flow", config.flow, "Flow backend");
    add(cmd, "--frames-root", config.frames_root, "Directory with one frame directory per video");
    add(cmd, "--landmarks-root", config.landmarks_root, "Directory with <video_id>.csv|.json landmarks");
    add(cmd, "--jobs", config.jobs, "Videos processed in parallel");
    add(cmd, "--flow-window", config.flow_window, "Block-matching window radius");
    add(cmd, "--flow-search", config.flow_search, "Block-matching search radius (0: ceil(0.05 * crop))");
    add(cmd, "--flow-stride", config.flow_stride, "Flow sampling stride in pixels");
    add(cmd, "--bins", config.bins, "Direction bin layout: axis or quadrant");
    add(cmd, "--out", config.out, "Output file (default: stdout)");
    cmd->add_option("--config", config_file, "key = value config file");
  }
  add(spot, "--p", config.p, "Threshold parameter in [0, 1]");
  add(spot, "--dump-dir", config.dump_dir, "Write per-video frame,dbar,r,flagged CSVs here");
  add(sweep, "--gt", config.gt, "Ground-truth annotation CSV");
  add(sweep, "--p-start", config.p_start, "First p");
  add(sweep, "--p-end", config.p_end, "Last p");
  add(sweep, "--p-step", config.p_step, "p step");
  add(eval, "--pred", config.pred, "Prediction CSV");
  add(eval, "--gt", config.gt, "Ground-truth annotation CSV");
  eval->add_option("--config", config_file, "key = value config file");
  add(eval, "--out", config.out, "Report JSON path");
  synth->add_option("spec", spec_path, "Synth spec JSON")->required();
  add(synth, "--out", config.out, "Output dataset directory")->required();
  std::uint64_t seed = 0;
  auto* seed_opt = synth->add_option("--seed", seed, "Base seed (video i uses seed + i)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (!config_file.empty()) {
      const auto file = KeyValueConfig::load(config_file);
      for (const auto& [raw_key, value] : file.values()) {
        std::string key = raw_key;
        std::replace(key.begin(), key.end(), '-', '_');
        const auto it = std::find_if(keyed.begin(), keyed.end(),
                                     [&](const Keyed& k) { return k.key == key && k.cmd->parsed(); });
        if (it == keyed.end()) throw SpotError("config file: unknown key '" + key + "'");
        if (it->opt->count() == 0) it->opt->add_result(value)->run_callback();
      }
    }
    if (seed_opt->count() > 0) config.seed = seed;
    if (*spot) return cmd_spot(config, std::cout, std::cerr);
    if (*eval) return cmd_eval(config, std::cout, std::cerr);
    if (*sweep) return cmd_sweep(config, std::cout, std::cerr);
    return cmd_synth(spec_path, config, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace mdmd::cli
