#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mdmd/interval_post.hpp"
#include "mdmd/spot_metrics.hpp"

namespace mdmd::cli {

struct RunConfig {
  std::string profile = "casme2";
  std::string kind = "both";  // macro | micro | both
  double p = 0.01;
  std::string flow = "reference";
  std::filesystem::path frames_root;
  std::filesystem::path landmarks_root;
  std::filesystem::path gt;
  std::filesystem::path pred;
  std::filesystem::path out;
  std::filesystem::path dump_dir;  // optional per-video frame,dbar,r,flagged dumps
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  double p_start = 0.01;
  double p_end = 0.99;
  double p_step = 0.01;
  int flow_window = 4;
  int flow_search = 0;  // 0: derived from the crop size
  int flow_stride = 1;
  std::string bins = "axis";  // axis | quadrant

  std::vector<Kind> kinds() const;
  void validate() const;
};

/// p values start, start + step, ..., end (inclusive within rounding).
std::vector<double> p_grid(double start, double end, double step);

// p-independent spotting state for one video, reused across thresholds.
struct VideoResponses {
  std::string video_id;
  std::vector<KindResponse> responses;
  std::vector<std::string> warnings;
  std::optional<std::string> error;
};

/// Crop + dbar/r series for every video directory under frames_root, in
/// video-id order, using a pool of `jobs` workers.
std::vector<VideoResponses> compute_dataset_responses(const RunConfig& config, std::ostream& log);

/// Thresholds cached responses at p; sorted prediction rows.
std::vector<SpottedInterval> predictions_at(const std::vector<VideoResponses>& videos, const DatasetProfile& profile,
                                            double p, const std::filesystem::path& dump_dir = {});

int cmd_spot(const RunConfig& config, std::ostream& out, std::ostream& log);
int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& log);
int cmd_sweep(const RunConfig& config, std::ostream& out, std::ostream& log);
int cmd_synth(const std::filesystem::path& spec_path, const RunConfig& config, std::ostream& out,
              std::ostream& log);

/// Entry point for the `mdmd_spot` executable.
int run(int argc, char** argv);

}  // namespace mdmd::cli
