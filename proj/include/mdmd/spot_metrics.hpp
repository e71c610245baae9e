#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mdmd/frame_ingest.hpp"
#include "mdmd/interval_post.hpp"

namespace mdmd {

inline constexpr double kDefaultIouThreshold = 0.5;

struct FrameInterval {
  int start = 0;
  int end = 0;  // inclusive
};

/// Intersection over union in frame counts, |[s, e]| = e - s + 1.
double interval_iou(FrameInterval spotted, FrameInterval truth);

// Counts for one video and one kind. m = truths, n = spotted, a = TPs.
struct VideoEval {
  std::string video_id;
  Kind kind = Kind::kMicro;
  int m = 0;
  int n = 0;
  int a = 0;

  int fp() const { return n - a; }
  int fn() const { return m - a; }
};

/// One-to-one greedy matching: candidate pairs with IoU >= k_iou are taken in
/// order of descending IoU (ties: earlier truth onset, then earlier spotted
/// start), each interval used at most once.
VideoEval match_video(std::span<const FrameInterval> spotted, std::span<const FrameInterval> truth,
                      double k_iou = kDefaultIouThreshold);

struct KindSummary {
  long long M = 0;
  long long N = 0;
  long long A = 0;
  std::optional<double> recall;     // absent when M = 0
  std::optional<double> precision;  // absent when N = 0
  std::optional<double> f1;         // absent when M + N = 0

  long long fp() const { return N - A; }
  long long fn() const { return M - A; }
};

/// Recall A/M, precision A/N, F1 = 2RP/(R+P); F1 is 0 when A = 0 and M+N > 0.
KindSummary summarize(long long M, long long N, long long A);

struct DatasetEval {
  KindSummary macro;
  KindSummary micro;
  KindSummary overall;  // counts summed over both kinds
};

DatasetEval aggregate(std::span<const VideoEval> videos);

struct EvalReport {
  std::vector<VideoEval> videos;
  DatasetEval dataset;
  std::vector<std::string> warnings;
};

/// Evaluates predictions against normalized ground truth, per video and kind.
/// Every (video, kind) present on either side yields a VideoEval. Prediction
/// videos missing from the ground truth are counted with m = 0 and warned about.
EvalReport evaluate(std::span<const SpottedInterval> predictions, std::span<const GroundTruthInterval> truth,
                    double k_iou = kDefaultIouThreshold);

/// Report JSON. Ratios are rounded to 4 decimals; absent ratios are null.
nlohmann::json report_to_json(const EvalReport& report);

struct SweepRow {
  double p = 0.0;
  Kind kind = Kind::kMicro;
  KindSummary summary;
};

struct SweepPoint {
  double p = 0.0;
  DatasetEval dataset;
};

/// One row per (p, kind) in input order, kinds in the given order.
std::vector<SweepRow> sweep_report(std::span<const SweepPoint> points, std::span<const Kind> kinds);

/// CSV `dataset,p,kind,tp,fp,fn,recall,precision,f1`; absent ratios are empty.
void write_sweep_table(std::ostream& out, const std::string& dataset, std::span<const SweepRow> rows);

}  // namespace mdmd
