#include "mdmd/spot_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <tuple>

namespace mdmd {

namespace {

struct Candidate {
  double iou;
  std::size_t spotted;
  std::size_t truth;
};

double round4(double value) { return std::round(value * 1e4) / 1e4; }

nlohmann::json optional_ratio(const std::optional<double>& value) {
  return value ? nlohmann::json(round4(*value)) : nlohmann::json(nullptr);
}

nlohmann::json summary_to_json(const KindSummary& s) {
  return {{"M", s.M},
          {"N", s.N},
          {"A", s.A},
          {"FP", s.fp()},
          {"FN", s.fn()},
          {"recall", optional_ratio(s.recall)},
          {"precision", optional_ratio(s.precision)},
          {"f1", optional_ratio(s.f1)}};
}

void write_ratio(std::ostream& out, const std::optional<double>& value) {
  if (!value) return;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *value);
  out << buf;
}

}  // namespace

double interval_iou(FrameInterval spotted, FrameInterval truth) {
  if (spotted.end < spotted.start || truth.end < truth.start) throw SpotError("interval_iou: malformed interval");
  const long long inter =
      std::max(0LL, static_cast<long long>(std::min(spotted.end, truth.end)) - std::max(spotted.start, truth.start) + 1);
  if (inter == 0) return 0.0;
  const long long uni = static_cast<long long>(spotted.end - spotted.start + 1) + (truth.end - truth.start + 1) - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

VideoEval match_video(std::span<const FrameInterval> spotted, std::span<const FrameInterval> truth, double k_iou) {
  std::vector<Candidate> candidates;
  for (std::size_t s = 0; s < spotted.size(); ++s) {
    for (std::size_t t = 0; t < truth.size(); ++t) {
      const double iou = interval_iou(spotted[s], truth[t]);
      if (iou >= k_iou && iou > 0.0) candidates.push_back({iou, s, t});
    }
  }
  // Order depends only on interval values, so the count is invariant under
  // permutation of either input list.
  std::sort(candidates.begin(), candidates.end(), [&](const Candidate& x, const Candidate& y) {
    const auto& xs = spotted[x.spotted];
    const auto& ys = spotted[y.spotted];
    const auto& xt = truth[x.truth];
    const auto& yt = truth[y.truth];
    return std::tuple(-x.iou, xt.start, xs.start, xt.end, xs.end, x.truth, x.spotted) <
           std::tuple(-y.iou, yt.start, ys.start, yt.end, ys.end, y.truth, y.spotted);
  });
  std::vector<bool> spotted_used(spotted.size(), false);
  std::vector<bool> truth_used(truth.size(), false);
  VideoEval eval;
  eval.m = static_cast<int>(truth.size());
  eval.n = static_cast<int>(spotted.size());
  for (const auto& c : candidates) {
    if (spotted_used[c.spotted] || truth_used[c.truth]) continue;
    spotted_used[c.spotted] = true;
    truth_used[c.truth] = true;
    ++eval.a;
  }
  return eval;
}

KindSummary summarize(long long M, long long N, long long A) {
  if (A < 0 || A > M || A > N) throw SpotError("inconsistent counts: need 0 <= A <= min(M, N)");
  KindSummary s;
  s.M = M;
  s.N = N;
  s.A = A;
  if (M > 0) s.recall = static_cast<double>(A) / static_cast<double>(M);
  if (N > 0) s.precision = static_cast<double>(A) / static_cast<double>(N);
  if (M + N > 0) {
    if (A == 0) {
      s.f1 = 0.0;
    } else {
      const double r = *s.recall;
      const double p = *s.precision;
      s.f1 = 2.0 * r * p / (r + p);
    }
  }
  return s;
}

DatasetEval aggregate(std::span<const VideoEval> videos) {
  long long counts[2][3] = {};  // [kind][M, N, A]
  for (const auto& v : videos) {
    auto* c = counts[v.kind == Kind::kMacro ? 0 : 1];
    c[0] += v.m;
    c[1] += v.n;
    c[2] += v.a;
  }
  DatasetEval eval;
  eval.macro = summarize(counts[0][0], counts[0][1], counts[0][2]);
  eval.micro = summarize(counts[1][0], counts[1][1], counts[1][2]);
  eval.overall = summarize(counts[0][0] + counts[1][0], counts[0][1] + counts[1][1], counts[0][2] + counts[1][2]);
  return eval;
}

EvalReport evaluate(std::span<const SpottedInterval> predictions, std::span<const GroundTruthInterval> truth,
                    double k_iou) {
  using Key = std::pair<std::string, Kind>;
  std::map<Key, std::vector<FrameInterval>> truth_by_key;
  std::map<Key, std::vector<FrameInterval>> spotted_by_key;
  std::set<std::string> truth_videos;
  for (const auto& raw : truth) {
    const auto g = normalize_ground_truth(raw);
    truth_by_key[{g.video_id, g.kind}].push_back({g.onset, g.offset});
    truth_videos.insert(g.video_id);
  }
  EvalReport report;
  std::set<std::string> warned;
  for (const auto& s : predictions) {
    spotted_by_key[{s.video_id, s.kind}].push_back({s.start, s.end});
    if (truth_videos.count(s.video_id) == 0 && warned.insert(s.video_id).second) {
      report.warnings.push_back("video " + s.video_id + " has predictions but no ground truth; counted with m = 0");
    }
  }
  std::set<Key> keys;
  for (const auto& [key, _] : truth_by_key) keys.insert(key);
  for (const auto& [key, _] : spotted_by_key) keys.insert(key);
  static const std::vector<FrameInterval> kNone;
  for (const auto& key : keys) {
    const auto t = truth_by_key.find(key);
    const auto s = spotted_by_key.find(key);
    VideoEval v = match_video(s == spotted_by_key.end() ? kNone : s->second,
                              t == truth_by_key.end() ? kNone : t->second, k_iou);
    v.video_id = key.first;
    v.kind = key.second;
    report.videos.push_back(std::move(v));
  }
  report.dataset = aggregate(report.videos);
  return report;
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json videos = nlohmann::json::array();
  for (const auto& v : report.videos) {
    videos.push_back({{"video_id", v.video_id},
                      {"type", std::string(to_string(v.kind))},
                      {"m", v.m},
                      {"n", v.n},
                      {"tp", v.a},
                      {"fp", v.fp()},
                      {"fn", v.fn()}});
  }
  return {{"videos", videos},
          {"dataset",
           {{"macro", summary_to_json(report.dataset.macro)},
            {"micro", summary_to_json(report.dataset.micro)},
            {"overall", summary_to_json(report.dataset.overall)}}},
          {"warnings", report.warnings}};
}

std::vector<SweepRow> sweep_report(std::span<const SweepPoint> points, std::span<const Kind> kinds) {
  std::vector<SweepRow> rows;
  for (const auto& point : points) {
    for (Kind kind : kinds) {
      rows.push_back({point.p, kind, kind == Kind::kMacro ? point.dataset.macro : point.dataset.micro});
    }
  }
  return rows;
}

void write_sweep_table(std::ostream& out, const std::string& dataset, std::span<const SweepRow> rows) {
  out << "dataset,p,kind,tp,fp,fn,recall,precision,f1\n";
  for (const auto& row : rows) {
    char p_text[32];
    std::snprintf(p_text, sizeof(p_text), "%.4g", row.p);
    out << dataset << ',' << p_text << ',' << to_string(row.kind) << ',' << row.summary.A << ','
        << row.summary.fp() << ',' << row.summary.fn() << ',';
    write_ratio(out, row.summary.recall);
    out << ',';
    write_ratio(out, row.summary.precision);
    out << ',';
    write_ratio(out, row.summary.f1);
    out << '\n';
  }
}

}  // namespace mdmd
