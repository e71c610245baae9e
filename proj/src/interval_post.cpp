#include "mdmd/interval_post.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <tuple>

#include "csv_util.hpp"

namespace mdmd {

namespace {

constexpr std::string_view kPredictionHeader = "video_id,start,end,type,k,p";

}  // namespace

std::vector<Run> flags_to_runs(std::span<const int> flags) {
  std::vector<int> sorted(flags.begin(), flags.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<Run> runs;
  for (int index : sorted) {
    if (!runs.empty() && runs.back().end + 1 == index) {
      runs.back().end = index;
    } else {
      runs.push_back({index, index});
    }
  }
  return runs;
}

std::vector<SpottedInterval> filter_runs(std::span<const Run> runs, Kind kind, const DatasetProfile& profile,
                                         const std::string& video_id, int k, double p) {
  std::vector<SpottedInterval> kept;
  for (const Run& run : runs) {
    const int len = run.length();
    const bool ok = kind == Kind::kMicro ? (len >= profile.micro_len_min && len <= profile.micro_len_max)
                                         : len >= profile.macro_len_min;
    if (ok) kept.push_back({video_id, run.start, run.end, kind, k, p});
  }
  return kept;
}

KindResponse compute_response(const FrameSequence& seq, const DatasetProfile& profile, Kind kind,
                              const FlowBackend& backend, const SpotOptions& options) {
  KindResponse response;
  response.video_id = seq.video_id;
  response.kind = kind;
  response.k = profile.k_for(kind);
  const int n = seq.size();
  const int k = response.k;
  // dbar needs n > 2k; r additionally needs [2k, n-2k+1] non-empty.
  if (n <= 2 * k || 2 * k > n - 2 * k + 1) {
    response.warning = "video " + seq.video_id + " (" + std::to_string(n) + " frames) is too short for " +
                       std::string(to_string(kind)) + " k = " + std::to_string(k);
    return response;
  }
  if (seq.width() != profile.crop_size || seq.height() != profile.crop_size) {
    throw SpotError("video " + seq.video_id + " is " + std::to_string(seq.width()) + "x" +
                    std::to_string(seq.height()) + ", expected the " + std::to_string(profile.crop_size) +
                    " crop");
  }
  const MdmdConfig config{k, BlockGrid(profile.block_grid, profile.crop_size),
                          DirectionBinning(profile.direction_count, options.orientation)};
  response.dbar = compute_dbar_series(seq, config, backend);
  response.r = relative_difference(response.dbar, k);
  return response;
}

SpotOutcome spot_from_response(const KindResponse& response, const DatasetProfile& profile, double p) {
  SpotOutcome outcome;
  if (!response.usable()) {
    outcome.warning = response.warning;
    return outcome;
  }
  FrameFeatureSeries series{response.video_id, response.k, response.dbar, response.r,
                            threshold_and_flag(response.r, p)};
  const auto runs = flags_to_runs(series.threshold.flags);
  outcome.intervals = filter_runs(runs, response.kind, profile, response.video_id, response.k, p);
  outcome.series = std::move(series);
  return outcome;
}

SpotOutcome spot_video(const FrameSequence& seq, const DatasetProfile& profile, Kind kind, double p,
                       const FlowBackend& backend, const SpotOptions& options) {
  if (!(p >= 0.0 && p <= 1.0)) throw SpotError("p must lie in [0, 1]");
  return spot_from_response(compute_response(seq, profile, kind, backend, options), profile, p);
}

void write_predictions(std::ostream& out, std::span<const SpottedInterval> intervals) {
  out << kPredictionHeader << '\n';
  for (const auto& s : intervals) {
    out << s.video_id << ',' << s.start << ',' << s.end << ',' << to_string(s.kind) << ',' << s.k_used << ','
        << s.p_used << '\n';
  }
}

std::vector<SpottedInterval> parse_predictions(std::istream& in) {
  std::string line;
  const bool has_header = static_cast<bool>(std::getline(in, line));
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (!has_header || line != kPredictionHeader) {
    throw SpotError("prediction file must start with header '" + std::string(kPredictionHeader) + "'");
  }
  std::vector<SpottedInterval> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    const std::string where = "prediction line " + std::to_string(line_no);
    if (fields.size() != 6) throw SpotError(where + ": expected 6 fields");
    try {
      SpottedInterval s;
      s.video_id = fields[0];
      s.start = detail::parse_int_field(fields[1], "start");
      s.end = detail::parse_int_field(fields[2], "end");
      s.kind = parse_kind(fields[3]);
      s.k_used = fields[4].empty() ? 0 : detail::parse_int_field(fields[4], "k");
      s.p_used = fields[5].empty() ? 0.0 : detail::parse_double_field(fields[5], "p");
      if (s.video_id.empty() || s.start < 1 || s.end < s.start) throw SpotError("invalid interval");
      rows.push_back(std::move(s));
    } catch (const SpotError& e) {
      throw SpotError(where + ": " + e.what());
    }
  }
  return rows;
}

void sort_intervals(std::vector<SpottedInterval>& intervals) {
  std::sort(intervals.begin(), intervals.end(), [](const SpottedInterval& a, const SpottedInterval& b) {
    return std::tuple(a.video_id, a.kind, a.start, a.end) < std::tuple(b.video_id, b.kind, b.start, b.end);
  });
}

}  // namespace mdmd
