#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mdmd/frame_ingest.hpp"
#include "mdmd/mdmd_core.hpp"
#include "mdmd/optical_flow.hpp"

namespace mdmd {

struct SpottedInterval {
  std::string video_id;
  int start = 0;
  int end = 0;  // inclusive
  Kind kind = Kind::kMicro;
  int k_used = 0;
  double p_used = 0.0;

  int length() const { return end - start + 1; }
  bool operator==(const SpottedInterval&) const = default;
};

struct Run {
  int start = 0;
  int end = 0;

  int length() const { return end - start + 1; }
  bool operator==(const Run&) const = default;
};

/// Maximal runs of consecutive frame indices, sorted by start. Input may be
/// unsorted and contain duplicates.
std::vector<Run> flags_to_runs(std::span<const int> flags);

/// Micro pass keeps lengths in [micro_len_min, micro_len_max]; macro pass
/// keeps lengths >= macro_len_min. Rejected runs are dropped.
std::vector<SpottedInterval> filter_runs(std::span<const Run> runs, Kind kind, const DatasetProfile& profile,
                                         const std::string& video_id, int k, double p);

struct SpotOptions {
  BinOrientation orientation = BinOrientation::kAxisCentered;
};

// The p-independent part of one pass over one video: dbar and r series.
// `warning` is set (and the series empty) when the video is too short for k.
struct KindResponse {
  std::string video_id;
  Kind kind = Kind::kMicro;
  int k = 0;
  IndexedSeries dbar;
  IndexedSeries r;
  std::optional<std::string> warning;

  bool usable() const { return !warning.has_value(); }
};

KindResponse compute_response(const FrameSequence& seq, const DatasetProfile& profile, Kind kind,
                              const FlowBackend& backend, const SpotOptions& options = {});

struct SpotOutcome {
  std::vector<SpottedInterval> intervals;
  std::optional<std::string> warning;
  std::optional<FrameFeatureSeries> series;  // absent when the video was too short
};

/// Thresholding and post-processing of a cached response at one p.
SpotOutcome spot_from_response(const KindResponse& response, const DatasetProfile& profile, double p);

/// Full pass: dbar -> r -> threshold -> runs -> length filter.
SpotOutcome spot_video(const FrameSequence& seq, const DatasetProfile& profile, Kind kind, double p,
                       const FlowBackend& backend, const SpotOptions& options = {});

/// Prediction CSV: `video_id,start,end,type,k,p`.
void write_predictions(std::ostream& out, std::span<const SpottedInterval> intervals);
std::vector<SpottedInterval> parse_predictions(std::istream& in);

/// Orders by video id, then kind (macro first), then start.
void sort_intervals(std::vector<SpottedInterval>& intervals);

}  // namespace mdmd
