#include "mdmd/mdmd_core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <ostream>

namespace mdmd {

DirectionBinning::DirectionBinning(int count, BinOrientation orientation)
    : count_(count), orientation_(orientation) {
  if (count < 1) throw SpotError("direction count must be >= 1");
  width_ = 2.0 * std::numbers::pi / count;
  start_ = orientation == BinOrientation::kAxisCentered ? -std::numbers::pi / count : 0.0;
}

double DirectionBinning::lower_bound(int bin) const { return start_ + bin * width_; }

int DirectionBinning::bin_of(double theta) const {
  int bin = static_cast<int>(std::floor((theta - start_) / width_));
  // Division can land a hair off an exact boundary; settle against the edges.
  if (theta >= lower_bound(bin + 1)) ++bin;
  if (theta < lower_bound(bin)) --bin;
  bin %= count_;
  if (bin < 0) bin += count_;
  return bin;
}

BlockGrid::BlockGrid(int blocks_per_side, int size) : blocks_(blocks_per_side), size_(size) {
  if (blocks_per_side < 1 || size < blocks_per_side) {
    throw SpotError("block grid needs 1 <= b <= size (b=" + std::to_string(blocks_per_side) +
                    ", size=" + std::to_string(size) + ")");
  }
  base_ = size / blocks_per_side;
}

int BlockGrid::cell_of(int pixel) const {
  if (pixel < 0 || pixel >= size_) throw SpotError("pixel outside block grid");
  return std::min(pixel / base_, blocks_ - 1);
}

MainDirection main_direction(std::span<const double> theta, const DirectionBinning& binning) {
  if (theta.empty()) throw SpotError("main_direction: no vectors");
  std::vector<int> bins(theta.size());
  std::vector<std::size_t> counts(binning.count(), 0);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    bins[i] = binning.bin_of(theta[i]);
    ++counts[bins[i]];
  }
  MainDirection result;
  result.bin = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  result.members.reserve(counts[result.bin]);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (bins[i] == result.bin) result.members.push_back(i);
  }
  return result;
}

double maximal_difference(std::span<const double> rho_hc, std::span<const double> rho_ht) {
  if (rho_hc.empty()) throw SpotError("maximal_difference: no vectors");
  if (rho_hc.size() != rho_ht.size()) throw SpotError("maximal_difference: unpaired magnitudes");
  std::vector<double> diffs(rho_hc.size());
  for (std::size_t i = 0; i < diffs.size(); ++i) diffs[i] = rho_hc[i] - rho_ht[i];
  const std::size_t m = std::max<std::size_t>(1, diffs.size() / 3);
  std::partial_sort(diffs.begin(), diffs.begin() + m, diffs.end(), std::greater<>());
  return std::accumulate(diffs.begin(), diffs.begin() + m, 0.0) / static_cast<double>(m);
}

double frame_feature(std::span<const double> block_values, int blocks_per_side) {
  const auto expected = static_cast<std::size_t>(blocks_per_side) * blocks_per_side;
  if (blocks_per_side < 1 || block_values.size() != expected) {
    throw SpotError("frame_feature: expected " + std::to_string(expected) + " block values, got " +
                    std::to_string(block_values.size()));
  }
  std::vector<double> values(block_values.begin(), block_values.end());
  const std::size_t top = std::max<std::size_t>(1, values.size() / 3);
  std::partial_sort(values.begin(), values.begin() + top, values.end(), std::greater<>());
  return std::accumulate(values.begin(), values.begin() + top, 0.0) / static_cast<double>(top);
}

std::vector<double> block_differences(const FlowField& head_current, const FlowField& head_tail,
                                      const BlockGrid& grid, const DirectionBinning& binning) {
  if (head_current.point_count() != head_tail.point_count() || head_current.stride != head_tail.stride ||
      head_current.cols != head_tail.cols) {
    throw SpotError("head-current and head-tail flow must share one sampling grid");
  }
  if (!head_current.has_polar() || !head_tail.has_polar()) throw SpotError("flow fields lack polar form");
  if (head_current.frame_width != grid.size() || head_current.frame_height != grid.size()) {
    throw SpotError("flow field size does not match the block grid");
  }

  std::vector<std::vector<std::size_t>> points(grid.block_count());
  for (int gy = 0; gy < head_current.rows; ++gy) {
    for (int gx = 0; gx < head_current.cols; ++gx) {
      points[grid.block_of(head_current.pixel_x(gx), head_current.pixel_y(gy))].push_back(
          head_current.index(gx, gy));
    }
  }

  std::vector<double> d(grid.block_count());
  std::vector<double> theta;
  std::vector<double> rho_hc;
  std::vector<double> rho_ht;
  for (int j = 0; j < grid.block_count(); ++j) {
    const auto& block = points[j];
    if (block.empty()) throw SpotError("block " + std::to_string(j) + " has no flow samples");
    theta.clear();
    for (std::size_t idx : block) theta.push_back(head_current.theta[idx]);
    const MainDirection main = main_direction(theta, binning);
    rho_hc.clear();
    rho_ht.clear();
    for (std::size_t member : main.members) {
      rho_hc.push_back(head_current.rho[block[member]]);
      rho_ht.push_back(head_tail.rho[block[member]]);
    }
    d[j] = maximal_difference(rho_hc, rho_ht);
  }
  return d;
}

IndexedSeries compute_dbar_series(const FrameSequence& seq, const MdmdConfig& config, const FlowBackend& backend) {
  const int n = seq.size();
  const int k = config.k;
  if (k < 1) throw SpotError("k must be >= 1");
  if (n <= 2 * k) {
    throw SpotError("video " + seq.video_id + " has " + std::to_string(n) + " frames, needs more than 2k = " +
                    std::to_string(2 * k));
  }
  IndexedSeries dbar;
  dbar.first = k + 1;
  dbar.values.reserve(static_cast<std::size_t>(n - 2 * k));
  for (int i = k + 1; i <= n - k; ++i) {
    FlowField head_current = backend.estimate(seq.frame(i - k), seq.frame(i));
    FlowField head_tail = backend.estimate(seq.frame(i - k), seq.frame(i + k));
    if (!head_current.has_polar()) to_polar(head_current);
    if (!head_tail.has_polar()) to_polar(head_tail);
    const auto d = block_differences(head_current, head_tail, config.grid, config.binning);
    dbar.values.push_back(frame_feature(d, config.grid.blocks_per_side()));
  }
  return dbar;
}

IndexedSeries relative_difference(const IndexedSeries& dbar, int k) {
  if (k < 1) throw SpotError("k must be >= 1");
  // Both i-k+1 and i+k-1 must lie in [first, last].
  const int first = dbar.first + k - 1;
  const int last = dbar.last() - (k - 1);
  if (dbar.empty() || first > last) {
    throw SpotError("relative difference range is empty for k = " + std::to_string(k));
  }
  IndexedSeries r;
  r.first = first;
  r.values.reserve(static_cast<std::size_t>(last - first + 1));
  for (int i = first; i <= last; ++i) {
    r.values.push_back(dbar.at(i) - 0.5 * (dbar.at(i - k + 1) + dbar.at(i + k - 1)));
  }
  return r;
}

ThresholdResult threshold_and_flag(const IndexedSeries& r, double p) {
  if (r.empty()) throw SpotError("threshold_and_flag: empty r series");
  if (!(p >= 0.0 && p <= 1.0)) throw SpotError("p must lie in [0, 1]");
  ThresholdResult result;
  const auto [lo, hi] = std::minmax_element(r.values.begin(), r.values.end());
  result.max = *hi;
  // A constant series must not flag anything, whatever the summation rounding.
  result.mean = *lo == *hi ? *hi : std::accumulate(r.values.begin(), r.values.end(), 0.0) / r.size();
  // Clamped at max so rounding can never push the p = 1 threshold below it;
  // non-decreasing in p either way.
  result.threshold = p == 1.0 ? result.max : std::min(result.max, result.mean + p * (result.max - result.mean));
  for (int i = r.first; i <= r.last(); ++i) {
    if (r.at(i) > result.threshold) result.flags.push_back(i);
  }
  return result;
}

void write_feature_dump(std::ostream& out, const FrameFeatureSeries& series) {
  out << "frame,dbar,r,flagged\n";
  const auto& flags = series.threshold.flags;
  for (int i = series.dbar.first; i <= series.dbar.last(); ++i) {
    out << i << ',' << series.dbar.at(i) << ',';
    if (series.r.contains(i)) out << series.r.at(i);
    out << ',' << (std::binary_search(flags.begin(), flags.end(), i) ? 1 : 0) << '\n';
  }
}

}  // namespace mdmd
