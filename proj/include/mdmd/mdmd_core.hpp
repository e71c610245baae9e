#pragma once

#include <span>
#include <string>
#include <vector>

#include "mdmd/frame_ingest.hpp"
#include "mdmd/optical_flow.hpp"

namespace mdmd {

enum class BinOrientation {
  kAxisCentered,  // bin 0 = [-pi/a, pi/a)
  kQuadrant,      // bin 0 = [0, 2pi/a)
};

// `count` equal sectors of width 2pi/count partitioning [-pi, pi). Sectors
// are half-open: a value on a boundary belongs to the sector it starts.
class DirectionBinning {
 public:
  explicit DirectionBinning(int count, BinOrientation orientation = BinOrientation::kAxisCentered);

  int count() const { return count_; }
  BinOrientation orientation() const { return orientation_; }
  int bin_of(double theta) const;
  double lower_bound(int bin) const;  // start angle of the sector, unwrapped

 private:
  int count_;
  BinOrientation orientation_;
  double start_;  // lower edge of bin 0
  double width_;
};

// b x b tiling of a size x size crop. Blocks are floor(size/b) wide; the
// last row and column absorb the remainder.
class BlockGrid {
 public:
  BlockGrid(int blocks_per_side, int size);

  int blocks_per_side() const { return blocks_; }
  int size() const { return size_; }
  int block_count() const { return blocks_ * blocks_; }
  int cell_of(int pixel) const;  // block row/column of a pixel coordinate
  int block_of(int x, int y) const { return cell_of(y) * blocks_ + cell_of(x); }
  int cell_begin(int cell) const { return cell * base_; }
  int cell_end(int cell) const { return cell + 1 == blocks_ ? size_ : (cell + 1) * base_; }

 private:
  int blocks_;
  int size_;
  int base_;
};

struct MainDirection {
  int bin = 0;
  std::vector<std::size_t> members;  // indices into the input, ascending
};

/// Bin with the most vectors (lowest index on ties) and its members.
MainDirection main_direction(std::span<const double> theta, const DirectionBinning& binning);

/// Mean of the largest max(1, floor(g/3)) values of rho_hc[i] - rho_ht[i].
double maximal_difference(std::span<const double> rho_hc, std::span<const double> rho_ht);

/// Mean of the largest max(1, floor(b^2/3)) block differences.
double frame_feature(std::span<const double> block_values, int blocks_per_side);

// Values for the contiguous 1-based frame range [first, first + size()).
struct IndexedSeries {
  int first = 0;
  std::vector<double> values;

  int size() const { return static_cast<int>(values.size()); }
  int last() const { return first + size() - 1; }
  bool empty() const { return values.empty(); }
  bool contains(int index) const { return index >= first && index <= last(); }
  double at(int index) const { return values.at(static_cast<std::size_t>(index - first)); }
};

struct MdmdConfig {
  int k = 0;
  BlockGrid grid{6, 227};
  DirectionBinning binning{4};
};

/// Per-block maximal differences d_j for one frame triple (head/current/tail)
/// given the head->current and head->tail flow fields.
std::vector<double> block_differences(const FlowField& head_current, const FlowField& head_tail,
                                      const BlockGrid& grid, const DirectionBinning& binning);

/// dbar for every frame i in [k+1, n-k]. Throws if n <= 2k.
IndexedSeries compute_dbar_series(const FrameSequence& seq, const MdmdConfig& config, const FlowBackend& backend);

/// r_i = dbar_i - (dbar_{i-k+1} + dbar_{i+k-1}) / 2 on the indices where both
/// neighbours exist. Throws if that range is empty.
IndexedSeries relative_difference(const IndexedSeries& dbar, int k);

struct ThresholdResult {
  double mean = 0.0;
  double max = 0.0;
  double threshold = 0.0;
  std::vector<int> flags;  // frame indices with r > threshold, ascending
};

/// threshold = mean + p * (max - mean) over the whole r series.
ThresholdResult threshold_and_flag(const IndexedSeries& r, double p);

struct FrameFeatureSeries {
  std::string video_id;
  int k = 0;
  IndexedSeries dbar;
  IndexedSeries r;
  ThresholdResult threshold;
};

/// Writes `frame,dbar,r,flagged` rows for every frame with a dbar value.
void write_feature_dump(std::ostream& out, const FrameFeatureSeries& series);

}  // namespace mdmd
