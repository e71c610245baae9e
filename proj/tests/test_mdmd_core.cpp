#include <doctest.h>

#include <random>
#include <sstream>

#include "mdmd/mdmd_core.hpp"
#include "support.hpp"

using namespace mdmd;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

IndexedSeries series(int first, std::vector<double> values) { return IndexedSeries{first, std::move(values)}; }

std::map<int, double> as_map(const IndexedSeries& s) {
  std::map<int, double> m;
  for (int i = s.first; i <= s.last(); ++i) m[i] = s.at(i);
  return m;
}

// Uniform flow whose u component is the intensity difference of the two
// frames' top-left pixels, so d-bar has a closed form in those intensities.
class IntensityStepBackend final : public FlowBackend {
 public:
  std::string name() const override { return "intensity-step"; }
  FlowField estimate(const cv::Mat& a, const cv::Mat& b) const override {
    FlowField f = FlowField::zeros(a.cols, a.rows, 1);
    const double du = static_cast<double>(b.at<std::uint8_t>(0, 0)) - a.at<std::uint8_t>(0, 0);
    std::fill(f.u.begin(), f.u.end(), du);
    to_polar(f);
    return f;
  }
};

FrameSequence constant_frames(const std::vector<int>& levels, int size) {
  FrameSequence seq;
  seq.video_id = "v";
  seq.fps = 30;
  for (int level : levels) seq.frames.emplace_back(size, size, CV_8UC1, cv::Scalar(level));
  return seq;
}

}  // namespace

TEST_CASE("direction bins are axis-centred and half-open") {
  const DirectionBinning bins(4);
  CHECK(bins.bin_of(0.0) == 0);
  CHECK(bins.bin_of(-std::numbers::pi / 4) == 0);
  CHECK(bins.bin_of(std::numbers::pi / 4) == 1);
  CHECK(bins.bin_of(std::numbers::pi / 2) == 1);
  CHECK(bins.bin_of(std::numbers::pi * 3 / 4) == 2);
  CHECK(bins.bin_of(-std::numbers::pi) == 2);
  CHECK(bins.bin_of(-std::numbers::pi / 2) == 3);
  CHECK(bins.bin_of(std::nextafter(-std::numbers::pi / 4, -4.0)) == 3);

  const DirectionBinning quadrant(4, BinOrientation::kQuadrant);
  CHECK(quadrant.bin_of(0.0) == 0);
  CHECK(quadrant.bin_of(-0.1) == 3);
  CHECK(quadrant.bin_of(std::numbers::pi / 2) == 1);
  CHECK(quadrant.bin_of(-std::numbers::pi) == 2);
}

TEST_CASE("block grid folds the remainder into the last block") {
  const BlockGrid grid(6, 227);
  CHECK(grid.cell_begin(5) == 185);
  CHECK(grid.cell_end(5) == 227);
  CHECK(grid.cell_end(4) == 185);
  CHECK(grid.cell_of(184) == 4);
  CHECK(grid.cell_of(185) == 5);
  CHECK(grid.cell_of(226) == 5);
  CHECK(grid.block_of(0, 226) == 30);
  CHECK_THROWS_AS(grid.cell_of(227), SpotError);
  CHECK_THROWS_AS(BlockGrid(8, 7), SpotError);
}

TEST_CASE("main_direction examples") {
  const DirectionBinning bins(4);
  const std::vector<double> mostly_right{10 * kDeg, 20 * kDeg, 15 * kDeg, 100 * kDeg};
  const auto md = main_direction(mostly_right, bins);
  CHECK(md.bin == 0);
  CHECK(md.members == std::vector<std::size_t>{0, 1, 2});

  const std::vector<double> up(5, 90 * kDeg);
  CHECK(main_direction(up, bins).bin == 1);
  CHECK(main_direction(up, bins).members.size() == 5);

  const std::vector<double> tie{0.0, 0.1, 90 * kDeg, 91 * kDeg};
  CHECK(main_direction(tie, bins).bin == 0);
  CHECK_THROWS_AS(main_direction(std::vector<double>{}, bins), SpotError);
}

TEST_CASE("maximal_difference and frame_feature examples") {
  const std::vector<double> hc{6, 4, 2, 1, 0, -1};
  const std::vector<double> zeros(6, 0.0);
  CHECK(maximal_difference(hc, zeros) == 5.0);
  CHECK(maximal_difference(std::vector<double>{5.0}, std::vector<double>{2.0}) == 3.0);
  CHECK(maximal_difference(std::vector<double>(7, 2.5), std::vector<double>(7, 1.0)) == 1.5);
  CHECK_THROWS_AS(maximal_difference(hc, std::vector<double>{1.0}), SpotError);

  std::vector<double> blocks(36, 0.0);
  std::fill(blocks.begin(), blocks.begin() + 12, 3.0);
  CHECK(frame_feature(blocks, 6) == 3.0);
  CHECK(frame_feature(std::vector<double>(36, 0.7), 6) == doctest::Approx(0.7));
  CHECK(frame_feature(std::vector<double>{7.0}, 1) == 7.0);
  CHECK_THROWS_AS(frame_feature(std::vector<double>(35, 0.0), 6), SpotError);
}

TEST_CASE("main_direction matches the sector-scan oracle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_int_distribution<int> size(1, 60);
  std::uniform_int_distribution<int> count(1, 8);
  for (int trial = 0; trial < 2000; ++trial) {
    const int a = count(rng);
    const auto orientation = trial % 2 ? BinOrientation::kQuadrant : BinOrientation::kAxisCentered;
    const double start = orientation == BinOrientation::kQuadrant ? 0.0 : oracle::axis_start(a);
    std::vector<double> theta(size(rng));
    for (auto& t : theta) t = angle(rng);
    // sprinkle exact sector edges and the zero vector's direction
    if (trial % 3 == 0) theta[0] = start + 2.0 * std::numbers::pi / a;
    if (trial % 5 == 0) theta.back() = 0.0;
    const auto got = main_direction(theta, DirectionBinning(a, orientation));
    const auto want = oracle::main_direction(theta, a, start);
    REQUIRE(got.bin == want.bin);
    REQUIRE(got.members == want.members);
  }
}

TEST_CASE("main_direction does not depend on input order") {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> pick(0, 7);
  const DirectionBinning bins(4);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> theta(12);
    for (auto& t : theta) t = -std::numbers::pi + pick(rng) * std::numbers::pi / 4;  // many ties
    const int bin = main_direction(theta, bins).bin;
    std::shuffle(theta.begin(), theta.end(), rng);
    CHECK(main_direction(theta, bins).bin == bin);
  }
}

TEST_CASE("maximal_difference and frame_feature match repeated-max oracles") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> mag(0.0, 12.0);
  std::uniform_int_distribution<int> size(1, 200);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> hc(size(rng));
    std::vector<double> ht(hc.size());
    for (std::size_t i = 0; i < hc.size(); ++i) {
      hc[i] = mag(rng);
      ht[i] = trial % 4 == 0 ? std::round(mag(rng)) : mag(rng);
    }
    REQUIRE(std::abs(maximal_difference(hc, ht) - oracle::maximal_difference(hc, ht)) <= 1e-9);
  }
  std::uniform_int_distribution<int> grid(1, 9);
  std::uniform_real_distribution<double> value(-3.0, 8.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const int b = grid(rng);
    std::vector<double> blocks(static_cast<std::size_t>(b * b));
    for (auto& v : blocks) v = value(rng);
    REQUIRE(std::abs(frame_feature(blocks, b) - oracle::frame_feature(blocks, b)) <= 1e-9);
  }
}

TEST_CASE("block_differences applies main direction per block") {
  const BlockGrid grid(2, 4);
  FlowField hc = FlowField::zeros(4, 4, 1);
  FlowField ht = FlowField::zeros(4, 4, 1);
  // Top-left block: three right-pointing vectors with HC magnitude 2, 4, 6
  // and one upward vector; HT magnitudes 1 each.
  hc.u[hc.index(0, 0)] = 2;
  hc.u[hc.index(1, 0)] = 4;
  hc.u[hc.index(0, 1)] = 6;
  hc.v[hc.index(1, 1)] = -9;
  for (int gy = 0; gy < 2; ++gy) {
    for (int gx = 0; gx < 2; ++gx) ht.u[ht.index(gx, gy)] = 1;
  }
  // Bottom-right block: all HT motion, no HC motion.
  for (int gy = 2; gy < 4; ++gy) {
    for (int gx = 2; gx < 4; ++gx) ht.u[ht.index(gx, gy)] = 3;
  }
  to_polar(hc);
  to_polar(ht);
  const auto d = block_differences(hc, ht, grid, DirectionBinning(4));
  REQUIRE(d.size() == 4);
  CHECK(d[0] == 5.0);   // members {2,4,6} - 1, top floor(3/3) = 1 -> 5
  CHECK(d[1] == 0.0);
  CHECK(d[2] == 0.0);
  CHECK(d[3] == -3.0);  // all zero-HC vectors sit in bin 0
}

TEST_CASE("relative_difference examples") {
  const auto flat = relative_difference(series(5, std::vector<double>(20, 2.5)), 4);
  for (double v : flat.values) CHECK(v == 0.0);

  std::vector<double> spike(30, 0.0);
  const int first = 13;
  const int i0 = 28;
  spike[i0 - first] = 1.75;
  const int k = 5;
  const auto r = relative_difference(series(first, spike), k);
  CHECK(r.first == first + k - 1);
  CHECK(r.last() == first + 29 - (k - 1));
  CHECK(r.at(i0) == 1.75);
  CHECK(r.at(i0 - (k - 1)) == -0.875);
  CHECK(r.at(i0 + (k - 1)) == -0.875);
  CHECK(r.at(i0 + 1) == 0.0);

  const auto degenerate = relative_difference(series(2, {1.0, 5.0, -2.0}), 1);
  for (double v : degenerate.values) CHECK(v == 0.0);
  CHECK(degenerate.size() == 3);

  CHECK_THROWS_AS(relative_difference(series(13, std::vector<double>(4, 0.0)), 3), SpotError);
}

TEST_CASE("relative_difference matches the map oracle") {
  std::mt19937_64 rng(14);
  std::uniform_int_distribution<int> first(2, 300);
  std::uniform_int_distribution<int> size(1, 90);
  std::uniform_int_distribution<int> kk(1, 30);
  std::uniform_real_distribution<double> value(0.0, 5.0);
  int checked = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    IndexedSeries d = series(first(rng), std::vector<double>(size(rng)));
    for (auto& v : d.values) v = value(rng);
    const int k = kk(rng);
    const auto want = oracle::relative_difference(as_map(d), k);
    if (want.empty()) {
      CHECK_THROWS_AS(relative_difference(d, k), SpotError);
      continue;
    }
    const auto got = as_map(relative_difference(d, k));
    REQUIRE(got.size() == want.size());
    for (const auto& [i, v] : want) REQUIRE(std::abs(got.at(i) - v) <= 1e-9);
    ++checked;
  }
  CHECK(checked >= 1000);
}

TEST_CASE("threshold_and_flag examples") {
  const auto t = threshold_and_flag(series(24, {0, 1, 2, 3}), 0.5);
  CHECK(t.mean == 1.5);
  CHECK(t.max == 3.0);
  CHECK(t.threshold == 2.25);
  CHECK(t.flags == std::vector<int>{27});

  CHECK(threshold_and_flag(series(1, {0.1, 0.7, 0.3}), 1.0).flags.empty());
  CHECK(threshold_and_flag(series(1, {0.1, 0.7, 0.3}), 1.0).threshold == 0.7);
  const auto constant = threshold_and_flag(series(1, std::vector<double>(9, 0.2)), 0.0);
  CHECK(constant.threshold == constant.max);
  CHECK(constant.flags.empty());
  CHECK(threshold_and_flag(series(1, {0.0, 1.0}), 0.0).flags == std::vector<int>{2});
  CHECK_THROWS_AS(threshold_and_flag(series(1, {1.0}), 1.5), SpotError);
  CHECK_THROWS_AS(threshold_and_flag(series(1, {1.0}), -0.1), SpotError);
}

TEST_CASE("threshold_and_flag matches the oracle away from the threshold") {
  std::mt19937_64 rng(15);
  std::uniform_int_distribution<int> size(1, 120);
  std::uniform_real_distribution<double> value(-2.0, 2.0);
  std::uniform_real_distribution<double> pp(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    IndexedSeries r = series(1 + trial % 50, std::vector<double>(size(rng)));
    for (auto& v : r.values) v = value(rng);
    const double p = trial % 10 == 0 ? (trial % 20 == 0 ? 0.0 : 1.0) : pp(rng);
    const auto got = threshold_and_flag(r, p);
    const auto want = oracle::threshold_and_flag(as_map(r), p);
    REQUIRE(std::abs(got.threshold - want.threshold) <= 1e-9);
    for (int i = r.first; i <= r.last(); ++i) {
      if (std::abs(r.at(i) - want.threshold) <= 1e-9) continue;
      const bool want_flag = std::binary_search(want.flags.begin(), want.flags.end(), i);
      const bool got_flag = std::binary_search(got.flags.begin(), got.flags.end(), i);
      REQUIRE(want_flag == got_flag);
    }
  }
}

TEST_CASE("flags shrink as p grows and ignore positive scaling") {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> value(-1.0, 3.0);
  std::uniform_real_distribution<double> scale(0.05, 20.0);
  for (int trial = 0; trial < 200; ++trial) {
    IndexedSeries r = series(24, std::vector<double>(40));
    for (auto& v : r.values) v = value(rng);
    IndexedSeries scaled = r;
    const double c = scale(rng);
    for (auto& v : scaled.values) v *= c;
    std::vector<int> previous = threshold_and_flag(r, 0.0).flags;
    for (int step = 0; step <= 20; ++step) {
      const double p = step * 0.05;
      const auto flags = threshold_and_flag(r, p).flags;
      CHECK(std::includes(previous.begin(), previous.end(), flags.begin(), flags.end()));
      CHECK(threshold_and_flag(scaled, p).flags == flags);
      previous = flags;
    }
  }
}

TEST_CASE("compute_dbar_series follows the head/current/tail definition") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> level(0, 255);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> levels(30);
    for (auto& l : levels) l = level(rng);
    const FrameSequence seq = constant_frames(levels, 12);
    const int k = 1 + trial % 6;
    MdmdConfig config{k, BlockGrid(3, 12), DirectionBinning(4)};
    const auto dbar = compute_dbar_series(seq, config, IntensityStepBackend());
    CHECK(dbar.first == k + 1);
    CHECK(dbar.last() == 30 - k);
    for (int i = k + 1; i <= 30 - k; ++i) {
      const double hc = std::abs(levels[i - 1] - levels[i - k - 1]);
      const double ht = std::abs(levels[i + k - 1] - levels[i - k - 1]);
      CHECK(dbar.at(i) == hc - ht);
    }
  }
}

TEST_CASE("static video gives zero d-bar, zero r and no flags") {
  const FrameSequence seq = constant_frames(std::vector<int>(20, 90), 24);
  MdmdConfig config{3, BlockGrid(6, 24), DirectionBinning(4)};
  const auto dbar = compute_dbar_series(seq, config, ReferenceFlowBackend({2, 2, 1, true}));
  for (double v : dbar.values) CHECK(v == 0.0);
  const auto r = relative_difference(dbar, 3);
  for (double v : r.values) CHECK(v == 0.0);
  for (double p : {0.0, 0.01, 0.5, 1.0}) CHECK(threshold_and_flag(r, p).flags.empty());
}

TEST_CASE("too-short videos are rejected") {
  const FrameSequence seq = constant_frames(std::vector<int>(8, 0), 12);
  MdmdConfig config{4, BlockGrid(3, 12), DirectionBinning(4)};
  CHECK_THROWS_AS(compute_dbar_series(seq, config, IntensityStepBackend()), SpotError);
  config.k = 3;
  CHECK(compute_dbar_series(seq, config, IntensityStepBackend()).size() == 2);
}

TEST_CASE("feature dump lists every d-bar frame") {
  FrameFeatureSeries s;
  s.video_id = "v";
  s.k = 2;
  s.dbar = series(3, {0.5, 1.0, 0.25, 0.0});
  s.r = relative_difference(s.dbar, 2);
  s.threshold = threshold_and_flag(s.r, 0.0);
  std::ostringstream out;
  write_feature_dump(out, s);
  const std::string text = out.str();
  CHECK(text.rfind("frame,dbar,r,flagged\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);
}
