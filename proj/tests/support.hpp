#pragma once

// Independent brute-force references and small fixtures shared by the unit
// tests and the acceptance runner. Nothing here calls into the code it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include "mdmd/face_crop.hpp"
#include "mdmd/frame_ingest.hpp"
#include "mdmd/mdmd_core.hpp"

namespace oracle {

// Sector of theta among `count` sectors whose first one starts at `start`,
// found by testing each sector against the shifted copies of theta.
inline int sector_of(double theta, int count, double start) {
  const double width = 2.0 * std::numbers::pi / count;
  for (int j = 0; j < count; ++j) {
    const double lo = start + j * width;
    const double hi = start + (j + 1) * width;
    for (double shift : {-2.0 * std::numbers::pi, 0.0, 2.0 * std::numbers::pi}) {
      const double t = theta + shift;
      if (t >= lo && t < hi) return j;
    }
  }
  return -1;
}

inline double axis_start(int count) { return -std::numbers::pi / count; }

struct Dominant {
  int bin = 0;
  std::vector<std::size_t> members;
};

inline Dominant main_direction(const std::vector<double>& theta, int count, double start) {
  std::vector<std::vector<std::size_t>> buckets(count);
  for (std::size_t i = 0; i < theta.size(); ++i) buckets[sector_of(theta[i], count, start)].push_back(i);
  Dominant best;
  std::size_t best_size = 0;
  for (int j = 0; j < count; ++j) {
    if (j == 0 || buckets[j].size() > best_size) {
      best.bin = j;
      best.members = buckets[j];
      best_size = buckets[j].size();
    }
  }
  return best;
}

// Mean of the m largest values, by repeated extraction of the maximum.
inline double mean_of_top(std::vector<double> values, std::size_t m) {
  long double sum = 0.0L;
  for (std::size_t taken = 0; taken < m; ++taken) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
      if (values[i] > values[arg]) arg = i;
    }
    sum += values[arg];
    values.erase(values.begin() + static_cast<std::ptrdiff_t>(arg));
  }
  return static_cast<double>(sum / static_cast<long double>(m));
}

inline double maximal_difference(const std::vector<double>& hc, const std::vector<double>& ht) {
  std::vector<double> diff;
  for (std::size_t i = 0; i < hc.size(); ++i) diff.push_back(hc[i] - ht[i]);
  const std::size_t m = std::max<std::size_t>(1, hc.size() / 3);
  return mean_of_top(diff, m);
}

inline double frame_feature(const std::vector<double>& blocks, int b) {
  const std::size_t m = std::max<std::size_t>(1, static_cast<std::size_t>(b * b) / 3);
  return mean_of_top(blocks, m);
}

// r from an explicit frame -> value map.
inline std::map<int, double> relative_difference(const std::map<int, double>& dbar, int k) {
  std::map<int, double> r;
  for (const auto& [i, value] : dbar) {
    const auto before = dbar.find(i - k + 1);
    const auto after = dbar.find(i + k - 1);
    if (before != dbar.end() && after != dbar.end()) r[i] = value - 0.5 * (before->second + after->second);
  }
  return r;
}

struct Flagging {
  double threshold = 0.0;
  std::vector<int> flags;
};

inline Flagging threshold_and_flag(const std::map<int, double>& r, double p) {
  long double sum = 0.0L;
  double mx = -INFINITY;
  for (const auto& [i, value] : r) {
    sum += value;
    mx = std::max(mx, value);
  }
  const double mean = static_cast<double>(sum / static_cast<long double>(r.size()));
  Flagging out;
  out.threshold = mean + p * (mx - mean);
  for (const auto& [i, value] : r) {
    if (value > out.threshold) out.flags.push_back(i);
  }
  return out;
}

// Max-cardinality matching over the IoU >= k graph by exhaustive search.
inline int max_matching(const std::vector<std::pair<int, int>>& spotted, const std::vector<std::pair<int, int>>& truth,
                        double k_iou) {
  auto iou = [](std::pair<int, int> a, std::pair<int, int> b) {
    const int inter = std::max(0, std::min(a.second, b.second) - std::max(a.first, b.first) + 1);
    const int uni = (a.second - a.first + 1) + (b.second - b.first + 1) - inter;
    return static_cast<double>(inter) / uni;
  };
  std::vector<bool> used(truth.size(), false);
  std::function<int(std::size_t)> best = [&](std::size_t i) -> int {
    if (i == spotted.size()) return 0;
    int result = best(i + 1);
    for (std::size_t j = 0; j < truth.size(); ++j) {
      if (!used[j] && iou(spotted[i], truth[j]) >= k_iou) {
        used[j] = true;
        result = std::max(result, 1 + best(i + 1));
        used[j] = false;
      }
    }
    return result;
  };
  return best(0);
}

// Exhaustive integer block matching with edge-clamped sampling and the
// (smallest magnitude, smallest direction) tie-break.
struct IntegerFlow {
  std::vector<int> du;
  std::vector<int> dv;
};

inline IntegerFlow block_match(const cv::Mat& a, const cv::Mat& b, int w, int s) {
  auto px = [](const cv::Mat& m, int x, int y) {
    return static_cast<long long>(m.at<std::uint8_t>(std::clamp(y, 0, m.rows - 1), std::clamp(x, 0, m.cols - 1)));
  };
  auto direction = [](int du, int dv) {
    if (du == 0 && dv == 0) return 0.0;
    double t = std::atan2(-static_cast<double>(dv), static_cast<double>(du));
    if (t >= std::numbers::pi) t -= 2.0 * std::numbers::pi;
    return t;
  };
  IntegerFlow out;
  for (int y = 0; y < a.rows; ++y) {
    for (int x = 0; x < a.cols; ++x) {
      long long best = -1;
      int bu = 0, bv = 0;
      for (int dv = -s; dv <= s; ++dv) {
        for (int du = -s; du <= s; ++du) {
          long long cost = 0;
          for (int qy = -w; qy <= w; ++qy) {
            for (int qx = -w; qx <= w; ++qx) {
              const long long d = px(a, x + qx, y + qy) - px(b, x + qx + du, y + qy + dv);
              cost += d * d;
            }
          }
          const int r2 = du * du + dv * dv;
          const int b2 = bu * bu + bv * bv;
          const bool better = best < 0 || cost < best ||
                              (cost == best && (r2 < b2 || (r2 == b2 && direction(du, dv) < direction(bu, bv))));
          if (better) {
            best = cost;
            bu = du;
            bv = dv;
          }
        }
      }
      out.du.push_back(bu);
      out.dv.push_back(bv);
    }
  }
  return out;
}

}  // namespace oracle

namespace fixture {

// Smoothed random texture in [30, 225], larger than needed so shifted
// windows can be cut from it.
inline cv::Mat texture(int width, int height, std::uint64_t seed, double blur = 1.5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  cv::Mat noise(height, width, CV_64FC1);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) noise.at<double>(y, x) = uniform(rng);
  }
  cv::Mat smooth;
  cv::GaussianBlur(noise, smooth, cv::Size(0, 0), blur);
  cv::normalize(smooth, smooth, 30.0, 225.0, cv::NORM_MINMAX);
  cv::Mat out;
  smooth.convertTo(out, CV_8UC1);
  return out;
}

// Pair (A, B) with B(x, y) = A(x - tx, y - ty): content moves by (tx, ty).
inline std::pair<cv::Mat, cv::Mat> translated_pair(int size, int tx, int ty, std::uint64_t seed) {
  const int margin = 16;
  const cv::Mat big = texture(size + 2 * margin, size + 2 * margin, seed);
  const cv::Mat a = big(cv::Rect(margin, margin, size, size)).clone();
  const cv::Mat b = big(cv::Rect(margin - tx, margin - ty, size, size)).clone();
  return {a, b};
}

inline mdmd::LandmarkPoints random_landmarks(std::mt19937_64& rng, double lo = 40.0, double hi = 400.0) {
  std::uniform_real_distribution<double> coord(lo, hi);
  mdmd::LandmarkPoints pts{};
  for (auto& p : pts) p = {coord(rng), coord(rng)};
  // Keep the brow above the eye corner, as on a face.
  auto& brow = pts[mdmd::kBrowLandmark - 1];
  auto& eye = pts[mdmd::kEyeCornerLandmark - 1];
  if (brow.y > eye.y) std::swap(brow.y, eye.y);
  return pts;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("mdmd_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace fixture
