#include "mdmd/optical_flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <type_traits>

#include <opencv2/core.hpp>

#include "mdmd/common.hpp"

namespace mdmd {

namespace {

struct Offset {
  int du;
  int dv;
  int rho2;
  double theta;
};

// Candidate offsets in tie-break order: scanning in this order and replacing
// only on strictly lower cost picks the smallest rho, then smallest theta.
std::vector<Offset> ordered_offsets(int search_radius) {
  std::vector<Offset> offsets;
  for (int dv = -search_radius; dv <= search_radius; ++dv) {
    for (int du = -search_radius; du <= search_radius; ++du) {
      offsets.push_back({du, dv, du * du + dv * dv, flow_direction(du, dv)});
    }
  }
  std::sort(offsets.begin(), offsets.end(), [](const Offset& a, const Offset& b) {
    if (a.rho2 != b.rho2) return a.rho2 < b.rho2;
    return a.theta < b.theta;
  });
  return offsets;
}

// Edge-replicated copy of `frame` with `pad` extra pixels on every side.
struct PaddedImage {
  int pad = 0;
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> pixels;

  PaddedImage(const cv::Mat& frame, int pad_) : pad(pad_), width(frame.cols + 2 * pad_), height(frame.rows + 2 * pad_) {
    pixels.resize(static_cast<std::size_t>(width) * height);
    for (int y = 0; y < height; ++y) {
      const int sy = std::clamp(y - pad, 0, frame.rows - 1);
      const auto* src = frame.ptr<std::uint8_t>(sy);
      auto* dst = &pixels[static_cast<std::size_t>(y) * width];
      for (int x = 0; x < width; ++x) dst[x] = src[std::clamp(x - pad, 0, frame.cols - 1)];
    }
  }

  // Sample at original-image coordinates (may lie in the padding).
  std::int32_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y + pad) * width + (x + pad)]; }
};

std::int64_t patch_ssd(const PaddedImage& a, const PaddedImage& b, int x, int y, int du, int dv, int w) {
  std::int64_t sum = 0;
  for (int qy = -w; qy <= w; ++qy) {
    for (int qx = -w; qx <= w; ++qx) {
      const std::int64_t diff = a.at(x + qx, y + qy) - b.at(x + qx + du, y + qy + dv);
      sum += diff * diff;
    }
  }
  return sum;
}

struct MatchBuffers {
  const PaddedImage& a;
  const PaddedImage& b;
  int s;
  int span;
  int width;
  int height;
  int stride;
  int cols;
  std::int32_t* best_cost;
  std::int32_t* best_offset;  // index into the ordered offsets
  std::int32_t* diff2;
  std::int32_t* row_sums;
  std::int32_t* column_acc;
};

// Scores one candidate offset at every grid point and keeps strict
// improvements. Window row sums live in a ring of `span` rows so the working
// set stays in L1.
void match_offset(const MatchBuffers& m, int off_du, int off_dv, std::int32_t off_index) {
  const PaddedImage& a = m.a;
  const PaddedImage& b = m.b;
  const int width = m.width;
  const int span = m.span;
  std::int32_t* diff2 = m.diff2;
  auto row_sum = [&](int y, std::int32_t* out) {
    const std::int32_t* pa = &a.pixels[static_cast<std::size_t>(y) * a.width];
    const std::int32_t* pb = &b.pixels[static_cast<std::size_t>(y + off_dv + m.s + 1) * b.width + (off_du + m.s + 1)];
    for (int x = 0; x < a.width; ++x) {
      const std::int32_t d = pa[x] - pb[x];
      diff2[x] = d * d;
    }
    // Direct tap sums vectorize better than a running sum; the default
    // window (w = 4) gets a fixed tap count so the taps unroll in registers.
    if (span == 9) {
      for (int x = 0; x < width; ++x) {
        std::int32_t acc = 0;
        for (int j = 0; j < 9; ++j) acc += diff2[x + j];
        out[x] = acc;
      }
      return;
    }
    std::copy_n(diff2, width, out);
    for (int j = 1; j < span; ++j) {
      const std::int32_t* in = diff2 + j;
      for (int x = 0; x < width; ++x) out[x] += in[x];
    }
  };
  auto ring = [&](int y) { return m.row_sums + static_cast<std::size_t>(y % span) * width; };

  std::int32_t* column_acc = m.column_acc;
  std::fill_n(column_acc, width, 0);
  for (int i = 0; i < span; ++i) {
    row_sum(i, ring(i));
    const std::int32_t* in = ring(i);
    for (int x = 0; x < width; ++x) column_acc[x] += in[x];
  }
  const int step = m.stride;
  for (int y = 0; y < m.height; ++y) {
    if (y % step == 0) {
      const std::size_t base = static_cast<std::size_t>(y / step) * m.cols;
      std::int32_t* cost = m.best_cost + base;
      std::int32_t* best = m.best_offset + base;
      auto keep_better = [&](auto sample_step) {
        for (int gx = 0; gx < m.cols; ++gx) {
          const std::int32_t c = column_acc[gx * sample_step];
          const bool better = c < cost[gx];
          cost[gx] = better ? c : cost[gx];
          best[gx] = better ? off_index : best[gx];
        }
      };
      // The dense case gets a unit-stride loop the compiler can vectorize.
      if (step == 1) {
        keep_better(std::integral_constant<int, 1>{});
      } else {
        keep_better(step);
      }
    }
    if (y + 1 < m.height) {
      // Row y leaves the window and row y + span takes its ring slot.
      std::int32_t* slot = ring(y);
      for (int x = 0; x < width; ++x) column_acc[x] -= slot[x];
      row_sum(y + span, slot);
      for (int x = 0; x < width; ++x) column_acc[x] += slot[x];
    }
  }
}

double parabola_vertex(double c_minus, double c0, double c_plus) {
  const double denom = c_minus - 2.0 * c0 + c_plus;
  if (denom <= 0.0) return 0.0;
  return std::clamp((c_minus - c_plus) / (2.0 * denom), -0.5, 0.5);
}

}  // namespace

FlowField FlowField::zeros(int frame_width, int frame_height, int stride) {
  FlowField field;
  field.frame_width = frame_width;
  field.frame_height = frame_height;
  field.stride = stride;
  field.cols = (frame_width + stride - 1) / stride;
  field.rows = (frame_height + stride - 1) / stride;
  const std::size_t count = static_cast<std::size_t>(field.cols) * field.rows;
  field.u.assign(count, 0.0);
  field.v.assign(count, 0.0);
  return field;
}

double flow_direction(double u, double v) {
  if (u == 0.0 && v == 0.0) return 0.0;
  double theta = std::atan2(-v, u);
  if (theta >= std::numbers::pi) theta -= 2.0 * std::numbers::pi;
  return theta;
}

void to_polar(FlowField& field) {
  const std::size_t count = field.point_count();
  field.rho.resize(count);
  field.theta.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    field.rho[i] = std::hypot(field.u[i], field.v[i]);
    field.theta[i] = flow_direction(field.u[i], field.v[i]);
  }
}

cv::Point2d from_polar(double rho, double theta) { return {rho * std::cos(theta), -rho * std::sin(theta)}; }

int default_search_radius(int crop_size) { return static_cast<int>(std::ceil(0.05 * crop_size)); }

FlowField reference_flow(const cv::Mat& frame_a, const cv::Mat& frame_b, const ReferenceFlowParams& params) {
  if (frame_a.type() != CV_8UC1 || frame_b.type() != CV_8UC1) throw SpotError("reference_flow expects CV_8UC1 frames");
  if (frame_a.size() != frame_b.size()) throw SpotError("reference_flow: frame dimensions differ");
  if (frame_a.empty()) throw SpotError("reference_flow: empty frame");
  if (params.window_radius < 1 || params.search_radius < 1 || params.stride < 1) {
    throw SpotError("reference_flow: window radius, search radius and stride must be >= 1");
  }
  const int w = params.window_radius;
  const int s = params.search_radius;
  const int width = frame_a.cols;
  const int height = frame_a.rows;

  const PaddedImage a(frame_a, w);
  // One extra pixel so the refinement can probe just beyond the search range.
  const PaddedImage b(frame_b, w + s + 1);

  FlowField field = FlowField::zeros(width, height, params.stride);
  const std::size_t points = field.point_count();
  std::vector<std::int32_t> best_cost(points, std::numeric_limits<std::int32_t>::max());
  std::vector<std::int32_t> best_offset(points, 0);

  // Per-offset scratch: horizontal window sums of squared differences over
  // the padded A rows, then running vertical window sums at grid points.
  const int span = 2 * w + 1;
  std::vector<std::int32_t> diff2(a.width);
  std::vector<std::int32_t> row_sums(static_cast<std::size_t>(width) * span);
  std::vector<std::int32_t> column_acc(width);

  MatchBuffers buf{a, b, s, span, width, height, params.stride, field.cols, best_cost.data(),
                   best_offset.data(), diff2.data(), row_sums.data(), column_acc.data()};
  const std::vector<Offset> offsets = ordered_offsets(s);
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    match_offset(buf, offsets[i].du, offsets[i].dv, static_cast<std::int32_t>(i));
  }

  for (int gy = 0; gy < field.rows; ++gy) {
    for (int gx = 0; gx < field.cols; ++gx) {
      const std::size_t idx = field.index(gx, gy);
      const Offset& best = offsets[best_offset[idx]];
      double u = best.du;
      double v = best.dv;
      // An exact match (zero cost) is taken as the integer displacement.
      if (params.subpixel && best_cost[idx] > 0) {
        const int x = field.pixel_x(gx);
        const int y = field.pixel_y(gy);
        const int du = best.du;
        const int dv = best.dv;
        const double c0 = best_cost[idx];
        u += parabola_vertex(static_cast<double>(patch_ssd(a, b, x, y, du - 1, dv, w)), c0,
                             static_cast<double>(patch_ssd(a, b, x, y, du + 1, dv, w)));
        v += parabola_vertex(static_cast<double>(patch_ssd(a, b, x, y, du, dv - 1, w)), c0,
                             static_cast<double>(patch_ssd(a, b, x, y, du, dv + 1, w)));
      }
      field.u[idx] = u;
      field.v[idx] = v;
    }
  }
  to_polar(field);
  return field;
}

std::unique_ptr<FlowBackend> make_flow_backend(const std::string& name, const ReferenceFlowParams& params) {
  if (name == "reference") return std::make_unique<ReferenceFlowBackend>(params);
  throw SpotError("unknown flow backend '" + name + "' (available: reference)");
}

}  // namespace mdmd
