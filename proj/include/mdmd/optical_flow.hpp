#pragma once

#include <memory>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

namespace mdmd {

// Displacements sampled on a regular grid: grid point (gx, gy) sits at pixel
// (gx * stride, gy * stride). u points right, v points down (image axes).
//
// Polar convention: rho = hypot(u, v), theta = atan2(-v, u) in [-pi, pi), so
// upward motion on the face is +pi/2. The zero vector has theta = 0.
struct FlowField {
  int frame_width = 0;
  int frame_height = 0;
  int stride = 1;
  int cols = 0;
  int rows = 0;
  std::vector<double> u;
  std::vector<double> v;
  std::vector<double> rho;    // filled by to_polar
  std::vector<double> theta;  // filled by to_polar

  static FlowField zeros(int frame_width, int frame_height, int stride);

  std::size_t point_count() const { return u.size(); }
  std::size_t index(int gx, int gy) const { return static_cast<std::size_t>(gy) * cols + gx; }
  int pixel_x(int gx) const { return gx * stride; }
  int pixel_y(int gy) const { return gy * stride; }
  bool has_polar() const { return rho.size() == u.size() && theta.size() == u.size(); }
};

double flow_direction(double u, double v);

/// Populates rho/theta from u/v.
void to_polar(FlowField& field);

/// Inverse of the polar convention: (rho, theta) -> (u, v).
cv::Point2d from_polar(double rho, double theta);

// Seat for flow estimators. estimate() returns fields with polar form filled
// and must return an all-zero field for identical inputs.
class FlowBackend {
 public:
  virtual ~FlowBackend() = default;
  virtual std::string name() const = 0;
  virtual FlowField estimate(const cv::Mat& frame_a, const cv::Mat& frame_b) const = 0;
};

struct ReferenceFlowParams {
  int window_radius = 4;   // patch is (2w+1)^2
  int search_radius = 12;  // integer offsets in [-s, s]^2
  int stride = 1;
  bool subpixel = true;
};

/// ceil(0.05 * crop_size), the default search radius for a crop.
int default_search_radius(int crop_size);

/// Exhaustive block matching with SSD cost, edge-clamped sampling, ties broken
/// by smallest displacement magnitude then smallest direction, and optional
/// per-axis parabola refinement around the integer optimum.
FlowField reference_flow(const cv::Mat& frame_a, const cv::Mat& frame_b, const ReferenceFlowParams& params);

class ReferenceFlowBackend final : public FlowBackend {
 public:
  explicit ReferenceFlowBackend(ReferenceFlowParams params = {}) : params_(params) {}
  std::string name() const override { return "reference"; }
  FlowField estimate(const cv::Mat& frame_a, const cv::Mat& frame_b) const override {
    return reference_flow(frame_a, frame_b, params_);
  }
  const ReferenceFlowParams& params() const { return params_; }

 private:
  ReferenceFlowParams params_;
};

/// Backend lookup by CLI name. Only "reference" exists today.
std::unique_ptr<FlowBackend> make_flow_backend(const std::string& name, const ReferenceFlowParams& params);

}  // namespace mdmd
