#include "mdmd/face_crop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <opencv2/imgproc.hpp>

namespace mdmd {

namespace {

// Round half up; commutes with integer translation (std::lround does not for negatives).
int round_pixel(double v) { return static_cast<int>(std::floor(v + 0.5)); }

void require_nondegenerate(const CropBox& box, const char* what) {
  if (box.left >= box.right || box.top >= box.bottom) {
    throw SpotError(std::string(what) + ": degenerate box (" + std::to_string(box.left) + ", " +
                    std::to_string(box.top) + ", " + std::to_string(box.right) + ", " +
                    std::to_string(box.bottom) + ")");
  }
}

}  // namespace

CropBox unclamped_box_from_landmarks(const LandmarkPoints& landmarks) {
  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -x_min;
  double y_min = x_min;
  double y_max = -x_min;
  for (const auto& p : landmarks) {
    x_min = std::min(x_min, p.x);
    x_max = std::max(x_max, p.x);
    y_min = std::min(y_min, p.y);
    y_max = std::max(y_max, p.y);
  }
  const double lift = landmarks[kEyeCornerLandmark - 1].y - landmarks[kBrowLandmark - 1].y;
  CropBox box{round_pixel(x_min), round_pixel(y_min - lift), round_pixel(x_max), round_pixel(y_max)};
  require_nondegenerate(box, "box_from_landmarks");
  return box;
}

CropBox box_from_landmarks(const LandmarkPoints& landmarks) {
  CropBox box = unclamped_box_from_landmarks(landmarks);
  box.top = std::max(box.top, 0);
  require_nondegenerate(box, "box_from_landmarks");
  return box;
}

CropBox refine_box(const CropBox& box, const std::optional<LandmarkPoints>& second_pass) {
  if (!second_pass) return box;
  double bottommost = -std::numeric_limits<double>::infinity();
  for (const auto& p : *second_pass) bottommost = std::max(bottommost, p.y);
  CropBox refined = box;
  refined.bottom = std::min(box.bottom, round_pixel(bottommost) + box.top);
  require_nondegenerate(refined, "refine_box");
  return refined;
}

CropBox clamp_to_frame(const CropBox& box, int width, int height) {
  CropBox clamped{std::max(box.left, 0), std::max(box.top, 0), std::min(box.right, width - 1),
                  std::min(box.bottom, height - 1)};
  require_nondegenerate(clamped, "clamp_to_frame");
  return clamped;
}

FrameSequence crop_and_resize(const FrameSequence& seq, const CropBox& box, int size) {
  if (size <= 0) throw SpotError("crop size must be positive");
  require_nondegenerate(box, "crop_and_resize");
  if (box.left < 0 || box.top < 0 || box.right >= seq.width() || box.bottom >= seq.height()) {
    throw SpotError("crop box exceeds the " + std::to_string(seq.width()) + "x" + std::to_string(seq.height()) +
                    " frame of " + seq.video_id);
  }
  const cv::Rect roi(box.left, box.top, box.width(), box.height());
  FrameSequence out;
  out.video_id = seq.video_id;
  out.fps = seq.fps;
  out.frames.reserve(seq.frames.size());
  for (const auto& frame : seq.frames) {
    cv::Mat resized;
    cv::resize(frame(roi), resized, cv::Size(size, size), 0.0, 0.0, cv::INTER_LINEAR);
    out.frames.push_back(std::move(resized));
  }
  return out;
}

}  // namespace mdmd
