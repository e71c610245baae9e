#pragma once

#include <optional>

#include "mdmd/frame_ingest.hpp"

namespace mdmd {

// Pixel rectangle with inclusive bounds.
struct CropBox {
  int left = 0;
  int top = 0;
  int right = 0;
  int bottom = 0;

  int width() const { return right - left + 1; }
  int height() const { return bottom - top + 1; }
  bool operator==(const CropBox&) const = default;
};

// 1-based positions in the 68-point ordering used for the eyebrow lift.
inline constexpr int kBrowLandmark = 19;
inline constexpr int kEyeCornerLandmark = 37;

/// Face box from first-frame landmarks. The top edge is lifted by
/// (y37 - y19) above the topmost landmark and clamped at 0.
CropBox box_from_landmarks(const LandmarkPoints& landmarks);

/// Same construction without the clamp at 0; may return a negative top.
CropBox unclamped_box_from_landmarks(const LandmarkPoints& landmarks);

/// Second-pass tightening. `second_pass` is relative to the crop of `box`;
/// the bottom becomes min(bottom, translated bottommost second-pass y).
CropBox refine_box(const CropBox& box, const std::optional<LandmarkPoints>& second_pass);

/// Intersects the box with a width x height frame; throws if that leaves a
/// degenerate box.
CropBox clamp_to_frame(const CropBox& box, int width, int height);

/// Crops every frame to `box` and resizes to size x size (bilinear).
FrameSequence crop_and_resize(const FrameSequence& seq, const CropBox& box, int size);

}  // namespace mdmd
