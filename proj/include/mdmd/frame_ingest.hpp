#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "mdmd/common.hpp"

namespace mdmd {

// One video as 8-bit single-channel frames. Frame indices are 1-based.
struct FrameSequence {
  std::string video_id;
  std::vector<cv::Mat> frames;  // CV_8UC1, identical sizes
  int fps = 0;

  int size() const { return static_cast<int>(frames.size()); }
  const cv::Mat& frame(int index) const { return frames.at(index - 1); }
  int width() const { return frames.empty() ? 0 : frames.front().cols; }
  int height() const { return frames.empty() ? 0 : frames.front().rows; }
};

struct GroundTruthInterval {
  std::string video_id;
  int onset = 0;
  std::optional<int> apex;
  int offset = 0;
  Kind kind = Kind::kMacro;

  bool operator==(const GroundTruthInterval&) const = default;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline constexpr int kLandmarkCount = 68;
using LandmarkPoints = std::array<Point2, kLandmarkCount>;

// Standard 68-point ordering; pass2 is expressed relative to the first-pass crop.
struct LandmarkSet {
  std::string video_id;
  LandmarkPoints pass1{};
  std::optional<LandmarkPoints> pass2;
};

struct DatasetProfile {
  std::string name;
  int fps = 0;
  int k_macro = 0;
  int k_micro = 0;
  int micro_len_min = 0;
  int micro_len_max = 0;
  int macro_len_min = 0;
  int block_grid = 0;
  int direction_count = 0;
  int crop_size = 0;

  int k_for(Kind kind) const { return kind == Kind::kMacro ? k_macro : k_micro; }
  void validate() const;
};

/// Loads every image in `dir_path` (lexicographic filename order) as grayscale.
/// Color inputs are converted with round(0.299R + 0.587G + 0.114B).
FrameSequence load_frame_sequence(const std::filesystem::path& dir_path,
                                  const std::string& video_id, int fps);

/// Converts a 1-, 3- (BGR) or 4-channel (BGRA) 8-bit image to CV_8UC1.
cv::Mat to_grayscale(const cv::Mat& image);

std::vector<GroundTruthInterval> parse_annotations(std::istream& in);
std::vector<GroundTruthInterval> parse_annotations(const std::filesystem::path& path);
void write_annotations(std::ostream& out, const std::vector<GroundTruthInterval>& rows);

/// Resolves a still-running expression (offset 0) to [onset, apex].
GroundTruthInterval normalize_ground_truth(const GroundTruthInterval& g);

/// Reads `pass,index,x,y` CSV, or JSON `{"pass1": [[x,y],...], "pass2": [...]}`
/// when the extension is `.json`. The video id is the file stem.
LandmarkSet parse_landmarks(const std::filesystem::path& path);
LandmarkSet parse_landmarks_csv(std::istream& in, const std::string& video_id);
LandmarkSet parse_landmarks_json(std::istream& in, const std::string& video_id);
void write_landmarks_csv(std::ostream& out, const LandmarkSet& landmarks);

std::map<std::string, DatasetProfile> builtin_profiles();

/// Resolves a built-in profile name, or reads a `key = value` profile file.
DatasetProfile resolve_profile(const std::string& name_or_path);

}  // namespace mdmd
