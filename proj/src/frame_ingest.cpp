#include "mdmd/frame_ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>
#include <opencv2/imgcodecs.hpp>

#include "csv_util.hpp"
#include "mdmd/kv_config.hpp"

namespace mdmd {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kAnnotationHeader = "video_id,onset,apex,offset,type";
constexpr std::string_view kLandmarkHeader = "pass,index,x,y";

bool is_image_file(const fs::path& path) {
  static const std::set<std::string> kExtensions = {".png", ".pgm", ".ppm", ".pnm", ".bmp",
                                                    ".jpg", ".jpeg", ".tif", ".tiff"};
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return kExtensions.count(ext) != 0;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

void check_point(const Point2& p, int pass, int index) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < 0.0 || p.y < 0.0) {
    throw SpotError("landmark pass " + std::to_string(pass) + " index " + std::to_string(index) +
                    " has a negative or non-finite coordinate");
  }
}

LandmarkPoints points_from_json(const nlohmann::json& array, int pass) {
  if (!array.is_array() || array.size() != kLandmarkCount) {
    throw SpotError("landmark pass " + std::to_string(pass) + " must have exactly 68 points");
  }
  LandmarkPoints points{};
  for (int i = 0; i < kLandmarkCount; ++i) {
    const auto& pt = array[i];
    if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number()) {
      throw SpotError("landmark pass " + std::to_string(pass) + " point " + std::to_string(i + 1) +
                      " must be [x, y]");
    }
    points[i] = {pt[0].get<double>(), pt[1].get<double>()};
    check_point(points[i], pass, i + 1);
  }
  return points;
}

}  // namespace

void DatasetProfile::validate() const {
  auto require = [this](bool ok, const char* what) {
    if (!ok) throw SpotError("profile '" + name + "': " + what);
  };
  require(fps > 0, "fps must be positive");
  require(k_macro > 0 && k_micro > 0, "k values must be positive");
  require(micro_len_min > 0 && micro_len_min <= micro_len_max, "micro length bounds invalid");
  require(macro_len_min > 0, "macro_len_min must be positive");
  require(block_grid > 0 && direction_count > 0, "block grid and direction count must be positive");
  require(crop_size >= block_grid, "crop_size must be at least the block grid");
}

cv::Mat to_grayscale(const cv::Mat& image) {
  if (image.depth() != CV_8U) throw SpotError("only 8-bit images are supported");
  if (image.channels() == 1) return image.clone();
  if (image.channels() != 3 && image.channels() != 4) {
    throw SpotError("unsupported channel count " + std::to_string(image.channels()));
  }
  cv::Mat gray(image.rows, image.cols, CV_8UC1);
  const int channels = image.channels();
  for (int y = 0; y < image.rows; ++y) {
    const auto* src = image.ptr<std::uint8_t>(y);
    auto* dst = gray.ptr<std::uint8_t>(y);
    for (int x = 0; x < image.cols; ++x) {
      const auto* px = src + x * channels;  // OpenCV order: B, G, R[, A]
      const double luma = 0.299 * px[2] + 0.587 * px[1] + 0.114 * px[0];
      dst[x] = static_cast<std::uint8_t>(std::clamp(std::lround(luma), 0L, 255L));
    }
  }
  return gray;
}

FrameSequence load_frame_sequence(const fs::path& dir_path, const std::string& video_id, int fps) {
  if (fps <= 0) throw SpotError("fps must be positive");
  if (!fs::is_directory(dir_path)) throw SpotError("not a directory: " + dir_path.string());

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir_path)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  }
  if (files.empty()) throw SpotError("no image files in " + dir_path.string());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

  FrameSequence seq;
  seq.video_id = video_id;
  seq.fps = fps;
  seq.frames.reserve(files.size());
  for (const auto& file : files) {
    const cv::Mat raw = cv::imread(file.string(), cv::IMREAD_UNCHANGED);
    if (raw.empty()) throw SpotError("cannot read image " + file.string());
    cv::Mat gray = to_grayscale(raw);
    if (!seq.frames.empty() && gray.size() != seq.frames.front().size()) {
      throw SpotError("frame " + file.filename().string() + " has dimensions " + std::to_string(gray.cols) +
                      "x" + std::to_string(gray.rows) + ", expected " + std::to_string(seq.width()) + "x" +
                      std::to_string(seq.height()));
    }
    seq.frames.push_back(std::move(gray));
  }
  return seq;
}

std::vector<GroundTruthInterval> parse_annotations(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kAnnotationHeader) {
    throw SpotError("annotation file must start with header '" + std::string(kAnnotationHeader) + "'");
  }
  std::vector<GroundTruthInterval> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    const std::string where = "annotation line " + std::to_string(line_no);
    if (fields.size() != 5) throw SpotError(where + ": expected 5 fields");
    if (fields[0].empty()) throw SpotError(where + ": empty video_id");
    GroundTruthInterval g;
    g.video_id = fields[0];
    try {
      g.onset = detail::parse_int_field(fields[1], "onset");
      if (!fields[2].empty()) g.apex = detail::parse_int_field(fields[2], "apex");
      g.offset = detail::parse_int_field(fields[3], "offset");
      g.kind = parse_kind(fields[4]);
    } catch (const SpotError& e) {
      throw SpotError(where + ": " + e.what());
    }
    rows.push_back(std::move(g));
  }
  return rows;
}

std::vector<GroundTruthInterval> parse_annotations(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw SpotError("cannot open annotation file " + path.string());
  return parse_annotations(in);
}

void write_annotations(std::ostream& out, const std::vector<GroundTruthInterval>& rows) {
  out << kAnnotationHeader << '\n';
  for (const auto& g : rows) {
    out << g.video_id << ',' << g.onset << ',';
    if (g.apex) out << *g.apex;
    out << ',' << g.offset << ',' << to_string(g.kind) << '\n';
  }
}

GroundTruthInterval normalize_ground_truth(const GroundTruthInterval& g) {
  GroundTruthInterval out = g;
  if (out.offset == 0) {
    if (!out.apex) {
      throw SpotError("interval " + g.video_id + "@" + std::to_string(g.onset) + " has offset 0 and no apex");
    }
    out.offset = *out.apex;
  }
  if (out.onset < 1 || out.offset < out.onset) {
    throw SpotError("interval " + g.video_id + " [" + std::to_string(out.onset) + ", " +
                    std::to_string(out.offset) + "] is invalid");
  }
  return out;
}

LandmarkSet parse_landmarks_csv(std::istream& in, const std::string& video_id) {
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kLandmarkHeader) {
    throw SpotError("landmark file must start with header '" + std::string(kLandmarkHeader) + "'");
  }
  std::array<LandmarkPoints, 2> passes{};
  std::array<std::array<bool, kLandmarkCount>, 2> seen{};
  std::array<int, 2> counts{0, 0};
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    const std::string where = "landmark line " + std::to_string(line_no);
    if (fields.size() != 4) throw SpotError(where + ": expected 4 fields");
    const int pass = detail::parse_int_field(fields[0], "pass");
    const int index = detail::parse_int_field(fields[1], "index");
    if (pass != 1 && pass != 2) throw SpotError(where + ": pass must be 1 or 2");
    if (index < 1 || index > kLandmarkCount) throw SpotError(where + ": index must be in 1..68");
    const Point2 p{detail::parse_double_field(fields[2], "x"), detail::parse_double_field(fields[3], "y")};
    check_point(p, pass, index);
    auto& slot = seen[pass - 1][index - 1];
    if (slot) throw SpotError(where + ": duplicate landmark index");
    slot = true;
    passes[pass - 1][index - 1] = p;
    ++counts[pass - 1];
  }
  if (counts[0] != kLandmarkCount) {
    throw SpotError("landmark pass 1 has " + std::to_string(counts[0]) + " points, expected 68");
  }
  if (counts[1] != 0 && counts[1] != kLandmarkCount) {
    throw SpotError("landmark pass 2 has " + std::to_string(counts[1]) + " points, expected 68");
  }
  LandmarkSet set;
  set.video_id = video_id;
  set.pass1 = passes[0];
  if (counts[1] == kLandmarkCount) set.pass2 = passes[1];
  return set;
}

LandmarkSet parse_landmarks_json(std::istream& in, const std::string& video_id) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SpotError(std::string("landmark JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("pass1")) throw SpotError("landmark JSON needs a 'pass1' array");
  LandmarkSet set;
  set.video_id = video_id;
  set.pass1 = points_from_json(doc["pass1"], 1);
  if (doc.contains("pass2") && !doc["pass2"].is_null()) set.pass2 = points_from_json(doc["pass2"], 2);
  return set;
}

LandmarkSet parse_landmarks(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw SpotError("cannot open landmark file " + path.string());
  const std::string video_id = path.stem().string();
  if (path.extension() == ".json") return parse_landmarks_json(in, video_id);
  return parse_landmarks_csv(in, video_id);
}

void write_landmarks_csv(std::ostream& out, const LandmarkSet& landmarks) {
  out << kLandmarkHeader << '\n';
  out.precision(10);
  auto emit = [&out](int pass, const LandmarkPoints& points) {
    for (int i = 0; i < kLandmarkCount; ++i) {
      out << pass << ',' << i + 1 << ',' << points[i].x << ',' << points[i].y << '\n';
    }
  };
  emit(1, landmarks.pass1);
  if (landmarks.pass2) emit(2, *landmarks.pass2);
}

std::map<std::string, DatasetProfile> builtin_profiles() {
  std::map<std::string, DatasetProfile> profiles;
  profiles["casme2"] = DatasetProfile{.name = "casme2",
                                      .fps = 30,
                                      .k_macro = 39,
                                      .k_micro = 12,
                                      .micro_len_min = 7,
                                      .micro_len_max = 16,
                                      .macro_len_min = 17,
                                      .block_grid = 6,
                                      .direction_count = 4,
                                      .crop_size = 227};
  profiles["samm"] = DatasetProfile{.name = "samm",
                                    .fps = 200,
                                    .k_macro = 260,
                                    .k_micro = 80,
                                    .micro_len_min = 47,
                                    .micro_len_max = 105,
                                    .macro_len_min = 106,
                                    .block_grid = 6,
                                    .direction_count = 4,
                                    .crop_size = 227};
  return profiles;
}

DatasetProfile resolve_profile(const std::string& name_or_path) {
  const auto profiles = builtin_profiles();
  if (const auto it = profiles.find(name_or_path); it != profiles.end()) return it->second;
  if (!fs::is_regular_file(name_or_path)) {
    throw SpotError("unknown profile '" + name_or_path + "' (not a built-in name or a file)");
  }

  const auto config = KeyValueConfig::load(name_or_path);
  static const std::set<std::string> kKeys = {"base",          "name",          "fps",
                                              "k_macro",       "k_micro",       "micro_len_min",
                                              "micro_len_max", "macro_len_min", "block_grid",
                                              "direction_count", "crop_size"};
  for (const auto& [key, value] : config.values()) {
    if (kKeys.count(key) == 0) throw SpotError("profile file: unknown key '" + key + "'");
  }
  DatasetProfile profile;
  if (const auto base = config.get("base")) {
    const auto it = profiles.find(*base);
    if (it == profiles.end()) throw SpotError("profile file: unknown base '" + *base + "'");
    profile = it->second;
  }
  profile.name = config.get("name").value_or(fs::path(name_or_path).stem().string());
  auto assign = [&config](const char* key, int& field) {
    if (const auto v = config.get_int(key)) field = *v;
  };
  assign("fps", profile.fps);
  assign("k_macro", profile.k_macro);
  assign("k_micro", profile.k_micro);
  assign("micro_len_min", profile.micro_len_min);
  assign("micro_len_max", profile.micro_len_max);
  assign("macro_len_min", profile.macro_len_min);
  assign("block_grid", profile.block_grid);
  assign("direction_count", profile.direction_count);
  assign("crop_size", profile.crop_size);
  profile.validate();
  return profile;
}

}  // namespace mdmd
