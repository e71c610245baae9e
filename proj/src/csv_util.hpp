#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "mdmd/common.hpp"

namespace mdmd::detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      break;
    }
    fields.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

inline int parse_int_field(std::string_view text, std::string_view what) {
  int value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw SpotError("expected integer for " + std::string(what) + ", got '" + std::string(text) + "'");
  }
  return value;
}

inline double parse_double_field(std::string_view text, std::string_view what) {
  const std::string owned(text);
  try {
    std::size_t used = 0;
    const double value = std::stod(owned, &used);
    if (used == owned.size()) return value;
  } catch (const std::exception&) {
  }
  throw SpotError("expected number for " + std::string(what) + ", got '" + owned + "'");
}

}  // namespace mdmd::detail
