#include "mdmd/kv_config.hpp"

#include <charconv>
#include <fstream>
#include <istream>

#include "mdmd/common.hpp"

namespace mdmd {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool valid_key(const std::string& key) {
  if (key.empty()) return false;
  for (char c : key) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in) {
  KeyValueConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string body = line;
    // '#' starts a comment unless inside quotes.
    bool quoted = false;
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (body[i] == '"') quoted = !quoted;
      if (body[i] == '#' && !quoted) {
        body.resize(i);
        break;
      }
    }
    body = trim(body);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw SpotError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));
    if (!valid_key(key)) {
      throw SpotError("config line " + std::to_string(line_no) + ": bad key '" + key + "'");
    }
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (!config.values_.emplace(key, value).second) {
      throw SpotError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }
  return config;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpotError("cannot open config file " + path.string());
  return parse(in);
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> KeyValueConfig::get_int(const std::string& key) const {
  const auto raw = get(key);
  if (!raw) return std::nullopt;
  int value = 0;
  const auto* end = raw->data() + raw->size();
  const auto [ptr, ec] = std::from_chars(raw->data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw SpotError("config key '" + key + "': expected integer, got '" + *raw + "'");
  }
  return value;
}

std::optional<double> KeyValueConfig::get_double(const std::string& key) const {
  const auto raw = get(key);
  if (!raw) return std::nullopt;
  try {
    std::size_t used = 0;
    const double value = std::stod(*raw, &used);
    if (used != raw->size()) throw std::invalid_argument(*raw);
    return value;
  } catch (const std::exception&) {
    throw SpotError("config key '" + key + "': expected number, got '" + *raw + "'");
  }
}

}  // namespace mdmd
