#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

namespace mdmd {

// Flat TOML-style config:
//   # comment
//   key = value          bare numbers / words
//   key = "quoted value" double quotes stripped, no escapes
// Keys are [A-Za-z0-9_-]+. Duplicate keys and lines without '=' are errors.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  std::optional<int> get_int(const std::string& key) const;
  std::optional<double> get_double(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace mdmd
