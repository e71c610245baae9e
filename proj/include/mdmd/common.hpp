#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mdmd {

// Raised for malformed inputs and violated preconditions across the library.
class SpotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Kind { kMacro, kMicro };

inline std::string_view to_string(Kind kind) {
  return kind == Kind::kMacro ? "macro" : "micro";
}

inline Kind parse_kind(std::string_view token) {
  if (token == "macro") return Kind::kMacro;
  if (token == "micro") return Kind::kMicro;
  throw SpotError("unknown expression type '" + std::string(token) + "'");
}

}  // namespace mdmd
