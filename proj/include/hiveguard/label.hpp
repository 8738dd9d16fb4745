#pragma once

#include <string>
#include <string_view>

#include "hiveguard/errors.hpp"

namespace hiveguard {

/// Binary class of one observation; DDoS is the positive class everywhere.
enum class Label { Normal = 0, DDoS = 1 };

inline const char* to_string(Label l) { return l == Label::DDoS ? "DDoS" : "Normal"; }

inline Label parse_label(std::string_view s) {
  if (s == "Normal") return Label::Normal;
  if (s == "DDoS") return Label::DDoS;
  throw FormatError("unknown label '" + std::string(s) + "'");
}

inline float label_value(Label l) { return l == Label::DDoS ? 1.0f : 0.0f; }

}  // namespace hiveguard
