#pragma once

#include <cstdio>
#include <string>

namespace gridshap::detail {

// %.10g: stable CSV text, identity under one write/read cycle.
inline std::string fmt10(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// %.17g: lossless double round-trip for model files.
inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Fixed 4 decimal places for report tables.
inline std::string fmt4f(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

// Up to six decimal places with trailing zeros trimmed; decimal inputs with
// <= 6 places round-trip bit-identically through parse/serialize.
inline std::string fmt_case(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  std::string s(buf);
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  return s;
}

}  // namespace gridshap::detail
