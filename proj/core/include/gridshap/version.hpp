#pragma once

namespace gridshap {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gridshap
