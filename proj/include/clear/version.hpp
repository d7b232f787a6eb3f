#pragma once

namespace clear {

inline constexpr const char* kVersion = "clear 0.1.0";

}  // namespace clear
