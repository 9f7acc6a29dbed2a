#pragma once

namespace svext {
inline constexpr const char* kVersion = "0.1.0";
}  // namespace svext
