#pragma once

namespace rfi {

inline constexpr const char* kVersion = "0.1.0";

} // namespace rfi
