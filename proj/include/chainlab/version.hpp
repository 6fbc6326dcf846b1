#pragma once

namespace chainlab {

inline constexpr const char* kVersion = "0.1.0";

} // namespace chainlab
