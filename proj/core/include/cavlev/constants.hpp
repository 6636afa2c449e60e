#pragma once

#include <numbers>

namespace cavlev {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSpeedOfLight = 299'792'458.0; // m/s
inline constexpr double kHbar = 1.054571817e-34;       // J s
inline constexpr double kEuler = std::numbers::e;

} // namespace cavlev
