#pragma once

namespace frwcap {

inline constexpr double kEps0 = 8.8541878128e-12;  // F/m
inline constexpr double kMetersPerNm = 1e-9;

}  // namespace frwcap
