#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

namespace orgsim {

using Vec2 = Eigen::Vector2d;

inline constexpr double kGravity = 9.81;

constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Maps any angle to [0, 360).
inline double normalize_heading(double deg) {
  double h = std::fmod(deg, 360.0);
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  return h;
}

/// Signed smallest difference `to - from`, in (-180, 180].
inline double heading_delta(double from, double to) {
  double d = std::fmod(to - from, 360.0);
  if (d > 180.0) d -= 360.0;
  if (d <= -180.0) d += 360.0;
  return d;
}

inline Vec2 unit_from_heading(double deg) {
  const double r = deg_to_rad(deg);
  return {std::cos(r), std::sin(r)};
}

inline double heading_of(const Vec2& v) { return normalize_heading(rad_to_deg(std::atan2(v.y(), v.x()))); }

/// Rotation taking body-frame vectors (x forward, y left) to the world frame.
inline Eigen::Matrix2d body_to_world(double heading_deg) {
  return Eigen::Rotation2Dd(deg_to_rad(heading_deg)).toRotationMatrix();
}

}  // namespace orgsim
