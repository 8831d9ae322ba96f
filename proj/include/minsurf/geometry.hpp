#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace minsurf {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Spatial dimension carried by the domain and mesh types. Only 2 is built.
inline constexpr int kDimension = 2;

inline constexpr double kPi = std::numbers::pi;

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class GeometryError : public Error {
public:
  using Error::Error;
};

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Twice the signed area of (a, b, c); positive when counter-clockwise.
inline double orient(const Vec2& a, const Vec2& b, const Vec2& c) { return cross(b - a, c - a); }

inline Vec2 unit_from_angle(double angle) { return {std::cos(angle), std::sin(angle)}; }

inline Mat2 rotation(double angle) {
  Mat2 r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

/// Signed area of a closed loop (positive for CCW).
inline double polygon_area(std::span<const Vec2> loop) {
  double a = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i)
    a += cross(loop[i], loop[(i + 1) % loop.size()]);
  return 0.5 * a;
}

inline Vec2 polygon_centroid(std::span<const Vec2> loop) {
  double a = 0.0;
  Vec2 c = Vec2::Zero();
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Vec2& p = loop[i];
    const Vec2& q = loop[(i + 1) % loop.size()];
    const double w = cross(p, q);
    a += w;
    c += w * (p + q);
  }
  return c / (3.0 * a);
}

/// True if every turn of the loop is a left turn (collinear runs allowed up to tol).
inline bool is_convex_ccw(std::span<const Vec2> loop, double tol = 1e-12) {
  const std::size_t n = loop.size();
  if (n < 3) return false;
  double scale = 0.0;
  for (const auto& p : loop) scale = std::max(scale, p.norm());
  scale = std::max(scale, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double o = orient(loop[i], loop[(i + 1) % n], loop[(i + 2) % n]);
    if (o < -tol * scale * scale) return false;
  }
  return polygon_area(loop) > 0.0;
}

/// Point inside (or within tol of) a convex CCW loop.
inline bool convex_contains(std::span<const Vec2> loop, const Vec2& x, double tol = 0.0) {
  const std::size_t n = loop.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = loop[i];
    const Vec2& b = loop[(i + 1) % n];
    const double len = (b - a).norm();
    if (len == 0.0) continue;
    if (orient(a, b, x) / len < -tol) return false;
  }
  return true;
}

/// Signed distance to the boundary of a convex CCW loop, positive inside.
inline double convex_inner_distance(std::span<const Vec2> loop, const Vec2& x) {
  double d = std::numeric_limits<double>::infinity();
  const std::size_t n = loop.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = loop[i];
    const Vec2& b = loop[(i + 1) % n];
    const double len = (b - a).norm();
    if (len == 0.0) continue;
    d = std::min(d, orient(a, b, x) / len);
  }
  return d;
}

inline double point_segment_distance(const Vec2& x, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double l2 = ab.squaredNorm();
  double t = l2 > 0.0 ? (x - a).dot(ab) / l2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (x - (a + t * ab)).norm();
}

/// Circumcenter of a non-degenerate triangle.
inline Vec2 circumcenter(const Vec2& a, const Vec2& b, const Vec2& c) {
  const Vec2 ab = b - a;
  const Vec2 ac = c - a;
  const double d = 2.0 * cross(ab, ac);
  const double ab2 = ab.squaredNorm();
  const double ac2 = ac.squaredNorm();
  return a + Vec2(ac.y() * ab2 - ab.y() * ac2, ab.x() * ac2 - ac.x() * ab2) / d;
}

/// Smallest interior angle of a triangle, in radians.
inline double min_angle(const Vec2& a, const Vec2& b, const Vec2& c) {
  auto angle_at = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    const Vec2 u = q - p;
    const Vec2 v = r - p;
    return std::atan2(std::abs(cross(u, v)), u.dot(v));
  };
  return std::min({angle_at(a, b, c), angle_at(b, c, a), angle_at(c, a, b)});
}

} // namespace minsurf
