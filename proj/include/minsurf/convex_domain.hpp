#pragma once

#include "geometry.hpp"

#include <optional>
#include <string_view>

namespace minsurf {

/// Open half-plane {x : normal . x < offset} with a unit normal.
struct HalfPlane {
  Vec2 normal{0.0, -1.0};
  double offset{0.0};

  HalfPlane() = default;
  /// Normalizes (normal, offset) jointly so the described set is unchanged.
  HalfPlane(const Vec2& n, double c) {
    const double len = n.norm();
    if (!(len > 0.0) || !std::isfinite(len) || !std::isfinite(c))
      throw GeometryError("half-plane normal must be a finite nonzero vector");
    normal = n / len;
    offset = c / len;
  }

  double slack(const Vec2& x) const { return offset - normal.dot(x); }
  bool contains(const Vec2& x) const { return slack(x) > 0.0; }
};

enum class DomainKind { half_space, slab, cone, general_convex };

inline std::string_view to_string(DomainKind k) {
  switch (k) {
  case DomainKind::half_space: return "half_space";
  case DomainKind::slab: return "slab";
  case DomainKind::cone: return "cone";
  case DomainKind::general_convex: return "general_convex";
  }
  return "unknown";
}

/// Wedge {apex + t d : t > 0, angle(d, axis) < half_angle}.
struct ConeDescription {
  Vec2 apex = Vec2::Zero();
  Vec2 axis{0.0, 1.0};
  double half_angle{0.0};

  bool contains(const Vec2& x) const {
    const Vec2 d = x - apex;
    const double r = d.norm();
    if (r == 0.0) return false;
    return std::acos(std::clamp(d.dot(axis) / r, -1.0, 1.0)) < half_angle;
  }
};

namespace detail {

inline constexpr double kRedundancyTol = 1e-10;

/// Sutherland-Hodgman clip of a convex CCW loop by {n . x <= c}.
inline std::vector<Vec2> clip_loop(const std::vector<Vec2>& loop, const Vec2& n, double c) {
  std::vector<Vec2> out;
  const std::size_t m = loop.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Vec2& p = loop[i];
    const Vec2& q = loop[(i + 1) % m];
    const double sp = c - n.dot(p);
    const double sq = c - n.dot(q);
    if (sp >= 0.0) out.push_back(p);
    if ((sp >= 0.0) != (sq >= 0.0)) {
      const double t = sp / (sp - sq);
      out.push_back(p + t * (q - p));
    }
  }
  // drop consecutive duplicates introduced by vertices exactly on the line
  std::vector<Vec2> clean;
  for (const auto& p : out)
    if (clean.empty() || (p - clean.back()).norm() > 1e-14 * (1.0 + p.norm())) clean.push_back(p);
  while (clean.size() > 1 && (clean.front() - clean.back()).norm() <= 1e-14 * (1.0 + clean.front().norm()))
    clean.pop_back();
  return clean;
}

inline std::vector<Vec2> box_loop(double half_width) {
  const double b = half_width;
  return {{-b, -b}, {b, -b}, {b, b}, {-b, b}};
}

inline double bounding_scale(const std::vector<HalfPlane>& planes) {
  double s = 1.0;
  for (const auto& h : planes) s = std::max(s, std::abs(h.offset));
  return s;
}

inline std::vector<Vec2> clip_box(const std::vector<HalfPlane>& planes, double half_width,
                                  double shift = 0.0) {
  std::vector<Vec2> loop = box_loop(half_width);
  for (const auto& h : planes) {
    loop = clip_loop(loop, h.normal, h.offset - shift);
    if (loop.size() < 3) return {};
  }
  return loop;
}

inline bool is_redundant(const std::vector<HalfPlane>& others, const HalfPlane& h) {
  const double box = 1e4 * (bounding_scale(others) + std::abs(h.offset) + 1.0);
  const auto loop = clip_box(others, box);
  if (loop.empty()) return true;
  double max_value = -std::numeric_limits<double>::infinity();
  for (const auto& p : loop) max_value = std::max(max_value, h.normal.dot(p));
  return max_value <= h.offset + kRedundancyTol * (1.0 + std::abs(h.offset));
}

inline std::vector<HalfPlane> remove_redundant(std::vector<HalfPlane> planes) {
  for (std::size_t i = 0; i < planes.size();) {
    std::vector<HalfPlane> others;
    for (std::size_t j = 0; j < planes.size(); ++j)
      if (j != i) others.push_back(planes[j]);
    if (!others.empty() && is_redundant(others, planes[i]))
      planes.erase(planes.begin() + static_cast<std::ptrdiff_t>(i));
    else
      ++i;
  }
  return planes;
}

inline std::optional<Vec2> line_intersection(const HalfPlane& a, const HalfPlane& b) {
  Mat2 m;
  m.row(0) = a.normal.transpose();
  m.row(1) = b.normal.transpose();
  const double det = m.determinant();
  if (std::abs(det) < 1e-12) return std::nullopt;
  return m.inverse() * Vec2(a.offset, b.offset);
}

inline DomainKind classify_reduced(const std::vector<HalfPlane>& planes) {
  constexpr double tol = 1e-9;
  if (planes.size() == 1) return DomainKind::half_space;
  if (planes.size() == 2) {
    if ((planes[0].normal + planes[1].normal).norm() < tol) return DomainKind::slab;
    if (line_intersection(planes[0], planes[1])) return DomainKind::cone;
  }
  return DomainKind::general_convex;
}

} // namespace detail

/// Unbounded convex region given as an intersection of open half-planes.
class ConvexDomain {
public:
  static constexpr int dimension = kDimension;

  explicit ConvexDomain(std::vector<HalfPlane> halfplanes) : halfplanes_(std::move(halfplanes)) {
    if (halfplanes_.empty()) throw GeometryError("domain needs at least one half-plane (R^2 is excluded)");
    reduced_ = detail::remove_redundant(halfplanes_);
    const double box = 1e4 * (detail::bounding_scale(reduced_) + 1.0);
    const auto loop = detail::clip_box(reduced_, box);
    if (loop.size() < 3 || polygon_area(loop) <= 0.0) throw GeometryError("domain is empty");
    interior_point_ = polygon_centroid(loop);
    if (!has_recession_direction()) throw GeometryError("domain is bounded");
    kind_ = detail::classify_reduced(reduced_);
  }

  /// {x2 > 0}.
  static ConvexDomain half_space() { return ConvexDomain({HalfPlane({0.0, -1.0}, 0.0)}); }

  /// Wedge with apex at the origin, opening angle `angle` in (0, pi], symmetric about +x2.
  static ConvexDomain wedge(double angle) {
    if (!(angle > 0.0 && angle <= kPi)) throw GeometryError("wedge angle must lie in (0, pi]");
    const double s = std::sin(0.5 * angle);
    const double c = std::cos(0.5 * angle);
    return ConvexDomain({HalfPlane({c, -s}, 0.0), HalfPlane({-c, -s}, 0.0)});
  }

  /// {0 < x2 < width}.
  static ConvexDomain slab(double width) {
    if (!(width > 0.0)) throw GeometryError("slab width must be positive");
    return ConvexDomain({HalfPlane({0.0, -1.0}, 0.0), HalfPlane({0.0, 1.0}, width)});
  }

  const std::vector<HalfPlane>& halfplanes() const { return halfplanes_; }
  /// Non-redundant subset, in input order.
  const std::vector<HalfPlane>& essential_halfplanes() const { return reduced_; }
  DomainKind kind() const { return kind_; }
  const Vec2& interior_point() const { return interior_point_; }

  ConvexDomain transformed(double angle, const Vec2& shift) const {
    const Mat2 r = rotation(angle);
    std::vector<HalfPlane> moved;
    for (const auto& h : halfplanes_) {
      const Vec2 n = r * h.normal;
      moved.emplace_back(n, h.offset + n.dot(shift));
    }
    return ConvexDomain(std::move(moved));
  }

private:
  bool has_recession_direction() const {
    for (const auto& h : reduced_) {
      const Vec2 perp(-h.normal.y(), h.normal.x());
      for (const Vec2& d : {perp, Vec2(-perp)}) {
        bool ok = true;
        for (const auto& g : reduced_) ok = ok && g.normal.dot(d) <= 1e-12;
        if (ok) return true;
      }
    }
    return false;
  }

  std::vector<HalfPlane> halfplanes_;
  std::vector<HalfPlane> reduced_;
  DomainKind kind_{DomainKind::general_convex};
  Vec2 interior_point_ = Vec2::Zero();
};

inline bool contains(const ConvexDomain& domain, const Vec2& x) {
  for (const auto& h : domain.halfplanes())
    if (!h.contains(x)) return false;
  return true;
}

/// min_i (offset_i - normal_i . x); negative outside the domain.
inline double inner_distance(const ConvexDomain& domain, const Vec2& x) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& h : domain.halfplanes()) d = std::min(d, h.slack(x));
  return d;
}

inline DomainKind classify(const ConvexDomain& domain) { return domain.kind(); }

/// A wedge lying in the complement of the domain; none for a half-space.
inline std::optional<ConeDescription> exterior_cone(const ConvexDomain& domain) {
  const auto& planes = domain.essential_halfplanes();
  if (domain.kind() == DomainKind::half_space) return std::nullopt;
  // Two non-parallel constraints: the domain sits inside their wedge, so the
  // reflected wedge through the apex is exterior.
  for (std::size_t i = 0; i < planes.size(); ++i)
    for (std::size_t j = i + 1; j < planes.size(); ++j) {
      if (auto apex = detail::line_intersection(planes[i], planes[j])) {
        // recession directions of the wedge {n_i.x<c_i, n_j.x<c_j} are d with n.d<=0
        const Vec2 bis = -(planes[i].normal + planes[j].normal);
        if (bis.norm() < 1e-12) continue;
        const Vec2 axis = bis.normalized();
        const double opening = kPi - std::acos(std::clamp(planes[i].normal.dot(planes[j].normal), -1.0, 1.0));
        return ConeDescription{*apex, -axis, 0.5 * opening};
      }
    }
  // Only parallel constraints: step one unit outside the first line.
  const HalfPlane& h = planes.front();
  const Vec2 apex = h.normal * (h.offset + 1.0);
  return ConeDescription{apex, h.normal, 0.25 * kPi};
}

enum class EdgeKind { domain_line, arc_chord };

/// Convex polygonal approximation of {x in B_R cap Omega : dist(x, boundary) > margin}.
struct TruncationPolygon {
  std::vector<Vec2> vertices;             ///< CCW loop
  std::vector<EdgeKind> edge_kinds;       ///< edge i joins vertex i and i+1
  double radius{0.0};
  double margin{0.0};
  ConvexDomain parent;

  /// Radius of the disc the arcs are inscribed in.
  double arc_radius() const { return radius - margin; }
};

namespace detail {

inline double wrap_angle(double a) {
  while (a <= 0.0) a += 2.0 * kPi;
  while (a > 2.0 * kPi) a -= 2.0 * kPi;
  return a;
}

} // namespace detail

/// Builds the nested truncation used by the exhaustion. `arc_resolution` is the
/// number of chords a full circle would use; each arc gets its proportional share.
inline TruncationPolygon truncate(const ConvexDomain& domain, double radius, double margin,
                                  int arc_resolution) {
  if (!(margin >= 0.0) || !(radius > 2.0 * margin))
    throw GeometryError("truncate needs radius > 2*margin >= 0");
  if (arc_resolution < 3) throw GeometryError("arc_resolution must be at least 3");
  const double rho = radius - margin;
  const auto& planes = domain.essential_halfplanes();
  const auto poly = detail::clip_box(planes, 2.0 * rho, margin);
  if (poly.size() < 3) throw GeometryError("empty truncation: margin exceeds the inradius");

  struct Piece {
    Vec2 start, end;
    bool exits;  // end lies on the circle and the boundary leaves the disc there
  };
  std::vector<Piece> pieces;
  const std::size_t m = poly.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Vec2& a = poly[i];
    const Vec2 d = poly[(i + 1) % m] - a;
    const double qa = d.squaredNorm();
    const double qb = 2.0 * a.dot(d);
    const double qc = a.squaredNorm() - rho * rho;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc <= 0.0) continue;
    const double sq = std::sqrt(disc);
    const double t1 = (-qb - sq) / (2.0 * qa);
    const double t2 = (-qb + sq) / (2.0 * qa);
    const double lo = std::max(0.0, t1);
    const double hi = std::min(1.0, t2);
    if (hi - lo <= 1e-12) continue;
    pieces.push_back({a + lo * d, a + hi * d, t2 < 1.0});
  }

  TruncationPolygon out{{}, {}, radius, margin, domain};
  auto push = [&](const Vec2& p, EdgeKind incoming) {
    if (!out.vertices.empty() && (p - out.vertices.back()).norm() <= 1e-12 * (1.0 + rho)) return;
    out.vertices.push_back(p);
    out.edge_kinds.push_back(incoming);  // provisional: kind of the edge arriving at p
  };
  auto push_arc = [&](const Vec2& from, const Vec2& to) {
    const double a0 = std::atan2(from.y(), from.x());
    double sweep = detail::wrap_angle(std::atan2(to.y(), to.x()) - a0);
    const int segs = std::max(1, static_cast<int>(std::ceil(sweep * arc_resolution / (2.0 * kPi) - 1e-9)));
    for (int j = 1; j < segs; ++j) {
      const double t = a0 + sweep * j / segs;
      push(rho * unit_from_angle(t), EdgeKind::arc_chord);
    }
  };

  if (pieces.empty()) {
    if (convex_inner_distance(poly, Vec2::Zero()) >= rho) {
      for (int j = 0; j < arc_resolution; ++j)
        push(rho * unit_from_angle(2.0 * kPi * j / arc_resolution), EdgeKind::arc_chord);
    } else {
      throw GeometryError("empty truncation: ball does not meet the shifted domain");
    }
  } else {
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      const Piece& pc = pieces[i];
      const Piece& prev = pieces[(i + pieces.size() - 1) % pieces.size()];
      push(pc.start, prev.exits ? EdgeKind::arc_chord : EdgeKind::domain_line);
      push(pc.end, EdgeKind::domain_line);
      if (pc.exits) push_arc(pc.end, pieces[(i + 1) % pieces.size()].start);
    }
    if (out.vertices.size() > 1 &&
        (out.vertices.front() - out.vertices.back()).norm() <= 1e-12 * (1.0 + rho)) {
      out.vertices.pop_back();
      out.edge_kinds.pop_back();
    }
  }
  // edge_kinds currently describe the edge ending at vertex i; rotate to "edge starting at i"
  std::rotate(out.edge_kinds.begin(), out.edge_kinds.begin() + 1, out.edge_kinds.end());
  if (out.vertices.size() < 3 || !is_convex_ccw(out.vertices, 1e-10))
    throw GeometryError("truncation produced a non-convex polygon");
  return out;
}

} // namespace minsurf
