#pragma once

#include "convex_domain.hpp"
#include "delaunay.hpp"

#include <map>
#include <memory>

namespace minsurf {

enum class BoundaryTag : int { interior = 0, true_boundary = 1, cut_boundary = 2 };

inline std::string_view to_string(BoundaryTag t) {
  switch (t) {
  case BoundaryTag::interior: return "interior";
  case BoundaryTag::true_boundary: return "true_boundary";
  case BoundaryTag::cut_boundary: return "cut_boundary";
  }
  return "unknown";
}

using Triangle = std::array<int, 3>;

/// Triangulation of a truncated domain. Immutable once built; per-triangle
/// areas and P1 basis gradients are cached at construction.
class TriMesh {
public:
  static constexpr int dimension = kDimension;

  TriMesh(std::vector<Vec2> vertices, std::vector<Triangle> triangles, std::vector<BoundaryTag> tags, double h)
      : vertices_(std::move(vertices)), triangles_(std::move(triangles)), tags_(std::move(tags)), h_(h) {
    if (tags_.empty()) tags_.assign(vertices_.size(), BoundaryTag::interior);
    if (tags_.size() != vertices_.size()) throw MeshError("tag count does not match vertex count");
    areas_.resize(triangles_.size());
    grads_.resize(triangles_.size());
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
      const auto& tri = triangles_[t];
      for (int k = 0; k < 3; ++k)
        if (tri[k] < 0 || static_cast<std::size_t>(tri[k]) >= vertices_.size())
          throw MeshError("triangle references a missing vertex");
      const Vec2& a = vertices_[static_cast<std::size_t>(tri[0])];
      const Vec2& b = vertices_[static_cast<std::size_t>(tri[1])];
      const Vec2& c = vertices_[static_cast<std::size_t>(tri[2])];
      const double twice = orient(a, b, c);
      if (!(twice > 0.0)) throw MeshError("triangle with non-positive signed area");
      areas_[t] = 0.5 * twice;
      // grad phi_k = perp(opposite edge) / (2|T|)
      auto g = [&](const Vec2& p, const Vec2& q) -> Vec2 { return Vec2(p.y() - q.y(), q.x() - p.x()) / twice; };
      grads_[t] = {g(b, c), g(c, a), g(a, b)};
    }
    build_boundary();
  }

  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t triangle_count() const { return triangles_.size(); }
  const std::vector<Vec2>& vertices() const { return vertices_; }
  const Vec2& vertex(std::size_t i) const { return vertices_[i]; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const Triangle& triangle(std::size_t t) const { return triangles_[t]; }
  const std::vector<BoundaryTag>& tags() const { return tags_; }
  BoundaryTag tag(std::size_t i) const { return tags_[i]; }
  double h() const { return h_; }
  double area(std::size_t t) const { return areas_[t]; }
  /// Gradients of the three P1 hat functions on triangle t (constant).
  const std::array<Vec2, 3>& basis_gradients(std::size_t t) const { return grads_[t]; }

  bool on_boundary(std::size_t v) const { return on_boundary_[v]; }
  /// Boundary edges as (i, j) with the mesh interior on the left.
  const std::vector<std::pair<int, int>>& boundary_edges() const { return boundary_edges_; }

  double total_area() const {
    double s = 0.0;
    for (double a : areas_) s += a;
    return s;
  }
  double mean_triangle_area() const { return triangles_.empty() ? 0.0 : total_area() / static_cast<double>(triangles_.size()); }

  Vec2 centroid(std::size_t t) const {
    const auto& tri = triangles_[t];
    return (vertices_[static_cast<std::size_t>(tri[0])] + vertices_[static_cast<std::size_t>(tri[1])] +
            vertices_[static_cast<std::size_t>(tri[2])]) /
           3.0;
  }

  TriMesh with_tags(std::vector<BoundaryTag> tags) const { return TriMesh(vertices_, triangles_, std::move(tags), h_); }

private:
  void build_boundary() {
    std::map<std::pair<int, int>, int> count;
    for (const auto& tri : triangles_)
      for (int k = 0; k < 3; ++k) {
        const int a = tri[k], b = tri[(k + 1) % 3];
        ++count[{std::min(a, b), std::max(a, b)}];
      }
    on_boundary_.assign(vertices_.size(), false);
    for (const auto& tri : triangles_)
      for (int k = 0; k < 3; ++k) {
        const int a = tri[k], b = tri[(k + 1) % 3];
        const int c = count[{std::min(a, b), std::max(a, b)}];
        if (c > 2) throw MeshError("non-manifold edge");
        if (c == 1) {
          boundary_edges_.emplace_back(a, b);
          on_boundary_[static_cast<std::size_t>(a)] = true;
          on_boundary_[static_cast<std::size_t>(b)] = true;
        }
      }
  }

  std::vector<Vec2> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<BoundaryTag> tags_;
  double h_{0.0};
  std::vector<double> areas_;
  std::vector<std::array<Vec2, 3>> grads_;
  std::vector<bool> on_boundary_;
  std::vector<std::pair<int, int>> boundary_edges_;
};

using MeshPtr = std::shared_ptr<const TriMesh>;

/// Nodal values of a P1 function on a mesh.
struct ScalarField {
  MeshPtr mesh;
  Eigen::VectorXd values;

  ScalarField() = default;
  ScalarField(MeshPtr m, Eigen::VectorXd v) : mesh(std::move(m)), values(std::move(v)) {
    if (!mesh) throw Error("scalar field needs a mesh");
    if (static_cast<std::size_t>(values.size()) != mesh->vertex_count())
      throw Error("field length does not match vertex count");
    if (!values.allFinite()) throw Error("field has non-finite values");
  }

  template <class F>
  static ScalarField interpolate(MeshPtr m, F&& f) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(m->vertex_count()));
    for (std::size_t i = 0; i < m->vertex_count(); ++i) v[static_cast<Eigen::Index>(i)] = f(m->vertex(i));
    return ScalarField(std::move(m), std::move(v));
  }

  double operator[](std::size_t i) const { return values[static_cast<Eigen::Index>(i)]; }
};

/// Constant gradient of the P1 interpolant on triangle t.
inline Vec2 triangle_gradient(const TriMesh& mesh, const Eigen::VectorXd& values, std::size_t t) {
  const auto& tri = mesh.triangle(t);
  const auto& g = mesh.basis_gradients(t);
  return values[tri[0]] * g[0] + values[tri[1]] * g[1] + values[tri[2]] * g[2];
}

inline Vec2 triangle_gradient(const TriMesh& mesh, const ScalarField& field, std::size_t t) {
  return triangle_gradient(mesh, field.values, t);
}

struct MeshOptions {
  double min_angle_deg{20.0};
  std::size_t max_vertices{4'000'000};
};

using SizeFunction = std::function<double(const Vec2&)>;

/// Graded sizing h(x) = min(h_max, h_min + grade * |x - center|).
inline SizeFunction graded_size(double h_min, double grade, double h_max, Vec2 center = Vec2::Zero()) {
  return [=](const Vec2& x) { return std::min(h_max, h_min + grade * (x - center).norm()); };
}

/// Nearest-feature tagging: a boundary vertex is true_boundary when it is at
/// least as close to a domain-line edge as to an arc chord (ties go to true).
inline TriMesh tag_boundary(const TriMesh& mesh, const TruncationPolygon& poly) {
  const auto& loop = poly.vertices;
  const std::size_t n = loop.size();
  const double tol = 1e-9 * (1.0 + poly.radius);
  std::vector<BoundaryTag> tags(mesh.vertex_count(), BoundaryTag::interior);
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
    if (!mesh.on_boundary(v)) continue;
    double d_line = std::numeric_limits<double>::infinity();
    double d_arc = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < n; ++e) {
      const double d = point_segment_distance(mesh.vertex(v), loop[e], loop[(e + 1) % n]);
      if (poly.edge_kinds[e] == EdgeKind::domain_line)
        d_line = std::min(d_line, d);
      else
        d_arc = std::min(d_arc, d);
    }
    tags[v] = d_line <= d_arc + tol ? BoundaryTag::true_boundary : BoundaryTag::cut_boundary;
  }
  return mesh.with_tags(std::move(tags));
}

/// Triangulates a convex CCW loop with a sizing function; all boundary vertices
/// are tagged true_boundary.
inline TriMesh triangulate_loop(const std::vector<Vec2>& loop, const SizeFunction& size, double h_nominal,
                                const MeshOptions& opts = {}) {
  auto raw = detail::refine_convex_polygon(loop, size, opts.min_angle_deg, opts.max_vertices);
  TriMesh mesh(std::move(raw.vertices), std::move(raw.triangles), {}, h_nominal);
  std::vector<BoundaryTag> tags(mesh.vertex_count(), BoundaryTag::interior);
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v)
    if (mesh.on_boundary(v)) tags[v] = BoundaryTag::true_boundary;
  return mesh.with_tags(std::move(tags));
}

/// Triangulates a truncation polygon and tags its boundary. Edges stay below
/// 2 size(x) / sqrt(3).
inline TriMesh triangulate(const TruncationPolygon& poly, const SizeFunction& size, double h_nominal,
                           const MeshOptions& opts = {}) {
  auto raw = detail::refine_convex_polygon(poly.vertices, size, opts.min_angle_deg, opts.max_vertices);
  TriMesh mesh(std::move(raw.vertices), std::move(raw.triangles), {}, h_nominal);
  return tag_boundary(mesh, poly);
}

inline TriMesh triangulate(const TruncationPolygon& poly, double h, const MeshOptions& opts = {}) {
  double diam = 0.0;
  for (const auto& p : poly.vertices)
    for (const auto& q : poly.vertices) diam = std::max(diam, (p - q).norm());
  if (!(h > 0.0) || !(h < diam / 4.0)) throw MeshError("h must satisfy 0 < h < diameter/4");
  return triangulate(poly, [h](const Vec2&) { return h; }, h, opts);
}

/// Structured mesh of the rectangle [lo, hi]: square-ish cells of spacing <= h,
/// diagonals alternating in a checkerboard; every boundary vertex is true_boundary.
inline TriMesh rectangle_mesh(const Vec2& lo, const Vec2& hi, double h) {
  if (!(h > 0.0) || !(hi.x() > lo.x()) || !(hi.y() > lo.y())) throw MeshError("degenerate rectangle or h");
  const int nx = std::max(1, static_cast<int>(std::ceil((hi.x() - lo.x()) / h - 1e-9)));
  const int ny = std::max(1, static_cast<int>(std::ceil((hi.y() - lo.y()) / h - 1e-9)));
  std::vector<Vec2> vs;
  vs.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      vs.emplace_back(lo.x() + (hi.x() - lo.x()) * i / nx, lo.y() + (hi.y() - lo.y()) * j / ny);
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  std::vector<Triangle> ts;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      if ((i + j) % 2 == 0) {
        ts.push_back({a, b, c});
        ts.push_back({a, c, d});
      } else {
        ts.push_back({a, b, d});
        ts.push_back({b, c, d});
      }
    }
  TriMesh mesh(std::move(vs), std::move(ts), {}, h);
  std::vector<BoundaryTag> tags(mesh.vertex_count(), BoundaryTag::interior);
  for (std::size_t v = 0; v < tags.size(); ++v)
    if (mesh.on_boundary(v)) tags[v] = BoundaryTag::true_boundary;
  return mesh.with_tags(std::move(tags));
}

/// Red refinement: each triangle splits into four similar ones through its edge
/// midpoints. Angles are preserved, h halves, the triangle count quadruples.
/// A new boundary vertex inherits the tag shared by its edge's endpoints and is
/// cut_boundary when they differ.
inline TriMesh refine_uniform(const TriMesh& mesh) {
  std::vector<Vec2> vs = mesh.vertices();
  std::vector<BoundaryTag> tags = mesh.tags();
  std::map<std::pair<int, int>, int> mid;
  auto midpoint = [&](int a, int b) {
    const auto key = std::make_pair(std::min(a, b), std::max(a, b));
    const auto it = mid.find(key);
    if (it != mid.end()) return it->second;
    const int id = static_cast<int>(vs.size());
    vs.push_back(0.5 * (mesh.vertex(static_cast<std::size_t>(a)) + mesh.vertex(static_cast<std::size_t>(b))));
    const BoundaryTag ta = mesh.tag(static_cast<std::size_t>(a)), tb = mesh.tag(static_cast<std::size_t>(b));
    tags.push_back(ta == BoundaryTag::interior || tb == BoundaryTag::interior ? BoundaryTag::interior
                   : ta == tb                                                 ? ta
                                                                              : BoundaryTag::cut_boundary);
    mid.emplace(key, id);
    return id;
  };
  std::vector<Triangle> ts;
  ts.reserve(4 * mesh.triangle_count());
  for (const auto& t : mesh.triangles()) {
    const int ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
    ts.push_back({t[0], ab, ca});
    ts.push_back({ab, t[1], bc});
    ts.push_back({ca, bc, t[2]});
    ts.push_back({ab, bc, ca});
  }
  TriMesh out(std::move(vs), std::move(ts), {}, 0.5 * mesh.h());
  // midpoints of interior edges whose endpoints both lie on the boundary
  for (std::size_t v = 0; v < out.vertex_count(); ++v)
    if (!out.on_boundary(v)) tags[v] = BoundaryTag::interior;
  return out.with_tags(std::move(tags));
}

/// Red refinement re-tagged against the truncation polygon.
inline TriMesh refine_uniform(const TriMesh& mesh, const TruncationPolygon& poly) {
  return tag_boundary(refine_uniform(mesh), poly);
}

/// Bucket grid for locating the triangle that contains a point.
class PointLocator {
public:
  explicit PointLocator(MeshPtr mesh) : mesh_(std::move(mesh)) {
    const auto& vs = mesh_->vertices();
    lo_ = hi_ = vs.front();
    for (const auto& p : vs) {
      lo_ = lo_.cwiseMin(p);
      hi_ = hi_.cwiseMax(p);
    }
    const double extent = std::max((hi_ - lo_).maxCoeff(), 1e-12);
    const double cells = std::sqrt(static_cast<double>(mesh_->triangle_count())) + 1.0;
    cell_ = extent / cells;
    nx_ = static_cast<int>((hi_.x() - lo_.x()) / cell_) + 1;
    ny_ = static_cast<int>((hi_.y() - lo_.y()) / cell_) + 1;
    buckets_.resize(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_));
    for (std::size_t t = 0; t < mesh_->triangle_count(); ++t) {
      const auto& tri = mesh_->triangle(t);
      Vec2 a = mesh_->vertex(static_cast<std::size_t>(tri[0])), b = a;
      for (int k = 1; k < 3; ++k) {
        a = a.cwiseMin(mesh_->vertex(static_cast<std::size_t>(tri[k])));
        b = b.cwiseMax(mesh_->vertex(static_cast<std::size_t>(tri[k])));
      }
      const auto [x0, y0] = cell_of(a);
      const auto [x1, y1] = cell_of(b);
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) buckets_[index(x, y)].push_back(static_cast<int>(t));
    }
  }

  struct Hit {
    std::size_t triangle;
    std::array<double, 3> bary;
  };

  /// Triangle containing x (boundary points within a relative tol included).
  std::optional<Hit> locate(const Vec2& x) const {
    if (x.x() < lo_.x() - cell_ || x.y() < lo_.y() - cell_ || x.x() > hi_.x() + cell_ || x.y() > hi_.y() + cell_)
      return std::nullopt;
    const auto [cx, cy] = cell_of(x);
    std::optional<Hit> best;
    double best_min = -std::numeric_limits<double>::infinity();
    for (int t : buckets_[index(cx, cy)]) {
      const auto b = barycentric(static_cast<std::size_t>(t), x);
      const double m = std::min({b[0], b[1], b[2]});
      if (m > best_min) {
        best_min = m;
        best = Hit{static_cast<std::size_t>(t), b};
      }
      if (m >= 0.0) return best;
    }
    if (best && best_min > -1e-10) return best;
    return std::nullopt;
  }

  std::optional<double> evaluate(const Eigen::VectorXd& values, const Vec2& x) const {
    const auto hit = locate(x);
    if (!hit) return std::nullopt;
    const auto& tri = mesh_->triangle(hit->triangle);
    return hit->bary[0] * values[tri[0]] + hit->bary[1] * values[tri[1]] + hit->bary[2] * values[tri[2]];
  }

  const MeshPtr& mesh() const { return mesh_; }

private:
  std::array<double, 3> barycentric(std::size_t t, const Vec2& x) const {
    const auto& tri = mesh_->triangle(t);
    const Vec2& a = mesh_->vertex(static_cast<std::size_t>(tri[0]));
    const Vec2& b = mesh_->vertex(static_cast<std::size_t>(tri[1]));
    const Vec2& c = mesh_->vertex(static_cast<std::size_t>(tri[2]));
    const double twice = 2.0 * mesh_->area(t);
    const double l0 = orient(x, b, c) / twice;
    const double l1 = orient(a, x, c) / twice;
    return {l0, l1, 1.0 - l0 - l1};
  }

  std::pair<int, int> cell_of(const Vec2& p) const {
    return {std::clamp(static_cast<int>((p.x() - lo_.x()) / cell_), 0, nx_ - 1),
            std::clamp(static_cast<int>((p.y() - lo_.y()) / cell_), 0, ny_ - 1)};
  }
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(x); }

  MeshPtr mesh_;
  Vec2 lo_, hi_;
  double cell_{1.0};
  int nx_{1}, ny_{1};
  std::vector<std::vector<int>> buckets_;
};

} // namespace minsurf
