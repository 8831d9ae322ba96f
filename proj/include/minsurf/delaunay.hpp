#pragma once

// Incremental Bowyer-Watson triangulation with Delaunay refinement (Ruppert
// style) for convex polygons. Used by mesh.hpp; not part of the public API.

#include "geometry.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <unordered_map>

namespace minsurf {

class MeshError : public Error {
public:
  using Error::Error;
};

namespace detail {

inline double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p) {
  const double adx = a.x() - p.x(), ady = a.y() - p.y();
  const double bdx = b.x() - p.x(), bdy = b.y() - p.y();
  const double cdx = c.x() - p.x(), cdy = c.y() - p.y();
  const double ad = adx * adx + ady * ady;
  const double bd = bdx * bdx + bdy * bdy;
  const double cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

class Triangulation {
public:
  struct Tri {
    std::array<int, 3> v{};
    std::array<int, 3> nb{-1, -1, -1};  // nb[i] is across the edge opposite v[i]
    bool alive{true};
  };

  static constexpr int kSuper = 3;

  Triangulation(const Vec2& lo, const Vec2& hi) {
    const Vec2 c = 0.5 * (lo + hi);
    const double l = std::max((hi - lo).maxCoeff(), 1e-9);
    const double s = 30.0 * l;
    points_ = {c + Vec2(-s, -s), c + Vec2(s, -s), c + Vec2(0.0, s)};
    vert_tri_ = {0, 0, 0};
    tris_.push_back(Tri{{0, 1, 2}, {-1, -1, -1}, true});
  }

  const std::vector<Vec2>& points() const { return points_; }
  const std::vector<Tri>& tris() const { return tris_; }

  bool is_super(int v) const { return v < kSuper; }
  bool touches_super(int t) const {
    const auto& v = tris_[static_cast<std::size_t>(t)].v;
    return is_super(v[0]) || is_super(v[1]) || is_super(v[2]);
  }

  int any_triangle_at(int v) const { return vert_tri_[static_cast<std::size_t>(v)]; }

  /// Stochastic visibility walk; random edge order keeps it from cycling on
  /// near-cocircular configurations.
  int locate(const Vec2& p, int start) const {
    int t = (start >= 0 && tris_[static_cast<std::size_t>(start)].alive) ? start : last_alive();
    int prev = -1;
    for (std::size_t guard = 0; guard < 8 * tris_.size() + 64; ++guard) {
      const Tri& tri = tris_[static_cast<std::size_t>(t)];
      walk_state_ = walk_state_ * 6364136223846793005ULL + 1442695040888963407ULL;
      const int first = static_cast<int>((walk_state_ >> 33) % 3);
      int next = -1;
      bool outside = false;
      for (int k = 0; k < 3; ++k) {
        const int i = (first + k) % 3;
        if (tri.nb[i] == prev && prev >= 0) continue;
        if (orient(pt(tri.v[(i + 1) % 3]), pt(tri.v[(i + 2) % 3]), p) < 0.0) {
          next = tri.nb[i];
          outside = next < 0;
          break;
        }
      }
      if (outside) throw MeshError("point outside the triangulation bounding region");
      if (next == -1) return t;
      prev = t;
      t = next;
    }
    throw MeshError("point location did not terminate");
  }

  /// Inserts p and returns its vertex index; `created` receives the new triangles.
  int insert(const Vec2& p, int hint, std::vector<int>& created) {
    created.clear();
    const int t0 = locate(p, hint);
    for (int k = 0; k < 3; ++k) {
      const int v = tris_[static_cast<std::size_t>(t0)].v[k];
      if ((pt(v) - p).norm() <= 1e-13 * (1.0 + p.norm())) return v;
    }
    const int pid = static_cast<int>(points_.size());
    points_.push_back(p);
    vert_tri_.push_back(-1);

    // cavity of triangles whose circumcircle contains p
    ++stamp_;
    cavity_.clear();
    auto mark = [&](int t) {
      if (mark_.size() < tris_.size()) mark_.resize(tris_.size(), 0);
      mark_[static_cast<std::size_t>(t)] = stamp_;
      cavity_.push_back(t);
    };
    auto marked = [&](int t) {
      return static_cast<std::size_t>(t) < mark_.size() && mark_[static_cast<std::size_t>(t)] == stamp_;
    };
    mark(t0);
    for (std::size_t q = 0; q < cavity_.size(); ++q) {
      const Tri& tri = tris_[static_cast<std::size_t>(cavity_[q])];
      for (int i = 0; i < 3; ++i) {
        const int n = tri.nb[i];
        if (n < 0 || marked(n)) continue;
        const Tri& nt = tris_[static_cast<std::size_t>(n)];
        if (incircle(pt(nt.v[0]), pt(nt.v[1]), pt(nt.v[2]), p) > 0.0) mark(n);
      }
    }
    // enforce star-shapedness with respect to p
    for (bool grown = true; grown;) {
      grown = false;
      for (std::size_t q = 0; q < cavity_.size(); ++q) {
        const Tri tri = tris_[static_cast<std::size_t>(cavity_[q])];
        for (int i = 0; i < 3; ++i) {
          const int n = tri.nb[i];
          if (n >= 0 && marked(n)) continue;
          if (orient(pt(tri.v[(i + 1) % 3]), pt(tri.v[(i + 2) % 3]), p) <= 0.0) {
            if (n < 0) throw MeshError("cavity reached the outer hull");
            mark(n);
            grown = true;
          }
        }
      }
    }

    struct Link {
      int a, b, tri;
    };
    std::vector<Link> links;
    for (int ct : cavity_) {
      const Tri tri = tris_[static_cast<std::size_t>(ct)];
      for (int i = 0; i < 3; ++i) {
        const int n = tri.nb[i];
        if (n >= 0 && marked(n)) continue;
        const int a = tri.v[(i + 1) % 3];
        const int b = tri.v[(i + 2) % 3];
        const int nt = static_cast<int>(tris_.size());
        tris_.push_back(Tri{{a, b, pid}, {-1, -1, n}, true});
        if (n >= 0) {
          Tri& outer = tris_[static_cast<std::size_t>(n)];
          for (int j = 0; j < 3; ++j)
            if (outer.nb[j] == ct) outer.nb[j] = nt;
        }
        links.push_back({a, b, nt});
        created.push_back(nt);
      }
    }
    for (int ct : cavity_) tris_[static_cast<std::size_t>(ct)].alive = false;
    for (const Link& l : links) {
      Tri& t = tris_[static_cast<std::size_t>(l.tri)];
      // nb[0] is across edge (b, p): the new triangle starting at b
      // nb[1] is across edge (p, a): the new triangle ending at a
      for (const Link& o : links) {
        if (o.a == l.b) t.nb[0] = o.tri;
        if (o.b == l.a) t.nb[1] = o.tri;
      }
      vert_tri_[static_cast<std::size_t>(l.a)] = l.tri;
      vert_tri_[static_cast<std::size_t>(l.b)] = l.tri;
      vert_tri_[static_cast<std::size_t>(pid)] = l.tri;
    }
    last_ = created.empty() ? last_ : created.back();
#ifdef MINSURF_DEBUG_TRI
    validate();
#endif
    return pid;
  }

  /// Triangle holding the directed edge a->b (CCW), or -1.
  int find_directed_edge(int a, int b) const {
    const int start = vert_tri_[static_cast<std::size_t>(a)];
    int t = start;
    for (std::size_t guard = 0; guard < 1024; ++guard) {
      const Tri& tri = tris_[static_cast<std::size_t>(t)];
      int i = 0;
      while (tri.v[i] != a) ++i;
      if (tri.v[(i + 1) % 3] == b) return t;
      // rotate clockwise around a: across the edge (a, v[i+1]), opposite v[i+2]
      t = tri.nb[(i + 2) % 3];
      if (t < 0 || t == start) return -1;
    }
    return -1;
  }

  const Vec2& pt(int v) const { return points_[static_cast<std::size_t>(v)]; }

  void validate() const {
    for (std::size_t t = 0; t < tris_.size(); ++t) {
      const Tri& tr = tris_[t];
      if (!tr.alive) continue;
      if (orient(pt(tr.v[0]), pt(tr.v[1]), pt(tr.v[2])) <= 0.0) throw MeshError("inverted triangle");
      for (int i = 0; i < 3; ++i) {
        const int n = tr.nb[i];
        if (n < 0) continue;
        const Tri& o = tris_[static_cast<std::size_t>(n)];
        if (!o.alive) throw MeshError("dead neighbour");
        const int a = tr.v[(i + 1) % 3], b = tr.v[(i + 2) % 3];
        bool ok = false;
        for (int j = 0; j < 3; ++j)
          ok = ok || (o.v[(j + 1) % 3] == b && o.v[(j + 2) % 3] == a && o.nb[j] == static_cast<int>(t));
        if (!ok) throw MeshError("broken adjacency");
      }
    }
  }

private:
  int last_alive() const {
    if (last_ >= 0 && tris_[static_cast<std::size_t>(last_)].alive) return last_;
    for (std::size_t t = tris_.size(); t-- > 0;)
      if (tris_[t].alive) return static_cast<int>(t);
    throw MeshError("no live triangle");
  }

  std::vector<Vec2> points_;
  std::vector<Tri> tris_;
  std::vector<int> vert_tri_;
  std::vector<int> cavity_;
  std::vector<unsigned> mark_;
  unsigned stamp_{0};
  mutable std::uint64_t walk_state_{0x9E3779B97F4A7C15ULL};
  int last_{0};
};

struct Segment {
  int a, b;
  int edge;  // index of the polygon edge it lies on
  bool alive{true};
};

/// Uniform bucket grid over segment diametral discs.
class SegmentGrid {
public:
  SegmentGrid(const Vec2& lo, const Vec2& hi, double cell) : lo_(lo), cell_(cell) {
    nx_ = std::max(1, static_cast<int>(std::ceil((hi.x() - lo.x()) / cell)) + 1);
    ny_ = std::max(1, static_cast<int>(std::ceil((hi.y() - lo.y()) / cell)) + 1);
    buckets_.resize(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_));
  }

  void add(int id, const Vec2& a, const Vec2& b) {
    const Vec2 m = 0.5 * (a + b);
    const double r = 0.5 * (b - a).norm();
    for_cells(m, r, [&](std::vector<int>& bucket) { bucket.push_back(id); });
  }

  template <class F>
  void query(const Vec2& p, F&& visit) const {
    const int ix = std::clamp(static_cast<int>((p.x() - lo_.x()) / cell_), 0, nx_ - 1);
    const int iy = std::clamp(static_cast<int>((p.y() - lo_.y()) / cell_), 0, ny_ - 1);
    for (int id : buckets_[static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(ix)])
      visit(id);
  }

private:
  template <class F>
  void for_cells(const Vec2& c, double r, F&& f) {
    const int x0 = std::clamp(static_cast<int>((c.x() - r - lo_.x()) / cell_), 0, nx_ - 1);
    const int x1 = std::clamp(static_cast<int>((c.x() + r - lo_.x()) / cell_), 0, nx_ - 1);
    const int y0 = std::clamp(static_cast<int>((c.y() - r - lo_.y()) / cell_), 0, ny_ - 1);
    const int y1 = std::clamp(static_cast<int>((c.y() + r - lo_.y()) / cell_), 0, ny_ - 1);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        f(buckets_[static_cast<std::size_t>(y) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(x)]);
  }

  Vec2 lo_;
  double cell_;
  int nx_{1}, ny_{1};
  std::vector<std::vector<int>> buckets_;
};

struct RefinedMesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
};

/// Circumradius bound relative to the size: an equilateral triangle at the bound
/// has edge length equal to the size.
inline const double kCircumradiusFactor = 1.0 / std::sqrt(3.0);

/// Conforming Delaunay refinement of a convex CCW polygon: every triangle ends
/// with min angle >= min_angle_deg and circumradius <= size(centroid) / sqrt(3),
/// so edges are at most 2 size / sqrt(3).
inline RefinedMesh refine_convex_polygon(const std::vector<Vec2>& polygon,
                                         const std::function<double(const Vec2&)>& size,
                                         double min_angle_deg, std::size_t max_vertices) {
  if (polygon.size() < 3 || !is_convex_ccw(polygon, 1e-10) || polygon_area(polygon) <= 0.0)
    throw MeshError("degenerate polygon");
  if (!(min_angle_deg > 0.0 && min_angle_deg <= 25.0))
    throw MeshError("min angle must lie in (0, 25] degrees for refinement to terminate");

  Vec2 lo = polygon.front(), hi = polygon.front();
  for (const auto& p : polygon) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  Triangulation tri(lo, hi);
  std::vector<int> created;
  std::deque<int> tri_queue;
  auto enqueue_created = [&] {
    for (int t : created) tri_queue.push_back(t);
  };

  // boundary points
  std::vector<Segment> segs;
  double min_seg = std::numeric_limits<double>::infinity();
  double max_seg = 0.0;
  int hint = 0;
  const std::size_t n = polygon.size();
  std::vector<int> corner(n);
  for (std::size_t i = 0; i < n; ++i) {
    corner[i] = tri.insert(polygon[i], hint, created);
    hint = created.empty() ? hint : created.back();
  }
  for (std::size_t e = 0; e < n; ++e) {
    const Vec2& a = polygon[e];
    const Vec2& b = polygon[(e + 1) % n];
    const double len = (b - a).norm();
    const double h = std::min({size(a), size(b), size(0.5 * (a + b))});
    if (!(h > 0.0)) throw MeshError("size function must be positive");
    const int pieces = std::max(1, static_cast<int>(std::ceil(len / h - 1e-9)));
    int prev = corner[e];
    for (int k = 1; k <= pieces; ++k) {
      int cur;
      if (k == pieces) {
        cur = corner[(e + 1) % n];
      } else {
        cur = tri.insert(a + (b - a) * (static_cast<double>(k) / pieces), hint, created);
        hint = created.empty() ? hint : created.back();
      }
      segs.push_back({prev, cur, static_cast<int>(e), true});
      const double sl = len / pieces;
      min_seg = std::min(min_seg, sl);
      max_seg = std::max(max_seg, sl);
      prev = cur;
    }
  }
  SegmentGrid grid(lo - Vec2::Constant(max_seg), hi + Vec2::Constant(max_seg),
                   std::max(0.5 * max_seg, 1e-9 * (hi - lo).maxCoeff()));
  for (std::size_t s = 0; s < segs.size(); ++s) grid.add(static_cast<int>(s), tri.pt(segs[s].a), tri.pt(segs[s].b));

  std::deque<int> seg_queue;
  for (std::size_t s = 0; s < segs.size(); ++s) seg_queue.push_back(static_cast<int>(s));

  auto check_budget = [&] {
    if (tri.points().size() > max_vertices) throw MeshError("refinement exceeded the vertex budget");
  };

  auto encroached = [&](const Segment& s) {
    const int t = tri.find_directed_edge(s.a, s.b);
    if (t < 0) return true;
    const auto& tv = tri.tris()[static_cast<std::size_t>(t)].v;
    int i = 0;
    while (tv[i] != s.a) ++i;
    const Vec2& apex = tri.pt(tv[(i + 2) % 3]);
    return (tri.pt(s.a) - apex).dot(tri.pt(s.b) - apex) < 0.0;
  };

  auto split = [&](int sid) {
    Segment s = segs[static_cast<std::size_t>(sid)];
    segs[static_cast<std::size_t>(sid)].alive = false;
    const Vec2 mid = 0.5 * (tri.pt(s.a) + tri.pt(s.b));
    const int start = tri.any_triangle_at(s.a);
    const int m = tri.insert(mid, start, created);
    enqueue_created();
    check_budget();
    for (auto [p, q] : {std::pair{s.a, m}, std::pair{m, s.b}}) {
      const int id = static_cast<int>(segs.size());
      segs.push_back({p, q, s.edge, true});
      grid.add(id, tri.pt(p), tri.pt(q));
      seg_queue.push_back(id);
    }
    grid.query(mid, [&](int other) {
      if (segs[static_cast<std::size_t>(other)].alive) seg_queue.push_back(other);
    });
  };

  auto drain_segments = [&] {
    while (!seg_queue.empty()) {
      const int s = seg_queue.front();
      seg_queue.pop_front();
      if (segs[static_cast<std::size_t>(s)].alive && encroached(segs[static_cast<std::size_t>(s)])) split(s);
    }
  };

  drain_segments();
  for (std::size_t t = 0; t < tri.tris().size(); ++t)
    if (tri.tris()[t].alive) tri_queue.push_back(static_cast<int>(t));

  const double min_angle_rad = min_angle_deg * kPi / 180.0;
  while (!tri_queue.empty() || !seg_queue.empty()) {
    drain_segments();
    if (tri_queue.empty()) break;
    const int t = tri_queue.front();
    tri_queue.pop_front();
    const auto& rec = tri.tris()[static_cast<std::size_t>(t)];
    if (!rec.alive || tri.touches_super(t)) continue;
    const Vec2 a = tri.pt(rec.v[0]), b = tri.pt(rec.v[1]), c = tri.pt(rec.v[2]);
    const Vec2 cc = circumcenter(a, b, c);
    const double radius = (cc - a).norm();
    const bool bad_shape = min_angle(a, b, c) < min_angle_rad;
    const bool too_big = radius > kCircumradiusFactor * size((a + b + c) / 3.0);
    if (!bad_shape && !too_big) continue;

    std::vector<int> hit;
    grid.query(cc, [&](int sid) {
      const Segment& s = segs[static_cast<std::size_t>(sid)];
      if (!s.alive) return;
      const Vec2 pa = tri.pt(s.a), pb = tri.pt(s.b);
      if ((pa - cc).dot(pb - cc) < 0.0) hit.push_back(sid);
    });
    if (hit.empty() && !convex_contains(polygon, cc, 0.0)) {
      // numerically outside yet unencroached: split the closest segment
      double best = std::numeric_limits<double>::infinity();
      int best_id = -1;
      for (std::size_t s = 0; s < segs.size(); ++s) {
        if (!segs[s].alive) continue;
        const double d = point_segment_distance(cc, tri.pt(segs[s].a), tri.pt(segs[s].b));
        if (d < best) {
          best = d;
          best_id = static_cast<int>(s);
        }
      }
      hit.push_back(best_id);
    }
    if (!hit.empty()) {
      for (int sid : hit)
        if (segs[static_cast<std::size_t>(sid)].alive) split(sid);
      tri_queue.push_back(t);
      continue;
    }
    tri.insert(cc, t, created);
    enqueue_created();
    check_budget();
  }

  RefinedMesh out;
  std::vector<int> remap(tri.points().size(), -1);
  for (std::size_t v = Triangulation::kSuper; v < tri.points().size(); ++v) {
    remap[v] = static_cast<int>(out.vertices.size());
    out.vertices.push_back(tri.points()[v]);
  }
  for (std::size_t t = 0; t < tri.tris().size(); ++t) {
    const auto& rec = tri.tris()[t];
    if (!rec.alive || tri.touches_super(static_cast<int>(t))) continue;
    out.triangles.push_back({remap[static_cast<std::size_t>(rec.v[0])], remap[static_cast<std::size_t>(rec.v[1])],
                             remap[static_cast<std::size_t>(rec.v[2])]});
  }
  return out;
}

} // namespace detail
} // namespace minsurf
