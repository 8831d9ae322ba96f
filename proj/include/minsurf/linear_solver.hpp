#pragma once

// Divergence-form equations div(A grad u) = 0 on P1 meshes, positive solutions
// in cones, and oscillation profiles r -> max_{arc of radius r} u.

#include "mse_solver.hpp"

#include <Eigen/Eigenvalues>

namespace minsurf {

class EllipticityViolation : public Error {
public:
  using Error::Error;
};

/// Symmetric coefficient matrix field with lambda I <= A <= lambda^{-1} I.
struct CoefficientField {
  std::function<Mat2(const Vec2& x, std::size_t triangle)> evaluator;
  double lambda{1.0};

  Mat2 operator()(const Vec2& x, std::size_t t) const { return evaluator(x, t); }

  static CoefficientField identity() {
    return {[](const Vec2&, std::size_t) -> Mat2 { return Mat2::Identity(); }, 1.0};
  }
  static CoefficientField constant(const Mat2& a, double lambda) {
    return {[a](const Vec2&, std::size_t) { return a; }, lambda};
  }
  static CoefficientField per_triangle(std::vector<Mat2> values, double lambda) {
    auto shared = std::make_shared<const std::vector<Mat2>>(std::move(values));
    return {[shared](const Vec2&, std::size_t t) { return (*shared)[t]; }, lambda};
  }
};

inline void check_ellipticity(const Mat2& a, double lambda, const Vec2& where) {
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if (std::abs(a(0, 1) - a(1, 0)) > 1e-12 * scale)
    throw EllipticityViolation("coefficient matrix is not symmetric");
  const Eigen::SelfAdjointEigenSolver<Mat2> eig(a, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues()[0], hi = eig.eigenvalues()[1];
  constexpr double slack = 1e-12;
  if (!(lo >= lambda * (1.0 - slack)) || !(hi <= (1.0 + slack) / lambda)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "ellipticity violated at (%.6g, %.6g): eigenvalues %.6g, %.6g, lambda %.6g",
                  where.x(), where.y(), lo, hi, lambda);
    throw EllipticityViolation(buf);
  }
}

/// Per-triangle stiffness blocks |T| grad(phi_a)^T A(barycenter) grad(phi_b).
inline std::vector<Local3> stiffness_blocks(const TriMesh& mesh, const CoefficientField& a) {
  if (!(a.lambda > 0.0 && a.lambda <= 1.0)) throw EllipticityViolation("lambda must lie in (0, 1]");
  std::vector<Local3> blocks(mesh.triangle_count());
  parallel_for(mesh.triangle_count(), [&](std::size_t t) {
    const Vec2 x = mesh.centroid(t);
    const Mat2 k = a(x, t);
    check_ellipticity(k, a.lambda, x);
    const auto& g = mesh.basis_gradients(t);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) blocks[t](i, j) = mesh.area(t) * g[i].dot(k * g[j]);
  });
  return blocks;
}

/// Stiffness matrix over all vertices (no boundary conditions applied).
inline SparseMatrix assemble(const MeshPtr& mesh, const CoefficientField& a) {
  return P1Pattern::all(mesh).assemble(stiffness_blocks(*mesh, a));
}

/// Pointwise D^2F(grad u) per triangle; lambda = (1 + G^2)^{-3/2} for G = max |grad u|.
inline CoefficientField linearized_coefficients(const TriMesh& mesh, const Eigen::VectorXd& u) {
  std::vector<Mat2> values(mesh.triangle_count());
  double gmax2 = 0.0;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const Vec2 g = triangle_gradient(mesh, u, t);
    gmax2 = std::max(gmax2, g.squaredNorm());
    values[t] = AreaIntegrand::hessian(g);
  }
  return CoefficientField::per_triangle(std::move(values), std::pow(1.0 + gmax2, -1.5));
}
inline CoefficientField linearized_coefficients(const ScalarField& u) { return linearized_coefficients(*u.mesh, u.values); }

/// Solves div(A grad u) = 0 with u equal to `g_nodal` on every boundary vertex.
inline ScalarField solve_linear_dirichlet(const MeshPtr& mesh, const CoefficientField& a, const Eigen::VectorXd& g_nodal,
                                          const LinearSolveOptions& opts = {}, LinearSolveStats* stats_out = nullptr) {
  const auto n = static_cast<Eigen::Index>(mesh->vertex_count());
  if (g_nodal.size() != n) throw Error("boundary vector length mismatch");
  const auto blocks = stiffness_blocks(*mesh, a);
  const P1Pattern inner = P1Pattern::interior(mesh);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  for (Eigen::Index v = 0; v < n; ++v)
    if (mesh->on_boundary(static_cast<std::size_t>(v))) {
      if (!std::isfinite(g_nodal[v])) throw Error("non-finite boundary value");
      u[v] = g_nodal[v];
    }
  if (inner.size() > 0) {
    const Eigen::VectorXd rhs = -inner.restrict(P1Pattern::all(mesh).assemble(blocks) * u);
    Eigen::VectorXd x;
    const auto stats = solve_spd(inner.assemble(blocks), rhs, x, opts);
    if (stats_out) *stats_out = stats;
    inner.add_prolonged(x, 1.0, u);
  }
  return ScalarField(mesh, std::move(u));
}

inline ScalarField solve_linear_dirichlet(const MeshPtr& mesh, const CoefficientField& a,
                                          const std::function<double(const Vec2&, BoundaryTag)>& g,
                                          const LinearSolveOptions& opts = {}) {
  Eigen::VectorXd gn = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh->vertex_count()));
  for (std::size_t v = 0; v < mesh->vertex_count(); ++v)
    if (mesh->on_boundary(v)) gn[static_cast<Eigen::Index>(v)] = g(mesh->vertex(v), mesh->tag(v));
  return solve_linear_dirichlet(mesh, a, gn, opts);
}

// ---- cones ---------------------------------------------------------------

struct ConeMeshSpec {
  double h_min{0.02};       ///< element size at the apex
  double grade{0.05};       ///< size growth per unit distance from the apex
  double h_max{0.5};
  int arc_resolution{720};  ///< chords per full circle on the cap
  MeshOptions mesh{};
};

struct ConeSolution {
  ScalarField field;
  double scale{1.0};  ///< raw u(P) before normalization
};

inline MeshPtr cone_mesh(const ConvexDomain& cone, double radius, const ConeMeshSpec& spec) {
  for (const auto& hp : cone.essential_halfplanes())
    if (std::abs(hp.offset) > 1e-12) throw GeometryError("cone apex must be the origin");
  const auto poly = truncate(cone, radius, 0.0, spec.arc_resolution);
  return std::make_shared<const TriMesh>(
      triangulate(poly, graded_size(spec.h_min, spec.grade, spec.h_max), spec.h_min, spec.mesh));
}

/// Solution of div(A grad u) = 0 in the cone truncated at `radius`, zero on the
/// lateral boundary and `cap_data` on the cap, scaled so that u(P) = 1.
inline ConeSolution cone_positive_solution(const MeshPtr& mesh, const CoefficientField& a,
                                           const std::function<double(const Vec2&)>& cap_data, const Vec2& p,
                                           const LinearSolveOptions& opts = {}) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh->vertex_count()));
  for (std::size_t v = 0; v < mesh->vertex_count(); ++v)
    if (mesh->tag(v) == BoundaryTag::cut_boundary) {
      const double val = cap_data(mesh->vertex(v));
      if (!(val > 0.0)) throw Error("cap data must be positive");
      g[static_cast<Eigen::Index>(v)] = val;
    }
  ScalarField u = solve_linear_dirichlet(mesh, a, g, opts);
  const auto up = PointLocator(mesh).evaluate(u.values, p);
  if (!up) throw Error("normalization point lies outside the mesh");
  if (!(*up > 0.0)) throw Error("solution is not positive at the normalization point");
  u.values /= *up;
  return {std::move(u), *up};
}

inline ConeSolution cone_positive_solution(const ConvexDomain& cone, double radius,
                                           const std::function<double(const Vec2&)>& cap_data, const Vec2& p,
                                           const ConeMeshSpec& spec = {},
                                           const CoefficientField& a = CoefficientField::identity(),
                                           const LinearSolveOptions& opts = {}) {
  if (!contains(cone, p)) throw Error("normalization point lies outside the cone");
  if (std::abs(p.norm() - 1.0) > 1e-9) throw Error("normalization point must be at unit distance from the apex");
  return cone_positive_solution(cone_mesh(cone, radius, spec), a, cap_data, p, opts);
}

// ---- oscillation profiles -------------------------------------------------

enum class TailTrend { increasing, decreasing, mixed };

inline std::string_view to_string(TailTrend t) {
  switch (t) {
  case TailTrend::increasing: return "increasing";
  case TailTrend::decreasing: return "decreasing";
  case TailTrend::mixed: return "mixed";
  }
  return "mixed";
}

struct FitResult {
  double beta{0.0};
  double residual{0.0};  ///< RMS of log-space residuals
};

struct OscillationProfile {
  std::vector<double> radii;
  std::vector<double> osc_values;
  double fitted_beta{std::numeric_limits<double>::quiet_NaN()};
  std::pair<std::size_t, std::size_t> fit_range{0, 0};  ///< inclusive; empty when first > second
  double fit_residual{std::numeric_limits<double>::quiet_NaN()};
  TailTrend tail{TailTrend::mixed};

  std::string to_csv() const {
    std::string out = "r,osc\n";
    for (std::size_t i = 0; i < radii.size(); ++i) out += format_double(radii[i]) + ',' + format_double(osc_values[i]) + '\n';
    out += "# beta=" + format_double(fitted_beta) + " residual=" + format_double(fit_residual) +
           " range=" + std::to_string(fit_range.first) + ',' + std::to_string(fit_range.second) + '\n';
    return out;
  }
};

/// Least-squares slope of log osc against log r over indices [first, last].
inline FitResult fit_power_exponent(const std::vector<double>& radii, const std::vector<double>& osc,
                                    std::pair<std::size_t, std::size_t> range) {
  if (range.second >= radii.size() || range.first > range.second || range.second - range.first + 1 < 4)
    throw Error("fit range needs at least 4 samples");
  const std::size_t n = range.second - range.first + 1;
  double sx = 0, sy = 0;
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = radii[range.first + i], o = osc[range.first + i];
    if (!(o > 0.0) || !(r > 0.0)) throw Error("non-positive oscillation value in fit range");
    lx[i] = std::log(r);
    ly[i] = std::log(o);
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  FitResult fit;
  fit.beta = sxy / sxx;
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = ly[i] - (my + fit.beta * (lx[i] - mx));
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / static_cast<double>(n));
  return fit;
}

inline FitResult fit_power_exponent(OscillationProfile& profile, std::pair<std::size_t, std::size_t> range) {
  const auto fit = fit_power_exponent(profile.radii, profile.osc_values, range);
  profile.fit_range = range;
  profile.fitted_beta = fit.beta;
  profile.fit_residual = fit.residual;
  return fit;
}

/// Outer half of the radii minus the outermost 10%, never below 2h.
inline std::pair<std::size_t, std::size_t> default_fit_range(const std::vector<double>& radii, double h) {
  const std::size_t n = radii.size();
  const std::size_t drop = (n + 9) / 10;
  std::size_t first = n / 2;
  while (first < n && radii[first] < 2.0 * h) ++first;
  if (n <= drop || first + drop >= n) return {1, 0};
  return {first, n - drop - 1};
}

/// Inclusive index range of the radii lying in [r_lo, r_hi].
inline std::pair<std::size_t, std::size_t> radius_range(const std::vector<double>& radii, double r_lo, double r_hi) {
  std::size_t first = 0;
  while (first < radii.size() && radii[first] < r_lo) ++first;
  std::size_t last = first;
  while (last + 1 < radii.size() && radii[last + 1] <= r_hi) ++last;
  if (first >= radii.size() || radii[last] > r_hi) return {1, 0};
  return {first, last};
}

namespace detail {

/// Values of the interpolant on the samples of the circle |x| = r inside the domain and the mesh.
inline std::vector<double> arc_samples(const PointLocator& loc, const Eigen::VectorXd& values, const ConvexDomain& domain,
                                       double r) {
  const double h = loc.mesh()->h();
  const double step = std::min(h / r, 2.0 * kPi / 64.0);
  const auto count = static_cast<std::size_t>(std::ceil(2.0 * kPi / step));
  std::vector<double> out;
  for (std::size_t i = 0; i < count; ++i) {
    const Vec2 x = r * unit_from_angle(2.0 * kPi * static_cast<double>(i) / static_cast<double>(count));
    if (!contains(domain, x)) continue;
    if (const auto v = loc.evaluate(values, x)) out.push_back(*v);
  }
  return out;
}

} // namespace detail

/// osc(r) = max of the interpolant over the arc |x| = r inside the domain, sampled at
/// angular step <= h/r. The default fit range is applied when it holds >= 4 samples.
inline OscillationProfile oscillation_profile(const ScalarField& field, const ConvexDomain& domain,
                                              std::vector<double> radii) {
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (!(radii[i] > 0.0) || (i > 0 && !(radii[i] > radii[i - 1]))) throw Error("radii must be positive and strictly increasing");
  const PointLocator loc(field.mesh);
  OscillationProfile prof;
  prof.radii = std::move(radii);
  prof.osc_values.resize(prof.radii.size());
  parallel_for(prof.radii.size(), [&](std::size_t i) {
    const auto s = detail::arc_samples(loc, field.values, domain, prof.radii[i]);
    if (s.empty()) throw Error("radius " + format_double(prof.radii[i]) + " lies outside the mesh");
    prof.osc_values[i] = std::max(0.0, *std::max_element(s.begin(), s.end()));
  });

  const std::size_t n = prof.radii.size();
  if (n >= 3) {
    const std::size_t start = n / 2;
    bool inc = true, dec = true;
    for (std::size_t i = start + 1; i < n; ++i) {
      inc = inc && prof.osc_values[i] > prof.osc_values[i - 1];
      dec = dec && prof.osc_values[i] < prof.osc_values[i - 1];
    }
    prof.tail = inc ? TailTrend::increasing : dec ? TailTrend::decreasing : TailTrend::mixed;
  }
  const auto range = default_fit_range(prof.radii, field.mesh->h());
  if (range.first <= range.second && range.second - range.first + 1 >= 4) {
    bool positive = true;
    for (std::size_t i = range.first; i <= range.second; ++i) positive = positive && prof.osc_values[i] > 0.0;
    if (positive) fit_power_exponent(prof, range);
  }
  return prof;
}

/// One-step drop sup_{arc 2r} u+ / sup_{boundary of the annulus r<|x|<4r} u+.
/// The annulus boundary is sampled on both arcs plus the mesh boundary nodes between them.
inline double oscillation_drop(const ScalarField& field, const ConvexDomain& domain, double r) {
  const PointLocator loc(field.mesh);
  auto sup_plus = [](const std::vector<double>& s) {
    double m = 0.0;
    for (double v : s) m = std::max(m, v);
    return m;
  };
  const auto mid = detail::arc_samples(loc, field.values, domain, 2.0 * r);
  const auto inner = detail::arc_samples(loc, field.values, domain, r);
  const auto outer = detail::arc_samples(loc, field.values, domain, 4.0 * r);
  if (mid.empty() || inner.empty() || outer.empty()) throw Error("annulus lies outside the mesh");
  double denom = std::max(sup_plus(inner), sup_plus(outer));
  const TriMesh& m = *field.mesh;
  for (std::size_t v = 0; v < m.vertex_count(); ++v) {
    const double rv = m.vertex(v).norm();
    if (m.on_boundary(v) && rv > r && rv < 4.0 * r) denom = std::max(denom, field[v]);
  }
  if (!(denom > 0.0)) return 0.0;
  return sup_plus(mid) / denom;
}

} // namespace minsurf
