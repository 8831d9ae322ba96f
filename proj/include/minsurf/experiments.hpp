#pragma once

// Experiment drivers: exhaustion by nested truncations, comparison of ordered
// data, half-space leaves u_c with their slope, the c-derivative of the leaves,
// and independence of the minimizer from the Newton start.

#include "linear_solver.hpp"

#include <optional>

namespace minsurf {

class PreconditionViolation : public Error {
public:
  using Error::Error;
};

class CertificateFailure : public Error {
public:
  using Error::Error;
};

struct Stage {
  double k{1.0};       ///< truncation radius
  double margin{0.0};
  double h{0.1};
};

/// Stages k with margin 1/k at a common h.
inline std::vector<Stage> reciprocal_schedule(const std::vector<double>& ks, double h) {
  std::vector<Stage> s;
  for (double k : ks) s.push_back({k, 1.0 / k, h});
  return s;
}

struct ExperimentOptions {
  int arc_resolution{512};
  NewtonOptions newton = harmonic_start();
  MeshOptions mesh{};
  bool warm_start{false};  ///< exhaustion stages after the first start from the previous stage

  static NewtonOptions harmonic_start() {
    NewtonOptions n;
    n.init = InitialGuess::harmonic;
    return n;
  }
};

inline MeshPtr truncation_mesh(const TruncationPolygon& poly, double h, const ExperimentOptions& opts) {
  return std::make_shared<const TriMesh>(triangulate(poly, h, opts.mesh));
}

inline MeshPtr truncation_mesh(const ConvexDomain& domain, const Stage& s, const ExperimentOptions& opts) {
  return truncation_mesh(truncate(domain, s.k, s.margin, opts.arc_resolution), s.h, opts);
}

/// Convex loop scaled by `factor` about its area centroid.
inline std::vector<Vec2> scaled_about_centroid(const std::vector<Vec2>& loop, double factor) {
  const Vec2 c = polygon_centroid(loop);
  std::vector<Vec2> out;
  out.reserve(loop.size());
  for (const auto& p : loop) out.push_back(c + factor * (p - c));
  return out;
}

// ---- exhaustion -----------------------------------------------------------

struct ExhaustionRun {
  ConvexDomain domain;
  BoundaryData data;
  std::vector<Stage> schedule;
  std::vector<Vec2> compact_set;
  std::vector<ScalarField> fields;
  std::vector<SolveReport> reports;
  std::vector<double> deltas;        ///< sup_K |u_{i+1} - u_i|, one per consecutive pair
  std::vector<double> deviation_on_k; ///< sup_K |u_i - l| per stage
  bool converged{false};
};

/// Values of a coarse field at the vertices of `fine` inside `region`, with the
/// fine vertex indices they belong to.
inline std::vector<std::pair<std::size_t, double>> transfer_inside(const PointLocator& coarse, const Eigen::VectorXd& values,
                                                                   const TriMesh& fine, const std::vector<Vec2>& region) {
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t v = 0; v < fine.vertex_count(); ++v) {
    if (!convex_contains(region, fine.vertex(v), 0.0)) continue;
    const auto val = coarse.evaluate(values, fine.vertex(v));
    if (!val) throw Error("compact set leaves a truncation mesh");
    out.emplace_back(v, *val);
  }
  return out;
}

/// Solves on each truncation in turn (boundary data g on the whole cut polygon)
/// and monitors convergence on the compact set K. An empty K selects the first
/// truncation scaled by 0.5 about its centroid.
inline ExhaustionRun run_exhaustion(const ConvexDomain& domain, const BoundaryData& data, std::vector<Stage> schedule,
                                    std::vector<Vec2> compact_set = {}, const ExperimentOptions& opts = {},
                                    double tol_exhaustion = 1e-3) {
  if (schedule.empty()) throw Error("exhaustion needs at least one stage");
  for (std::size_t i = 1; i < schedule.size(); ++i)
    if (!(schedule[i].k > schedule[i - 1].k)) throw Error("schedule must be strictly increasing in k");
  ExhaustionRun run{domain, data, std::move(schedule), std::move(compact_set), {}, {}, {}, {}, false};

  const auto& s0 = run.schedule.front();
  const auto first = truncate(domain, s0.k, s0.margin, opts.arc_resolution);
  const MeshPtr first_mesh = truncation_mesh(first, s0.h, opts);
  if (run.compact_set.empty()) run.compact_set = scaled_about_centroid(first.vertices, 0.5);
  if (!is_convex_ccw(run.compact_set, 1e-12)) throw Error("compact set must be a convex CCW polygon");
  for (const auto& p : run.compact_set)
    if (!convex_contains(first.vertices, p, 0.0)) throw Error("compact set is not contained in the first truncation");

  for (std::size_t i = 0; i < run.schedule.size(); ++i) {
    const MeshPtr mesh = i == 0 ? first_mesh : truncation_mesh(domain, run.schedule[i], opts);
    NewtonOptions newton = opts.newton;
    if (i > 0 && opts.warm_start) {
      // warm start from the previous stage where it is defined
      const PointLocator prev(run.fields.back().mesh);
      Eigen::VectorXd init(static_cast<Eigen::Index>(mesh->vertex_count()));
      for (std::size_t v = 0; v < mesh->vertex_count(); ++v) {
        const auto val = prev.evaluate(run.fields.back().values, mesh->vertex(v));
        init[static_cast<Eigen::Index>(v)] = val ? *val : data.plane(mesh->vertex(v));
      }
      newton.init = InitialGuess::custom;
      newton.custom_init = std::move(init);
    }
    auto res = solve_dirichlet(mesh, data, newton);
    double dev = 0.0;
    for (std::size_t v = 0; v < mesh->vertex_count(); ++v)
      if (convex_contains(run.compact_set, mesh->vertex(v), 0.0))
        dev = std::max(dev, std::abs(res.field[v] - data.linear(mesh->vertex(v))));
    run.deviation_on_k.push_back(dev);
    if (i > 0) {
      const PointLocator prev(run.fields.back().mesh);
      double d = 0.0;
      for (const auto& [v, val] : transfer_inside(prev, run.fields.back().values, *mesh, run.compact_set))
        d = std::max(d, std::abs(res.field[v] - val));
      run.deltas.push_back(d);
    }
    run.fields.push_back(std::move(res.field));
    run.reports.push_back(std::move(res.report));
  }
  run.converged = !run.deltas.empty() && run.deltas.back() <= tol_exhaustion;
  return run;
}

// ---- comparison -----------------------------------------------------------

struct ComparisonResult {
  double violation{0.0};  ///< max over interior vertices of (u1 - u2)+
  ScalarField u1, u2;
  SolveReport report1, report2;
};

/// Solves both problems on one truncation (radius k, margin 1/k unless given,
/// mesh size h) after checking g1 <= g2 at every boundary vertex.
inline ComparisonResult comparison_test(const ConvexDomain& domain, const BoundaryData& data1, const BoundaryData& data2,
                                        double k, double h, const ExperimentOptions& opts = {},
                                        std::optional<double> margin = {}) {
  const MeshPtr mesh = truncation_mesh(domain, {k, margin.value_or(1.0 / k), h}, opts);
  double worst = -std::numeric_limits<double>::infinity();
  Vec2 where = Vec2::Zero();
  for (std::size_t v = 0; v < mesh->vertex_count(); ++v)
    if (mesh->on_boundary(v)) {
      const double gap = data1(mesh->vertex(v)) - data2(mesh->vertex(v));
      if (gap > worst) {
        worst = gap;
        where = mesh->vertex(v);
      }
    }
  if (worst > 0.0) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "boundary data are not ordered: g1 - g2 = %.6g at (%.6g, %.6g)", worst, where.x(), where.y());
    throw PreconditionViolation(buf);
  }
  auto r1 = solve_dirichlet(mesh, data1, opts.newton);
  auto r2 = solve_dirichlet(mesh, data2, opts.newton);
  double viol = 0.0;
  for (std::size_t v = 0; v < mesh->vertex_count(); ++v)
    if (!mesh->on_boundary(v)) viol = std::max(viol, r1.field[v] - r2.field[v]);
  return {viol, std::move(r1.field), std::move(r2.field), std::move(r1.report), std::move(r2.report)};
}

// ---- foliation ------------------------------------------------------------

struct FoliationRun {
  BoundaryData base;  ///< l and phi; c is set per leaf
  std::vector<double> c_values;
  MeshPtr mesh;
  std::vector<Vec2> polygon;  ///< truncation boundary loop
  std::vector<ScalarField> leaves;
  std::vector<SolveReport> reports;
  double phi_sup{0.0};
  std::vector<double> estimates;  ///< max_x |u_c - l - c x2| per leaf
  std::vector<double> min_gaps;   ///< min over interior vertices of u_{c'} - u_c, consecutive pairs

  std::size_t index_of(double c) const {
    for (std::size_t i = 0; i < c_values.size(); ++i)
      if (std::abs(c_values[i] - c) <= 1e-12 * (1.0 + std::abs(c))) return i;
    throw Error("c = " + format_double(c) + " is not a leaf of this run");
  }
  const ScalarField& leaf(double c) const { return leaves[index_of(c)]; }
};

/// Leaves u_c with boundary data l + c x2 + phi on the half-disk of radius k
/// (no inner margin, so the true boundary is exactly {x2 = 0}).
inline FoliationRun foliation_sweep(const ConvexDomain& halfspace, const BoundaryData& base, std::vector<double> c_values,
                                    double k, double h, const ExperimentOptions& opts = {}) {
  if (classify(halfspace) != DomainKind::half_space) throw PreconditionViolation("foliation needs a half-space domain");
  const auto& hp = halfspace.essential_halfplanes().front();
  if ((hp.normal - Vec2(0, -1)).norm() > 1e-12 || std::abs(hp.offset) > 1e-12)
    throw PreconditionViolation("foliation expects the half-space {x2 > 0}");
  if (c_values.empty()) throw Error("foliation needs at least one c value");
  for (std::size_t i = 1; i < c_values.size(); ++i)
    if (!(c_values[i] > c_values[i - 1])) throw Error("c_values must be strictly increasing");

  FoliationRun run;
  run.base = base;
  run.c_values = std::move(c_values);
  const auto poly = truncate(halfspace, k, 0.0, opts.arc_resolution);
  run.polygon = poly.vertices;
  run.mesh = truncation_mesh(poly, h, opts);
  run.phi_sup = base.phi_sup();
  run.leaves.resize(run.c_values.size());
  run.reports.resize(run.c_values.size());
  for (std::size_t i = 0; i < run.c_values.size(); ++i) {
    BoundaryData d = base;
    d.c = run.c_values[i];
    auto res = solve_dirichlet(run.mesh, d, opts.newton);
    double est = 0.0;
    for (std::size_t v = 0; v < run.mesh->vertex_count(); ++v)
      est = std::max(est, std::abs(res.field[v] - d.plane(run.mesh->vertex(v))));
    run.estimates.push_back(est);
    run.leaves[i] = std::move(res.field);
    run.reports[i] = std::move(res.report);
  }
  for (std::size_t i = 1; i < run.leaves.size(); ++i) {
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < run.mesh->vertex_count(); ++v)
      if (!run.mesh->on_boundary(v)) gap = std::min(gap, run.leaves[i][v] - run.leaves[i - 1][v]);
    run.min_gaps.push_back(gap);
  }
  return run;
}

struct SlopeEstimate {
  double c_hat{0.0};
  double lo{0.0}, hi{0.0};    ///< certificate: every c in [lo, hi] keeps |u - l - c x2| <= bound on the samples
  double bound{0.0};          ///< phi_sup + tolerance
  std::size_t samples{0};
  bool clamped{false};        ///< median fell outside [lo, hi] and was moved to its nearest end

  bool overlaps(const SlopeEstimate& o) const { return lo <= o.hi && o.lo <= hi; }
};

/// Far-field slope: median of (u - l) / x2 over vertices with x2 at least half the
/// mesh height, certified against the bound phi_sup + tolerance.
inline SlopeEstimate recover_slope(const ScalarField& u, const ConvexDomain& halfspace, const BoundaryData& l,
                                   double phi_sup, double tolerance = 0.02) {
  if (classify(halfspace) != DomainKind::half_space) throw PreconditionViolation("slope recovery needs a half-space domain");
  const TriMesh& m = *u.mesh;
  double height = 0.0;
  for (const auto& p : m.vertices()) height = std::max(height, p.y());
  if (!(height > 0.0)) throw Error("mesh has no points with x2 > 0");
  SlopeEstimate est;
  est.bound = phi_sup + tolerance;
  est.lo = -std::numeric_limits<double>::infinity();
  est.hi = std::numeric_limits<double>::infinity();
  std::vector<double> ratios;
  for (std::size_t v = 0; v < m.vertex_count(); ++v) {
    const Vec2& x = m.vertex(v);
    if (x.y() < 0.5 * height) continue;
    const double r = u[v] - l.linear(x);
    ratios.push_back(r / x.y());
    est.lo = std::max(est.lo, (r - est.bound) / x.y());
    est.hi = std::min(est.hi, (r + est.bound) / x.y());
  }
  est.samples = ratios.size();
  if (ratios.empty()) throw Error("no far-field samples");
  if (!(est.lo <= est.hi)) throw CertificateFailure("no slope keeps the field within phi_sup + tolerance of a plane");
  const auto mid = ratios.begin() + static_cast<std::ptrdiff_t>(ratios.size() / 2);
  std::nth_element(ratios.begin(), mid, ratios.end());
  double median = *mid;
  if (ratios.size() % 2 == 0) median = 0.5 * (median + *std::max_element(ratios.begin(), mid));
  est.c_hat = std::clamp(median, est.lo, est.hi);
  est.clamped = est.c_hat != median;
  return est;
}

struct LinearizationResult {
  double error{0.0};           ///< ||(u_{c+d} - u_c)/d - v||_inf / ||v||_inf over K
  ScalarField v;
  double min_interior_v{0.0};
};

/// Compares the leaf difference quotient with the solution v of the equation
/// linearized at u_c, with v = 0 on the true boundary and v = x2 on the cut.
/// An empty K selects the truncation scaled by 0.5 about its centroid.
inline LinearizationResult linearization_check(const FoliationRun& run, double c, double delta, std::vector<Vec2> compact_set = {},
                                               const LinearSolveOptions& lin = {}) {
  const ScalarField& uc = run.leaf(c);
  const ScalarField& ud = run.leaf(c + delta);
  if (uc.mesh != ud.mesh || uc.mesh != run.mesh) throw Error("leaves do not share a mesh");
  const TriMesh& m = *run.mesh;
  if (compact_set.empty()) compact_set = scaled_about_centroid(run.polygon, 0.5);
  const auto a = linearized_coefficients(uc);
  ScalarField v = solve_linear_dirichlet(run.mesh, a, [](const Vec2& x, BoundaryTag t) {
    return t == BoundaryTag::cut_boundary ? x.y() : 0.0;
  }, lin);
  double err = 0.0, vmax = 0.0, vmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m.vertex_count(); ++i) {
    if (!m.on_boundary(i)) vmin = std::min(vmin, v[i]);
    if (!convex_contains(compact_set, m.vertex(i), 0.0)) continue;
    err = std::max(err, std::abs((ud[i] - uc[i]) / delta - v[i]));
    vmax = std::max(vmax, std::abs(v[i]));
  }
  if (!(vmax > 0.0)) throw Error("linearized solution vanishes on the compact set");
  return {err / vmax, std::move(v), vmin};
}

// ---- uniqueness -----------------------------------------------------------

struct InitSpec {
  InitialGuess kind{InitialGuess::plane};
  double random_amplitude{0.0};  ///< > 0 perturbs the plane guess with uniform noise
  std::uint64_t seed{0};
};

struct UniquenessResult {
  double max_distance{0.0};
  double tol{0.0};  ///< Newton tolerance used by every solve
  std::vector<ScalarField> fields;
  std::vector<SolveReport> reports;
};

inline UniquenessResult uniqueness_stress(const ConvexDomain& domain, const BoundaryData& data, double k, double h,
                                          const std::vector<InitSpec>& inits, const ExperimentOptions& opts = {},
                                          std::optional<double> margin = {}) {
  if (inits.size() < 2) throw Error("uniqueness_stress needs at least two initializations");
  const MeshPtr mesh = truncation_mesh(domain, {k, margin.value_or(1.0 / k), h}, opts);
  UniquenessResult out;
  out.tol = opts.newton.tol > 0.0 ? opts.newton.tol : default_tolerance(*mesh);
  for (const auto& init : inits) {
    NewtonOptions newton = opts.newton;
    if (init.random_amplitude > 0.0) {
      newton.init = InitialGuess::custom;
      newton.custom_init = random_initial_guess(*mesh, data, init.random_amplitude, init.seed);
    } else {
      newton.init = init.kind;
    }
    auto res = solve_dirichlet(mesh, data, newton);
    out.fields.push_back(std::move(res.field));
    out.reports.push_back(std::move(res.report));
  }
  for (std::size_t i = 0; i < out.fields.size(); ++i)
    for (std::size_t j = i + 1; j < out.fields.size(); ++j)
      out.max_distance = std::max(out.max_distance, (out.fields[i].values - out.fields[j].values).lpNorm<Eigen::Infinity>());
  return out;
}

} // namespace minsurf
