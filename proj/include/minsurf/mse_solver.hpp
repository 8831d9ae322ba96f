#pragma once

// Dirichlet problem for the minimal surface equation on a P1 mesh, solved by
// minimizing the discrete graph area E(u) = sum_T |T| sqrt(1 + |grad u|_T|^2)
// with a line-searched Newton method.

#include "boundary_data.hpp"
#include "sparse.hpp"

#include <optional>
#include <random>
#include <sstream>

namespace minsurf {

/// F(p) = sqrt(1 + |p|^2) and its derivatives.
struct AreaIntegrand {
  static double value(const Vec2& g) { return std::sqrt(1.0 + g.squaredNorm()); }
  static Vec2 gradient(const Vec2& g) { return g / value(g); }
  /// D^2F(g) = (I - g g^T / (1 + |g|^2)) / sqrt(1 + |g|^2)
  static Mat2 hessian(const Vec2& g) {
    const double w2 = 1.0 + g.squaredNorm();
    const double w = std::sqrt(w2);
    return (Mat2::Identity() - g * g.transpose() / w2) / w;
  }
};

inline double energy(const TriMesh& mesh, const Eigen::VectorXd& u) {
  double e = 0.0;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t)
    e += mesh.area(t) * AreaIntegrand::value(triangle_gradient(mesh, u, t));
  return e;
}
inline double energy(const ScalarField& f) { return energy(*f.mesh, f.values); }

/// E(u + alpha d) - E(u) summed per triangle in cancellation-free form.
inline double energy_change(const TriMesh& mesh, const Eigen::VectorXd& u, const Eigen::VectorXd& d, double alpha) {
  double de = 0.0;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const Vec2 g = triangle_gradient(mesh, u, t);
    const Vec2 dg = alpha * triangle_gradient(mesh, d, t);
    const double num = 2.0 * g.dot(dg) + dg.squaredNorm();
    de += mesh.area(t) * num / (AreaIntegrand::value(g + dg) + AreaIntegrand::value(g));
  }
  return de;
}

/// dE/du_i for every vertex (boundary entries included).
inline Eigen::VectorXd residual(const TriMesh& mesh, const Eigen::VectorXd& u) {
  std::vector<Eigen::Vector3d> local(mesh.triangle_count());
  parallel_for(mesh.triangle_count(), [&](std::size_t t) {
    const Vec2 flux = AreaIntegrand::gradient(triangle_gradient(mesh, u, t));
    const auto& g = mesh.basis_gradients(t);
    local[t] = mesh.area(t) * Eigen::Vector3d(flux.dot(g[0]), flux.dot(g[1]), flux.dot(g[2]));
  });
  Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.vertex_count()));
  for (std::size_t t = 0; t < local.size(); ++t)
    for (int k = 0; k < 3; ++k) r[mesh.triangle(t)[k]] += local[t][k];
  return r;
}
inline Eigen::VectorXd residual(const ScalarField& f) { return residual(*f.mesh, f.values); }

/// Max |r_i| over vertices not on the mesh boundary.
inline double interior_max_abs(const TriMesh& mesh, const Eigen::VectorXd& r) {
  double m = 0.0;
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v)
    if (!mesh.on_boundary(v)) m = std::max(m, std::abs(r[static_cast<Eigen::Index>(v)]));
  return m;
}

/// Per-triangle blocks |T| grad(phi_a)^T D^2F(grad u) grad(phi_b).
inline std::vector<Local3> hessian_blocks(const TriMesh& mesh, const Eigen::VectorXd& u) {
  std::vector<Local3> blocks(mesh.triangle_count());
  parallel_for(mesh.triangle_count(), [&](std::size_t t) {
    const Mat2 k = AreaIntegrand::hessian(triangle_gradient(mesh, u, t));
    const auto& g = mesh.basis_gradients(t);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) blocks[t](a, b) = mesh.area(t) * g[a].dot(k * g[b]);
  });
  return blocks;
}

/// Hessian of the area restricted to interior vertices (rows follow P1Pattern::interior).
inline SparseMatrix hessian(const MeshPtr& mesh, const Eigen::VectorXd& u) {
  return P1Pattern::interior(mesh).assemble(hessian_blocks(*mesh, u));
}

struct SolveReport {
  int iterations{0};
  double final_residual{0.0};
  std::vector<double> energy_trace;     ///< E(u_k), starting with the initial guess
  std::vector<double> energy_decrease;  ///< E(u_{k+1}) - E(u_k), computed stably
  std::vector<int> line_search_steps;   ///< step halvings per Newton iteration
  std::vector<int> cg_iterations;
  bool converged{false};

  static std::string csv_header() { return "scenario,iterations,final_residual,energy"; }
  std::string csv_row(std::string_view scenario) const;
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string SolveReport::csv_row(std::string_view scenario) const {
  std::ostringstream os;
  os << scenario << ',' << iterations << ',' << format_double(final_residual) << ','
     << format_double(energy_trace.empty() ? 0.0 : energy_trace.back());
  return os.str();
}

class NonConvergence : public Error {
public:
  NonConvergence(const std::string& what, SolveReport report) : Error(what), report_(std::move(report)) {}
  const SolveReport& report() const { return report_; }

private:
  SolveReport report_;
};

enum class InitialGuess { plane, zero, harmonic, custom };

struct NewtonOptions {
  double tol{0.0};  ///< interior residual inf-norm; <= 0 means 1e-9 * mean triangle area
  int max_iters{60};
  double armijo_c1{1e-4};
  int max_halvings{60};
  InitialGuess init{InitialGuess::plane};
  Eigen::VectorXd custom_init;  ///< used when init == custom (boundary entries ignored)
  LinearSolveOptions linear{};
};

struct SolveResult {
  ScalarField field;
  SolveReport report;
};

inline double default_tolerance(const TriMesh& mesh) { return 1e-9 * mesh.mean_triangle_area(); }

inline Eigen::VectorXd boundary_values(const TriMesh& mesh, const std::function<double(const Vec2&)>& g) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.vertex_count()));
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v)
    if (mesh.on_boundary(v)) out[static_cast<Eigen::Index>(v)] = g(mesh.vertex(v));
  return out;
}

/// Solves M u = 0 with u = g on every boundary vertex, where g is given nodally
/// (only boundary entries of `g_nodal` are read) and `plane` seeds the interior.
inline SolveResult solve_dirichlet_nodal(const MeshPtr& mesh, const Eigen::VectorXd& g_nodal,
                                         const std::function<double(const Vec2&)>& plane,
                                         const NewtonOptions& opts = {}) {
  const TriMesh& m = *mesh;
  const auto n = static_cast<Eigen::Index>(m.vertex_count());
  if (g_nodal.size() != n) throw Error("boundary vector length mismatch");
  const P1Pattern pattern = P1Pattern::interior(mesh);
  const double tol = opts.tol > 0.0 ? opts.tol : default_tolerance(m);

  double gmin = std::numeric_limits<double>::infinity(), gmax = -gmin;
  for (Eigen::Index v = 0; v < n; ++v)
    if (m.on_boundary(static_cast<std::size_t>(v))) {
      if (!std::isfinite(g_nodal[v])) throw Error("non-finite boundary value");
      gmin = std::min(gmin, g_nodal[v]);
      gmax = std::max(gmax, g_nodal[v]);
    }

  SolveReport report;
  Eigen::VectorXd u(n);
  if (gmin == gmax) {
    u.setConstant(gmin);
    report.converged = true;
    report.energy_trace.push_back(energy(m, u));
    return {ScalarField(mesh, std::move(u)), std::move(report)};
  }

  switch (opts.init) {
  case InitialGuess::plane:
    for (Eigen::Index v = 0; v < n; ++v) u[v] = plane(m.vertex(static_cast<std::size_t>(v)));
    break;
  case InitialGuess::zero: u.setZero(); break;
  case InitialGuess::custom:
    if (opts.custom_init.size() != n) throw Error("custom initial guess length mismatch");
    u = opts.custom_init;
    break;
  case InitialGuess::harmonic: {
    // Laplace extension: the area Hessian at u = 0 is the P1 Laplacian
    Eigen::VectorXd ub = Eigen::VectorXd::Zero(n);
    for (Eigen::Index v = 0; v < n; ++v)
      if (m.on_boundary(static_cast<std::size_t>(v))) ub[v] = g_nodal[v];
    const auto blocks = hessian_blocks(m, Eigen::VectorXd::Zero(n));
    const SparseMatrix k = P1Pattern::all(mesh).assemble(blocks);
    const Eigen::VectorXd rhs = -pattern.restrict(k * ub);
    Eigen::VectorXd x;
    solve_spd(pattern.assemble(blocks), rhs, x, opts.linear);
    u = ub;
    pattern.add_prolonged(x, 1.0, u);
    break;
  }
  }
  for (Eigen::Index v = 0; v < n; ++v)
    if (m.on_boundary(static_cast<std::size_t>(v))) u[v] = g_nodal[v];

  report.energy_trace.push_back(energy(m, u));
  for (;;) {
    const Eigen::VectorXd r = pattern.restrict(residual(m, u));
    report.final_residual = r.size() ? r.lpNorm<Eigen::Infinity>() : 0.0;
    if (report.final_residual <= tol) {
      report.converged = true;
      break;
    }
    if (report.iterations >= opts.max_iters)
      throw NonConvergence("Newton reached max_iters without meeting the residual tolerance", report);

    const SparseMatrix h = pattern.assemble(hessian_blocks(m, u));
    Eigen::VectorXd dx;
    const auto stats = solve_spd(h, -r, dx, opts.linear);
    report.cg_iterations.push_back(stats.iterations);
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    pattern.add_prolonged(dx, 1.0, d);
    const double slope = r.dot(dx);
    if (!(slope < 0.0)) throw NonConvergence("Newton direction is not a descent direction", report);

    double alpha = 1.0;
    int halvings = 0;
    double de = energy_change(m, u, d, alpha);
    while (!(de <= opts.armijo_c1 * alpha * slope && de < 0.0)) {
      if (++halvings > opts.max_halvings) throw NonConvergence("line search failed", report);
      alpha *= 0.5;
      de = energy_change(m, u, d, alpha);
    }
    u.noalias() += alpha * d;
    ++report.iterations;
    report.line_search_steps.push_back(halvings);
    report.energy_decrease.push_back(de);
    report.energy_trace.push_back(energy(m, u));
  }
  return {ScalarField(mesh, std::move(u)), std::move(report)};
}

/// Solves the Dirichlet problem with u = data on every boundary vertex.
inline SolveResult solve_dirichlet(const MeshPtr& mesh, const BoundaryData& data, const NewtonOptions& opts = {}) {
  return solve_dirichlet_nodal(mesh, boundary_values(*mesh, data), [&](const Vec2& x) { return data.plane(x); }, opts);
}

/// Random +-amplitude perturbation of the plane interpolant, for uniqueness tests.
inline Eigen::VectorXd random_initial_guess(const TriMesh& mesh, const BoundaryData& data, double amplitude,
                                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::VectorXd u(static_cast<Eigen::Index>(mesh.vertex_count()));
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v)
    u[static_cast<Eigen::Index>(v)] = data.plane(mesh.vertex(v)) + amplitude * unit(rng);
  return u;
}

} // namespace minsurf
