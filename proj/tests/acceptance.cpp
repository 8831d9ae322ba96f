// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Optional arguments restrict the run to the listed criterion numbers.

#include <minsurf/experiments.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>

using namespace minsurf;

namespace {

struct Outcome {
  bool pass{false};
  std::string detail;
};

class Clock {
public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Pinned tolerances.
constexpr double kAffineTol = 1e-9;
constexpr double kAffineSeconds = 5.0;
constexpr double kScherkOrder = 1.8;
constexpr double kScherkSeconds = 60.0;
constexpr double kScherkOracleResidual = 1e-6;
constexpr double kC0Slack = 0.02;
constexpr double kComparisonCoarse = 1e-3;
constexpr double kComparisonFine = 2.5e-4;
constexpr double kFoliationSlack = 0.02;
constexpr double kSlopeTol = 0.05;
constexpr double kRatioLo = 1.5, kRatioHi = 3.0;
constexpr double kBeta = 2.0, kBetaRel = 0.10, kDecayBeta = -0.5;
constexpr double kConeSeconds = 120.0;
constexpr double kUniqueRel = 0.05;
constexpr double kDropDelta = 0.01;
constexpr double kGradRel = 1e-6, kHessRel = 1e-5;
constexpr int kSpdFields = 100;

const ConvexDomain kWedge = ConvexDomain::wedge(2.0 * kPi / 3.0);

ExperimentOptions direct_options() {
  ExperimentOptions o;
  o.newton.linear.kind = LinearSolverKind::direct_ldlt;
  return o;
}

Outcome affine_exactness() {
  const Clock clock;
  BoundaryData data;
  data.p = {1.0, 0.0};
  ExperimentOptions opts;
  opts.newton.init = InitialGuess::zero;
  const auto mesh = truncation_mesh(kWedge, {8.0, 1.0 / 8.0, 0.1}, opts);
  const auto res = solve_dirichlet(mesh, data, opts.newton);
  double err = 0.0;
  for (std::size_t v = 0; v < mesh->vertex_count(); ++v) err = std::max(err, std::abs(res.field[v] - data.linear(mesh->vertex(v))));
  const double t = clock.seconds();
  return {err <= kAffineTol && t < kAffineSeconds,
          fmt("|u-l|_inf=%.3g (<=%.0e) newton_iters=%d time=%.2fs (<%.0fs)", err, kAffineTol, res.report.iterations, t,
              kAffineSeconds)};
}

double scherk(const Vec2& x) { return std::log(std::cos(x.y()) / std::cos(x.x())); }

Outcome scherk_oracle() {
  const Clock clock;
  // Oracle check: central-difference divergence of the analytic flux.
  double oracle_res = 0.0;
  const double e = 1e-4;
  auto flux = [](double a, double b) {
    const double ux = std::tan(a), uy = -std::tan(b);
    const double w = std::sqrt(1.0 + ux * ux + uy * uy);
    return Vec2(ux / w, uy / w);
  };
  for (double x = -0.9; x <= 0.9; x += 0.3)
    for (double y = -0.9; y <= 0.9; y += 0.3)
      oracle_res = std::max(oracle_res, std::abs((flux(x + e, y).x() - flux(x - e, y).x() + flux(x, y + e).y() -
                                                  flux(x, y - e).y()) / (2 * e)));
  if (!(oracle_res <= kScherkOracleResidual)) return {false, fmt("analytic residual %.3g too large", oracle_res)};

  std::vector<double> errors;
  for (double h : {0.1, 0.05, 0.025}) {
    const auto mesh = std::make_shared<const TriMesh>(rectangle_mesh({-1, -1}, {1, 1}, h));
    const auto res = solve_dirichlet_nodal(mesh, boundary_values(*mesh, scherk), [](const Vec2&) { return 0.0; });
    double err = 0.0;
    for (std::size_t v = 0; v < mesh->vertex_count(); ++v)
      if (!mesh->on_boundary(v)) err = std::max(err, std::abs(res.field[v] - scherk(mesh->vertex(v))));
    errors.push_back(err);
  }
  const double o1 = std::log2(errors[0] / errors[1]), o2 = std::log2(errors[1] / errors[2]);
  const double t = clock.seconds();
  const bool ok = errors[1] < errors[0] && errors[2] < errors[1] && o1 >= kScherkOrder && o2 >= kScherkOrder && t < kScherkSeconds;
  return {ok, fmt("oracle_residual=%.2g errors=%.3g,%.3g,%.3g orders=%.3f,%.3f (>=%.1f) time=%.1fs (<%.0fs)", oracle_res,
                  errors[0], errors[1], errors[2], o1, o2, kScherkOrder, t, kScherkSeconds)};
}

Outcome c0_bound() {
  BoundaryData data;
  data.p = {1.0, 0.0};
  data.phi = CompactHat{0.5, Vec2::Zero(), 2.0};
  const auto run = run_exhaustion(kWedge, data, reciprocal_schedule({6, 10, 14}, 0.05), {}, direct_options());
  const double final_dev = run.deviation_on_k.back();
  bool decreasing = true;
  for (std::size_t i = 1; i < run.deltas.size(); ++i) decreasing = decreasing && run.deltas[i] < run.deltas[i - 1];
  const double bound = data.phi_sup() + kC0Slack;
  return {final_dev <= bound && decreasing,
          fmt("|u-l|_C0(K)=%.4f (<=%.2f) deltas=%.3g,%.3g strictly_decreasing=%d", final_dev, bound, run.deltas[0],
              run.deltas[1], decreasing)};
}

Outcome comparison() {
  BoundaryData a1, a2, b1, b2;
  a1.p = a2.p = {1.0, 0.0};
  a2.phi = GaussianBump{0.3, Vec2::Zero(), 1.0};
  b1.p = {1.0, 0.0};
  b2.p = {1.0, 0.2};
  b1.phi = b2.phi = GaussianBump{0.3, Vec2::Zero(), 1.0};
  bool ok = true;
  std::string detail;
  for (auto [h, tol] : {std::pair{0.05, kComparisonCoarse}, std::pair{0.025, kComparisonFine}}) {
    const double va = comparison_test(kWedge, a1, a2, 10.0, h, direct_options()).violation;
    const double vb = comparison_test(kWedge, b1, b2, 10.0, h, direct_options()).violation;
    ok = ok && va <= tol && vb <= tol;
    detail += fmt("h=%.3g: %.3g,%.3g (<=%.1e) ", h, va, vb, tol);
  }
  return {ok, detail};
}

BoundaryData sine_data() {
  BoundaryData d;
  d.p = {0.3, 0.0};
  d.q = 0.1;
  d.phi = BoundedSine{0.4, 1.0};
  return d;
}

Outcome foliation() {
  const auto hs = ConvexDomain::half_space();
  const auto base = sine_data();
  const auto run = foliation_sweep(hs, base, {-1.0, -0.5, 0.0, 0.5, 1.0}, 12.0, 0.05, direct_options());
  const double bound = base.phi_sup() + kFoliationSlack;
  bool ok = true;
  double worst_est = 0.0, min_gap = 1e300, worst_slope = 0.0;
  for (double e : run.estimates) worst_est = std::max(worst_est, e);
  for (double g : run.min_gaps) min_gap = std::min(min_gap, g);
  std::vector<SlopeEstimate> slopes;
  for (std::size_t i = 0; i < run.c_values.size(); ++i) {
    slopes.push_back(recover_slope(run.leaves[i], hs, base, run.phi_sup));
    worst_slope = std::max(worst_slope, std::abs(slopes.back().c_hat - run.c_values[i]));
  }
  bool disjoint = true;
  for (std::size_t i = 0; i < slopes.size(); ++i)
    for (std::size_t j = i + 1; j < slopes.size(); ++j) disjoint = disjoint && !slopes[i].overlaps(slopes[j]);
  ok = worst_est <= bound && min_gap > 0.0 && worst_slope <= kSlopeTol && disjoint;
  return {ok, fmt("max_estimate=%.4f (<=%.2f) min_leaf_gap=%.3g (>0) max|c_hat-c|=%.4f (<=%.2f) certificates_disjoint=%d",
                  worst_est, bound, min_gap, worst_slope, kSlopeTol, disjoint)};
}

Outcome linearization() {
  const auto run = foliation_sweep(ConvexDomain::half_space(), sine_data(), {0.0, 0.05, 0.1}, 12.0, 0.05, direct_options());
  LinearSolveOptions lin;
  lin.kind = LinearSolverKind::direct_ldlt;
  const auto big = linearization_check(run, 0.0, 0.1, {}, lin);
  const auto small = linearization_check(run, 0.0, 0.05, {}, lin);
  const double ratio = big.error / small.error;
  const bool ok = ratio >= kRatioLo && ratio <= kRatioHi && small.min_interior_v > 0.0 && big.min_interior_v > 0.0;
  return {ok, fmt("error(0.1)=%.4g error(0.05)=%.4g ratio=%.3f (in [%.1f,%.1f]) min_interior_v=%.3g (>0)", big.error,
                  small.error, ratio, kRatioLo, kRatioHi, small.min_interior_v)};
}

struct SectorSolution {
  ConvexDomain domain = ConvexDomain::wedge(kPi / 2.0);
  MeshPtr mesh;
  ConeSolution solution;
};

// Quarter sector truncated at k = 20, graded from h = 0.02 at the apex.
const SectorSolution& sector() {
  static const SectorSolution s = [] {
    SectorSolution out;
    out.mesh = cone_mesh(out.domain, 20.0, {});
    out.solution = cone_positive_solution(out.mesh, CoefficientField::identity(), [](const Vec2&) { return 1.0; }, {0.0, 1.0});
    return out;
  }();
  return s;
}

std::vector<double> fit_radii() {
  std::vector<double> radii;
  for (double r = 1.0; r <= 8.0 + 1e-12; r += 0.25) radii.push_back(r);
  return radii;
}

Outcome cone_exponent() {
  const Clock clock;
  const auto& s = sector();
  auto grow = oscillation_profile(s.solution.field, s.domain, fit_radii());
  const double beta = fit_power_exponent(grow, radius_range(grow.radii, 1.0, 8.0)).beta;

  // Compact bump on the lateral boundary near the apex, zero far field.
  const auto decay = solve_linear_dirichlet(s.mesh, CoefficientField::identity(), [](const Vec2& x, BoundaryTag t) {
    if (t != BoundaryTag::true_boundary) return 0.0;
    return evaluate(CompactHat{1.0, Vec2::Zero(), 0.5}, Vec2(x.norm() - 0.5, 0.0));
  });
  auto fall = oscillation_profile(decay, s.domain, fit_radii());
  const double beta_decay = fit_power_exponent(fall, radius_range(fall.radii, 1.0, 8.0)).beta;
  const double t = clock.seconds();
  const bool ok = std::abs(beta - kBeta) <= kBetaRel * kBeta && beta_decay <= kDecayBeta && grow.tail == TailTrend::increasing &&
                  fall.tail == TailTrend::decreasing && t < kConeSeconds;
  return {ok, fmt("beta=%.4f (2+-10%%) tail=%s decaying_beta=%.4f (<=%.1f) tail=%s vertices=%zu time=%.1fs (<%.0fs)", beta,
                  std::string(to_string(grow.tail)).c_str(), beta_decay, kDecayBeta, std::string(to_string(fall.tail)).c_str(),
                  s.mesh->vertex_count(), t, kConeSeconds)};
}

Outcome cone_uniqueness() {
  const auto& s = sector();
  const auto other = cone_positive_solution(s.mesh, CoefficientField::identity(), [](const Vec2& x) {
    return 1.0 + 0.5 * std::cos(std::atan2(x.y(), x.x()) - kPi / 4.0);
  }, {0.0, 1.0});
  double diff = 0.0, size = 0.0;
  for (std::size_t v = 0; v < s.mesh->vertex_count(); ++v)
    if (s.mesh->vertex(v).norm() <= 20.0 / 4.0) {
      diff = std::max(diff, std::abs(s.solution.field[v] - other.field[v]));
      size = std::max(size, std::abs(s.solution.field[v]));
    }
  const double rel = diff / size;
  return {rel <= kUniqueRel, fmt("relative sup difference on B_5 = %.3g (<=%.2f), raw scales %.4g vs %.4g", rel, kUniqueRel,
                                 s.solution.scale, other.scale)};
}

Outcome oscillation_drop_check() {
  const auto& s = sector();
  const double q2 = oscillation_drop(s.solution.field, s.domain, 2.0);
  const double q4 = oscillation_drop(s.solution.field, s.domain, 4.0);
  const double d2 = 1.0 - q2, d4 = 1.0 - q4;
  return {d2 >= kDropDelta && d4 >= kDropDelta, fmt("delta(r=2)=%.4f delta(r=4)=%.4f (>=%.2f)", d2, d4, kDropDelta)};
}

Outcome kernel_checks() {
  const std::vector<Vec2> loop{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const auto mesh = std::make_shared<const TriMesh>(triangulate_loop(loop, [](const Vec2&) { return 0.2; }, 0.2));
  const P1Pattern inner = P1Pattern::interior(mesh);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto random_vec = [&](std::size_t n, double amp) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = amp * unit(rng);
    return v;
  };
  double grad_rel = 0.0, hess_rel = 0.0, min_eig = 1e300;
  for (int f = 0; f < kSpdFields; ++f) {
    Eigen::VectorXd u = random_vec(mesh->vertex_count(), 2.0);
    const SparseMatrix h = hessian(mesh, u);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig{Eigen::MatrixXd(h), Eigen::EigenvaluesOnly};
    min_eig = std::min(min_eig, eig.eigenvalues().minCoeff());
    if (f >= 5) continue;
    const Eigen::VectorXd r = residual(*mesh, u);
    Eigen::VectorXd fd(u.size());
    const double eps = 1e-5;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const double ui = u[i];
      u[i] = ui + eps;
      const double ep = energy(*mesh, u);
      u[i] = ui - eps;
      const double em = energy(*mesh, u);
      u[i] = ui;
      fd[i] = (ep - em) / (2 * eps);
    }
    grad_rel = std::max(grad_rel, (r - fd).lpNorm<Eigen::Infinity>() / r.lpNorm<Eigen::Infinity>());
    const Eigen::VectorXd dr = random_vec(inner.size(), 1.0);
    Eigen::VectorXd d = Eigen::VectorXd::Zero(u.size());
    inner.add_prolonged(dr, 1.0, d);
    const double e2 = 1e-6;
    const Eigen::VectorXd hfd = inner.restrict(residual(*mesh, u + e2 * d) - residual(*mesh, u - e2 * d)) / (2 * e2);
    const Eigen::VectorXd hv = h * dr;
    hess_rel = std::max(hess_rel, (hv - hfd).lpNorm<Eigen::Infinity>() / hv.lpNorm<Eigen::Infinity>());
  }
  const bool ok = grad_rel <= kGradRel && hess_rel <= kHessRel && min_eig > 0.0;
  return {ok, fmt("residual_vs_fd=%.2g (<=%.0e) hessian_vs_fd=%.2g (<=%.0e) min_eigenvalue_over_%d_fields=%.3g (>0)", grad_rel,
                  kGradRel, hess_rel, kHessRel, kSpdFields, min_eig)};
}

} // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria{
      {"affine exactness", affine_exactness},
      {"scherk oracle", scherk_oracle},
      {"C0 bound under exhaustion", c0_bound},
      {"comparison", comparison},
      {"foliation", foliation},
      {"linearization", linearization},
      {"cone exponent", cone_exponent},
      {"uniqueness up to scaling", cone_uniqueness},
      {"oscillation drop", oscillation_drop_check},
      {"kernel checks", kernel_checks},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    Outcome out;
    const Clock clock;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    failures += !out.pass;
    std::printf("criterion %d %s: %s  %s [%.1fs]\n", id, criteria[i].first, out.pass ? "PASS" : "FAIL", out.detail.c_str(),
                clock.seconds());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
