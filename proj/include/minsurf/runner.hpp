#pragma once

// Runs a validated scenario and writes its artifacts:
//   out_dir/<scenario>/manifest.json, assertions.csv, failures.csv, metric CSVs
//   out_dir/<scenario>/<stage>/{mesh.txt, field.txt, report.csv}

#include "config.hpp"
#include "mesh_io.hpp"

#include <filesystem>

namespace minsurf {

enum ExitCode : int { exit_ok = 0, exit_operational = 1, exit_assertion = 2 };

struct Assertion {
  std::string name;
  double value{0.0};
  std::string relation;  ///< "<=", ">=", "<", ">"
  double threshold{0.0};
  bool pass{false};
};

struct RunOutcome {
  int exit_code{exit_ok};
  std::filesystem::path dir;
  std::vector<Assertion> assertions;
  bool all_pass() const {
    return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
  }
};

namespace detail {

class Artifacts {
public:
  using ojson = nlohmann::ordered_json;

  Artifacts(const ScenarioConfig& cfg) : cfg_(cfg), dir_(std::filesystem::path(cfg.out_dir) / std::string(to_string(cfg.scenario))) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error("cannot create " + dir_.string() + ": " + ec.message());
  }

  const std::filesystem::path& dir() const { return dir_; }
  ojson& metrics() { return metrics_; }

  void stage(const std::string& name, const ScalarField& field, const std::string& field_name,
             const std::optional<SolveReport>& report) {
    const auto sd = dir_ / name;
    std::error_code ec;
    std::filesystem::create_directories(sd, ec);
    if (ec) throw Error("cannot create " + sd.string() + ": " + ec.message());
    std::ostringstream mesh, fld;
    write_mesh(mesh, *field.mesh);
    write_field(fld, field_name, field.values);
    write_text_file((sd / "mesh.txt").string(), mesh.str());
    write_text_file((sd / "field.txt").string(), fld.str());
    std::string csv = SolveReport::csv_header() + '\n';
    if (report) csv += report->csv_row(name) + '\n';
    write_text_file((sd / "report.csv").string(), csv);
    stages_.push_back(name);
  }

  void table(const std::string& file, const std::string& text) { write_text_file((dir_ / file).string(), text); }

  void check(std::string name, double value, std::string_view rel, double threshold) {
    bool pass = false;
    if (rel == "<=") pass = value <= threshold;
    else if (rel == ">=") pass = value >= threshold;
    else if (rel == "<") pass = value < threshold;
    else if (rel == ">") pass = value > threshold;
    assertions_.push_back({std::move(name), value, std::string(rel), threshold, pass});
  }

  RunOutcome finish() {
    std::string all = "assertion,value,relation,threshold,pass\n";
    std::string failed = "scenario,assertion,value,relation,threshold\n";
    for (const auto& a : assertions_) {
      all += a.name + ',' + format_double(a.value) + ',' + a.relation + ',' + format_double(a.threshold) + ',' +
             (a.pass ? "1" : "0") + '\n';
      if (!a.pass)
        failed += std::string(to_string(cfg_.scenario)) + ',' + a.name + ',' + format_double(a.value) + ',' + a.relation + ',' +
                  format_double(a.threshold) + '\n';
    }
    table("assertions.csv", all);
    table("failures.csv", failed);

    ojson m;
    m["scenario"] = to_string(cfg_.scenario);
    m["domain"] = cfg_.domain_spec;
    m["boundary"] = boundary_json(cfg_.boundary);
    if (cfg_.scenario == ScenarioKind::comparison) m["boundary2"] = boundary_json(cfg_.boundary2);
    m["k"] = cfg_.k;
    m["margin"] = cfg_.effective_margin();
    m["h"] = cfg_.h;
    m["threads"] = cfg_.threads;
    m["seed"] = cfg_.seed;
    m["stages"] = stages_;
    m["metrics"] = metrics_;
    m["assertions_passed"] = std::count_if(assertions_.begin(), assertions_.end(), [](const Assertion& a) { return a.pass; });
    m["assertions_total"] = assertions_.size();
    table("manifest.json", m.dump(2) + '\n');

    RunOutcome out;
    out.dir = dir_;
    out.assertions = assertions_;
    out.exit_code = out.all_pass() ? exit_ok : exit_assertion;
    return out;
  }

private:
  static ojson boundary_json(const BoundaryData& d) {
    ojson b;
    b["p"] = {d.p.x(), d.p.y()};
    b["q"] = d.q;
    b["c"] = d.c;
    b["phi"] = perturbation_name(d.phi);
    b["phi_sup"] = d.phi_sup();
    return b;
  }

  const ScenarioConfig& cfg_;
  std::filesystem::path dir_;
  std::vector<std::string> stages_;
  std::vector<Assertion> assertions_;
  ojson metrics_ = ojson::object();
};

inline std::string indexed(std::string_view prefix, std::size_t i) { return std::string(prefix) + '_' + std::to_string(i); }

inline double boundary_spread(const ScalarField& u, double& lo, double& hi) {
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  for (std::size_t v = 0; v < u.mesh->vertex_count(); ++v)
    if (u.mesh->on_boundary(v)) {
      lo = std::min(lo, u[v]);
      hi = std::max(hi, u[v]);
    }
  return hi - lo;
}

inline void run_solve(const ScenarioConfig& cfg, Artifacts& art) {
  const auto mesh = truncation_mesh(cfg.domain, {cfg.k, cfg.effective_margin(), cfg.h}, cfg.experiment_options());
  const auto res = solve_dirichlet(mesh, cfg.boundary, cfg.newton);
  art.stage("solve", res.field, "u", res.report);
  double lo = 0, hi = 0, dev = 0, umin = res.field.values.minCoeff(), umax = res.field.values.maxCoeff();
  boundary_spread(res.field, lo, hi);
  for (std::size_t v = 0; v < mesh->vertex_count(); ++v) dev = std::max(dev, std::abs(res.field[v] - cfg.boundary.plane(mesh->vertex(v))));
  art.metrics()["vertices"] = mesh->vertex_count();
  art.metrics()["deviation_from_plane"] = dev;
  art.check("converged", res.report.converged ? 1.0 : 0.0, ">=", 1.0);
  art.check("max_below_boundary_max", umax - hi, "<=", 1e-9);
  art.check("min_above_boundary_min", umin - lo, ">=", -1e-9);
  art.check("deviation_from_plane", dev, "<=", cfg.boundary.phi_sup() + cfg.expect.estimate_slack);
}

inline void run_exhaustion_scenario(const ScenarioConfig& cfg, Artifacts& art) {
  std::vector<Stage> schedule;
  for (double k : cfg.schedule) schedule.push_back({k, cfg.margin.value_or(1.0 / k), cfg.h});
  const auto run = run_exhaustion(cfg.domain, cfg.boundary, schedule, {}, cfg.experiment_options());
  std::string csv = "stage,k,margin,h,vertices,iterations,final_residual,delta,deviation_on_k\n";
  for (std::size_t i = 0; i < run.fields.size(); ++i) {
    const auto name = indexed("stage", i);
    art.stage(name, run.fields[i], "u", run.reports[i]);
    csv += name + ',' + format_double(schedule[i].k) + ',' + format_double(schedule[i].margin) + ',' + format_double(cfg.h) + ',' +
           std::to_string(run.fields[i].mesh->vertex_count()) + ',' + std::to_string(run.reports[i].iterations) + ',' +
           format_double(run.reports[i].final_residual) + ',' + (i > 0 ? format_double(run.deltas[i - 1]) : "") + ',' +
           format_double(run.deviation_on_k[i]) + '\n';
  }
  art.table("stages.csv", csv);
  art.metrics()["deltas"] = run.deltas;
  art.metrics()["final_deviation_on_k"] = run.deviation_on_k.back();
  for (std::size_t i = 1; i < run.deltas.size(); ++i)
    art.check("delta_decrease_" + std::to_string(i), run.deltas[i] - run.deltas[i - 1], "<", 0.0);
  art.check("final_deviation_on_k", run.deviation_on_k.back(), "<=", cfg.boundary.phi_sup() + cfg.expect.c0_slack);
}

inline void run_comparison(const ScenarioConfig& cfg, Artifacts& art) {
  const auto res = comparison_test(cfg.domain, cfg.boundary, cfg.boundary2, cfg.k, cfg.h, cfg.experiment_options(), cfg.margin);
  art.stage("u1", res.u1, "u1", res.report1);
  art.stage("u2", res.u2, "u2", res.report2);
  art.metrics()["violation"] = res.violation;
  art.check("violation", res.violation, "<=", cfg.expect.max_violation);
}

inline void run_foliation(const ScenarioConfig& cfg, Artifacts& art) {
  const auto run = foliation_sweep(cfg.domain, cfg.boundary, cfg.c_values, cfg.k, cfg.h, cfg.experiment_options());
  std::vector<SlopeEstimate> slopes;
  std::string csv = "leaf,c,estimate,c_hat,cert_lo,cert_hi,min_gap_to_next,iterations,final_residual\n";
  for (std::size_t i = 0; i < run.leaves.size(); ++i) {
    const auto name = indexed("leaf", i);
    art.stage(name, run.leaves[i], "u", run.reports[i]);
    slopes.push_back(recover_slope(run.leaves[i], cfg.domain, cfg.boundary, run.phi_sup));
    const auto& s = slopes.back();
    csv += name + ',' + format_double(run.c_values[i]) + ',' + format_double(run.estimates[i]) + ',' + format_double(s.c_hat) +
           ',' + format_double(s.lo) + ',' + format_double(s.hi) + ',' +
           (i + 1 < run.leaves.size() ? format_double(run.min_gaps[i]) : "") + ',' + std::to_string(run.reports[i].iterations) +
           ',' + format_double(run.reports[i].final_residual) + '\n';
    art.check(name + "_estimate", run.estimates[i], "<=", run.phi_sup + cfg.expect.estimate_slack);
    art.check(name + "_slope_error", std::abs(s.c_hat - run.c_values[i]), "<=", cfg.expect.slope_tol);
  }
  art.table("leaves.csv", csv);
  for (std::size_t i = 0; i < run.min_gaps.size(); ++i) art.check(indexed("gap", i), run.min_gaps[i], ">", 0.0);
  for (std::size_t i = 0; i < slopes.size(); ++i)
    for (std::size_t j = i + 1; j < slopes.size(); ++j)
      if (std::abs(run.c_values[j] - run.c_values[i]) >= 0.2)
        art.check("certificates_disjoint_" + std::to_string(i) + '_' + std::to_string(j), slopes[i].overlaps(slopes[j]) ? 1.0 : 0.0,
                  "<=", 0.0);
  art.metrics()["estimates"] = run.estimates;
  art.metrics()["min_gaps"] = run.min_gaps;
}

inline void run_linearization(const ScenarioConfig& cfg, Artifacts& art) {
  std::vector<double> cs{cfg.c};
  for (double d : cfg.deltas) cs.push_back(cfg.c + d);
  std::sort(cs.begin(), cs.end());
  cs.erase(std::unique(cs.begin(), cs.end()), cs.end());
  const auto run = foliation_sweep(cfg.domain, cfg.boundary, cs, cfg.k, cfg.h, cfg.experiment_options());
  for (std::size_t i = 0; i < run.leaves.size(); ++i) art.stage(indexed("leaf", i), run.leaves[i], "u", run.reports[i]);
  std::string csv = "delta,error,min_interior_v\n";
  std::vector<double> errors;
  for (std::size_t i = 0; i < cfg.deltas.size(); ++i) {
    const auto res = linearization_check(run, cfg.c, cfg.deltas[i], {}, cfg.newton.linear);
    art.stage(indexed("linearized", i), res.v, "v", std::nullopt);
    csv += format_double(cfg.deltas[i]) + ',' + format_double(res.error) + ',' + format_double(res.min_interior_v) + '\n';
    errors.push_back(res.error);
    art.check(indexed("v_positive", i), res.min_interior_v, ">", 0.0);
  }
  art.table("linearization.csv", csv);
  art.metrics()["errors"] = errors;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    const double ratio = errors[i - 1] / errors[i];
    art.check(indexed("error_ratio_min", i), ratio, ">=", cfg.expect.ratio_lo);
    art.check(indexed("error_ratio_max", i), ratio, "<=", cfg.expect.ratio_hi);
  }
}

inline void run_cone(const ScenarioConfig& cfg, Artifacts& art) {
  const auto mesh = cone_mesh(cfg.domain, cfg.k, cfg.cone.mesh);
  const auto& phi = cfg.boundary.phi;
  ScalarField u;
  if (cfg.cone.branch == ConeBranch::growing) {
    const auto sol = cone_positive_solution(mesh, CoefficientField::identity(), [&](const Vec2& x) { return 1.0 + evaluate(phi, x); },
                                            cfg.cone.point, cfg.newton.linear);
    u = sol.field;
    art.metrics()["scale"] = sol.scale;
  } else {
    u = solve_linear_dirichlet(mesh, CoefficientField::identity(), [&](const Vec2& x, BoundaryTag t) {
      return t == BoundaryTag::true_boundary ? evaluate(phi, x) : 0.0;
    }, cfg.newton.linear);
  }
  art.stage("cone", u, "u", std::nullopt);
  std::vector<double> radii;
  for (std::size_t i = 1;; ++i) {
    const double r = cfg.cone.radii_step * static_cast<double>(i);
    if (r > cfg.cone.fit_hi + 1e-12) break;
    radii.push_back(r);
  }
  auto prof = oscillation_profile(u, cfg.domain, radii);
  const auto fit = fit_power_exponent(prof, radius_range(prof.radii, cfg.cone.fit_lo, cfg.cone.fit_hi));
  art.table("profile.csv", prof.to_csv());
  art.metrics()["beta"] = fit.beta;
  art.metrics()["fit_residual"] = fit.residual;
  art.metrics()["tail"] = to_string(prof.tail);
  art.metrics()["vertices"] = mesh->vertex_count();
  const bool growing = cfg.cone.branch == ConeBranch::growing;
  art.check(growing ? "tail_increasing" : "tail_decreasing",
            prof.tail == (growing ? TailTrend::increasing : TailTrend::decreasing) ? 1.0 : 0.0, ">=", 1.0);
  art.check("abs_beta", std::abs(fit.beta), ">=", cfg.expect.min_abs_beta);
  if (cfg.expect.beta) art.check("beta_relative_error", std::abs(fit.beta - *cfg.expect.beta) / std::abs(*cfg.expect.beta), "<=",
                                 cfg.expect.beta_rel_tol);
  if (cfg.expect.beta_max) art.check("beta", fit.beta, "<=", *cfg.expect.beta_max);
  if (growing) {
    std::string csv = "r,drop_factor,delta\n";
    for (double r : cfg.cone.drop_radii) {
      const double q = oscillation_drop(u, cfg.domain, r);
      csv += format_double(r) + ',' + format_double(q) + ',' + format_double(1.0 - q) + '\n';
      art.check("drop_delta_r" + format_double(r), 1.0 - q, ">=", cfg.expect.min_drop);
    }
    art.table("drop.csv", csv);
  }
}

inline void run_uniqueness(const ScenarioConfig& cfg, Artifacts& art) {
  std::vector<InitSpec> inits;
  for (std::size_t i = 0; i < cfg.inits.size(); ++i) {
    const auto& s = cfg.inits[i];
    if (s == "zero") inits.push_back({InitialGuess::zero});
    else if (s == "plane") inits.push_back({InitialGuess::plane});
    else if (s == "harmonic") inits.push_back({InitialGuess::harmonic});
    else inits.push_back({InitialGuess::plane, cfg.random_amplitude, cfg.seed + i});
  }
  const auto res = uniqueness_stress(cfg.domain, cfg.boundary, cfg.k, cfg.h, inits, cfg.experiment_options(), cfg.margin);
  for (std::size_t i = 0; i < res.fields.size(); ++i) art.stage(indexed("init", i), res.fields[i], "u", res.reports[i]);
  art.metrics()["max_distance"] = res.max_distance;
  art.metrics()["tol"] = res.tol;
  art.check("max_pairwise_distance", res.max_distance, "<=", cfg.expect.distance_factor * res.tol);
}

} // namespace detail

/// Runs the scenario. Operational problems (I/O, solver failures, violated
/// preconditions) propagate as exceptions; assertion results set the exit code.
inline RunOutcome run(const ScenarioConfig& cfg) {
  set_thread_count(cfg.threads);
  detail::Artifacts art(cfg);
  switch (cfg.scenario) {
  case ScenarioKind::solve: detail::run_solve(cfg, art); break;
  case ScenarioKind::exhaustion: detail::run_exhaustion_scenario(cfg, art); break;
  case ScenarioKind::comparison: detail::run_comparison(cfg, art); break;
  case ScenarioKind::foliation: detail::run_foliation(cfg, art); break;
  case ScenarioKind::cone_linear: detail::run_cone(cfg, art); break;
  case ScenarioKind::linearization: detail::run_linearization(cfg, art); break;
  case ScenarioKind::uniqueness: detail::run_uniqueness(cfg, art); break;
  }
  return art.finish();
}

} // namespace minsurf
