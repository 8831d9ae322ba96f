#pragma once

// JSON scenario configuration with exhaustive validation: every problem is
// reported with its path, not just the first one.

#include "experiments.hpp"

#include <json.hpp>

#include <optional>
#include <set>

namespace minsurf {

enum class ScenarioKind { solve, exhaustion, comparison, foliation, cone_linear, linearization, uniqueness };

inline constexpr std::array<std::pair<ScenarioKind, std::string_view>, 7> kScenarioNames{{
    {ScenarioKind::solve, "solve"},
    {ScenarioKind::exhaustion, "exhaustion"},
    {ScenarioKind::comparison, "comparison"},
    {ScenarioKind::foliation, "foliation"},
    {ScenarioKind::cone_linear, "cone_linear"},
    {ScenarioKind::linearization, "linearization"},
    {ScenarioKind::uniqueness, "uniqueness"},
}};

inline std::string_view to_string(ScenarioKind k) {
  for (const auto& [kind, name] : kScenarioNames)
    if (kind == k) return name;
  return "solve";
}

inline std::optional<ScenarioKind> scenario_from_string(std::string_view s) {
  for (const auto& [kind, name] : kScenarioNames)
    if (name == s) return kind;
  return std::nullopt;
}

inline std::string scenario_options() {
  std::string out;
  for (const auto& [kind, name] : kScenarioNames) out += (out.empty() ? "" : ", ") + std::string(name);
  return out;
}

class ConfigError : public Error {
public:
  explicit ConfigError(std::vector<std::string> errors) : Error(join(errors)), errors_(std::move(errors)) {}
  const std::vector<std::string>& errors() const { return errors_; }

private:
  static std::string join(const std::vector<std::string>& e) {
    std::string s;
    for (const auto& line : e) s += (s.empty() ? "" : "\n") + line;
    return s;
  }
  std::vector<std::string> errors_;
};

enum class ConeBranch { growing, decaying };

struct ConeSettings {
  ConeBranch branch{ConeBranch::growing};
  ConeMeshSpec mesh{};
  Vec2 point{0.0, 1.0};
  double fit_lo{1.0}, fit_hi{8.0};
  double radii_step{0.25};
  std::vector<double> drop_radii{2.0, 4.0};
};

/// Optional thresholds; unset entries fall back to the scenario defaults.
struct Expectations {
  double c0_slack{0.02};
  double max_violation{1e-3};
  double estimate_slack{0.02};
  double slope_tol{0.05};
  std::optional<double> beta;
  double beta_rel_tol{0.1};
  std::optional<double> beta_max;
  double min_abs_beta{0.2};
  double min_drop{0.01};
  double ratio_lo{1.5}, ratio_hi{3.0};
  double distance_factor{10.0};
};

struct ScenarioConfig {
  ScenarioKind scenario{ScenarioKind::solve};
  ConvexDomain domain = ConvexDomain::half_space();
  nlohmann::json domain_spec = "half_space";
  BoundaryData boundary{};
  BoundaryData boundary2{};
  double k{8.0};
  std::optional<double> margin;        ///< default 1/k (0 for foliation and cones)
  std::vector<double> schedule;        ///< exhaustion radii
  double h{0.1};
  int arc_resolution{512};
  MeshOptions mesh{};
  NewtonOptions newton = ExperimentOptions::harmonic_start();
  std::vector<double> c_values{-1.0, -0.5, 0.0, 0.5, 1.0};
  double c{0.0};
  std::vector<double> deltas{0.1, 0.05};
  std::vector<std::string> inits{"zero", "plane", "harmonic", "random"};
  double random_amplitude{1.0};
  ConeSettings cone{};
  Expectations expect{};
  std::string out_dir{"out"};
  int threads{1};
  std::uint64_t seed{0};

  double effective_margin() const {
    if (margin) return *margin;
    if (scenario == ScenarioKind::foliation || scenario == ScenarioKind::linearization || scenario == ScenarioKind::cone_linear)
      return 0.0;
    return 1.0 / k;
  }
  ExperimentOptions experiment_options() const {
    ExperimentOptions o;
    o.arc_resolution = arc_resolution;
    o.mesh = mesh;
    o.newton = newton;
    return o;
  }
};

namespace detail {

using nlohmann::json;

class Reader {
public:
  Reader(const json& j, std::string path, std::vector<std::string>& errors) : j_(j), path_(std::move(path)), errors_(errors) {
    if (!j_.is_object()) error("", "must be an object");
  }
  ~Reader() {
    if (!j_.is_object()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) errors_.push_back(path_ + "." + it.key() + ": unknown key");
  }
  Reader(const Reader&) = delete;
  Reader& operator=(const Reader&) = delete;

  std::string at(std::string_view key) const { return path_ + "." + std::string(key); }
  void error(std::string_view key, std::string_view msg) {
    errors_.push_back((key.empty() ? path_ : at(key)) + ": " + std::string(msg));
  }
  const json* find(std::string_view key) {
    seen_.insert(std::string(key));
    if (!j_.is_object()) return nullptr;
    const auto it = j_.find(std::string(key));
    return it == j_.end() ? nullptr : &*it;
  }
  bool has(std::string_view key) const { return j_.is_object() && j_.contains(std::string(key)); }

  void number(std::string_view key, double& out, bool positive = false) {
    if (const json* v = find(key)) {
      if (!v->is_number()) return error(key, "must be a number");
      const double x = v->get<double>();
      if (positive && !(x > 0.0)) return error(key, std::string(key) + " must be positive");
      out = x;
    }
  }
  void optional_number(std::string_view key, std::optional<double>& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) return error(key, "must be a number");
      out = v->get<double>();
    }
  }
  void integer(std::string_view key, int& out, int min_value) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) return error(key, "must be an integer");
      const auto x = v->get<long long>();
      if (x < min_value) return error(key, std::string(key) + " must be at least " + std::to_string(min_value));
      out = static_cast<int>(x);
    }
  }
  void unsigned_integer(std::string_view key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) return error(key, "must be a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void string(std::string_view key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) return error(key, "must be a string");
      out = v->get<std::string>();
    }
  }
  void vec2(std::string_view key, Vec2& out) {
    if (const json* v = find(key)) {
      if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number())
        return error(key, "must be an array of two numbers");
      out = {(*v)[0].get<double>(), (*v)[1].get<double>()};
    }
  }
  /// Non-empty list of numbers; with `increasing`, strictly increasing.
  void numbers(std::string_view key, std::vector<double>& out, bool increasing, bool positive) {
    if (const json* v = find(key)) {
      if (!v->is_array() || v->empty()) return error(key, "must be a non-empty array of numbers");
      std::vector<double> xs;
      for (const auto& e : *v) {
        if (!e.is_number()) return error(key, "must be a non-empty array of numbers");
        xs.push_back(e.get<double>());
      }
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (positive && !(xs[i] > 0.0)) return error(key, "entries must be positive");
        if (increasing && i > 0 && !(xs[i] > xs[i - 1])) return error(key, "must be sorted strictly increasing");
      }
      out = std::move(xs);
    }
  }

private:
  const json& j_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

inline constexpr std::string_view kPhiNames = "zero, gaussian_bump, bounded_sine, compact_hat";

inline Perturbation parse_phi(const json& j, const std::string& path, std::vector<std::string>& errors) {
  Reader r(j, path, errors);
  std::string name = "zero";
  r.string("name", name);
  if (name == "zero") return ZeroPerturbation{};
  if (name == "gaussian_bump") {
    GaussianBump g;
    r.number("amp", g.amp);
    r.vec2("center", g.center);
    r.number("width", g.width, true);
    return g;
  }
  if (name == "bounded_sine") {
    BoundedSine s;
    r.number("amp", s.amp);
    r.number("freq", s.freq);
    return s;
  }
  if (name == "compact_hat") {
    CompactHat c;
    r.number("amp", c.amp);
    r.vec2("center", c.center);
    r.number("radius", c.radius, true);
    return c;
  }
  r.error("name", "unknown perturbation '" + name + "' (valid: " + std::string(kPhiNames) + ")");
  return ZeroPerturbation{};
}

inline BoundaryData parse_boundary(const json& j, const std::string& path, std::vector<std::string>& errors) {
  Reader r(j, path, errors);
  BoundaryData d;
  r.vec2("p", d.p);
  r.number("q", d.q);
  r.number("c", d.c);
  if (const json* phi = r.find("phi")) d.phi = parse_phi(*phi, r.at("phi"), errors);
  return d;
}

inline ConvexDomain parse_domain(const json& j, const std::string& path, std::vector<std::string>& errors) {
  auto fail = [&](const std::string& msg) {
    errors.push_back(path + ": " + msg);
    return ConvexDomain::half_space();
  };
  auto from_list = [&](const json& list, const std::string& at) {
    if (!list.is_array() || list.empty()) return fail("halfplanes must be a non-empty array");
    std::vector<HalfPlane> hps;
    for (std::size_t i = 0; i < list.size(); ++i) {
      Reader e(list[i], at + "[" + std::to_string(i) + "]", errors);
      Vec2 n = Vec2::Zero();
      double off = 0.0;
      e.vec2("normal", n);
      e.number("offset", off);
      if (n.norm() == 0.0) return fail("halfplane normal must be non-zero");
      hps.emplace_back(n, off);
    }
    return ConvexDomain(std::move(hps));
  };
  // "name(value)" shortcut
  auto shortcut_arg = [](const std::string& s, std::string_view name) -> std::optional<double> {
    if (s.size() <= name.size() + 2 || s.compare(0, name.size(), name) != 0 || s[name.size()] != '(' || s.back() != ')')
      return std::nullopt;
    const std::string inner = s.substr(name.size() + 1, s.size() - name.size() - 2);
    char* end = nullptr;
    const double v = std::strtod(inner.c_str(), &end);
    if (end == inner.c_str() || *end != '\0') return std::nullopt;
    return v;
  };
  try {
    if (j.is_string()) {
      const auto s = j.get<std::string>();
      if (s == "half_space") return ConvexDomain::half_space();
      if (const auto a = shortcut_arg(s, "wedge")) {
        if (!(*a > 0.0 && *a <= kPi)) return fail("wedge angle must lie in (0, pi]");
        return ConvexDomain::wedge(*a);
      }
      if (const auto w = shortcut_arg(s, "slab")) {
        if (!(*w > 0.0)) return fail("slab needs a positive width");
        return ConvexDomain::slab(*w);
      }
      return fail("unknown domain '" + s + "' (valid: half_space, wedge(<radians>), slab(<width>), an object or a halfplane list)");
    }
    if (j.is_array()) return from_list(j, path);
    Reader r(j, path, errors);
    std::string type;
    r.string("type", type);
    if (type == "half_space") return ConvexDomain::half_space();
    if (type == "wedge") {
      double angle = 0.0, deg = 0.0;
      r.number("angle", angle);
      r.number("angle_deg", deg);
      if (deg != 0.0) angle = deg * kPi / 180.0;
      if (!(angle > 0.0 && angle <= kPi)) return fail("wedge angle must lie in (0, pi]");
      return ConvexDomain::wedge(angle);
    }
    if (type == "slab") {
      double width = 0.0;
      r.number("width", width, true);
      if (!(width > 0.0)) return fail("slab needs a positive width");
      return ConvexDomain::slab(width);
    }
    if (type == "halfplanes") {
      const json* list = r.find("halfplanes");
      if (!list) return fail("halfplanes must be a non-empty array");
      return from_list(*list, r.at("halfplanes"));
    }
    r.error("type", "unknown domain type '" + type + "' (valid: half_space, wedge, slab, halfplanes)");
  } catch (const GeometryError& e) {
    return fail(e.what());
  }
  return ConvexDomain::half_space();
}

inline void parse_solver(const json& j, const std::string& path, NewtonOptions& n, std::vector<std::string>& errors) {
  Reader r(j, path, errors);
  r.number("tol", n.tol);
  if (n.tol < 0.0) r.error("tol", "tol must be non-negative (0 selects the mesh-scaled default)");
  r.integer("max_iters", n.max_iters, 1);
  std::string linear = n.linear.kind == LinearSolverKind::direct_ldlt ? "direct" : "cg";
  r.string("linear", linear);
  if (linear == "cg") n.linear.kind = LinearSolverKind::conjugate_gradient;
  else if (linear == "direct") n.linear.kind = LinearSolverKind::direct_ldlt;
  else r.error("linear", "unknown linear solver '" + linear + "' (valid: cg, direct)");
  r.number("linear_tol", n.linear.relative_tol, true);
  std::string init = "harmonic";
  r.string("init", init);
  if (init == "plane") n.init = InitialGuess::plane;
  else if (init == "zero") n.init = InitialGuess::zero;
  else if (init == "harmonic") n.init = InitialGuess::harmonic;
  else r.error("init", "unknown init '" + init + "' (valid: plane, zero, harmonic)");
}

inline void parse_cone(const json& j, const std::string& path, ConeSettings& c, std::vector<std::string>& errors) {
  Reader r(j, path, errors);
  std::string branch = "growing";
  r.string("branch", branch);
  if (branch == "growing") c.branch = ConeBranch::growing;
  else if (branch == "decaying") c.branch = ConeBranch::decaying;
  else r.error("branch", "unknown branch '" + branch + "' (valid: growing, decaying)");
  r.number("h_min", c.mesh.h_min, true);
  r.number("grade", c.mesh.grade);
  r.number("h_max", c.mesh.h_max, true);
  if (c.mesh.grade < 0.0) r.error("grade", "grade must be non-negative");
  r.integer("arc_resolution", c.mesh.arc_resolution, 8);
  r.vec2("point", c.point);
  std::vector<double> fit{c.fit_lo, c.fit_hi};
  r.numbers("fit_range", fit, true, true);
  if (fit.size() != 2) r.error("fit_range", "must hold two radii");
  else {
    c.fit_lo = fit[0];
    c.fit_hi = fit[1];
  }
  r.number("radii_step", c.radii_step, true);
  r.numbers("drop_radii", c.drop_radii, true, true);
}

inline void parse_expect(const json& j, const std::string& path, Expectations& e, std::vector<std::string>& errors) {
  Reader r(j, path, errors);
  r.number("c0_slack", e.c0_slack);
  r.number("max_violation", e.max_violation);
  r.number("estimate_slack", e.estimate_slack);
  r.number("slope_tol", e.slope_tol, true);
  r.optional_number("beta", e.beta);
  r.number("beta_rel_tol", e.beta_rel_tol, true);
  r.optional_number("beta_max", e.beta_max);
  r.number("min_abs_beta", e.min_abs_beta);
  r.number("min_drop", e.min_drop);
  std::vector<double> ratio{e.ratio_lo, e.ratio_hi};
  r.numbers("ratio_range", ratio, true, true);
  if (ratio.size() == 2) {
    e.ratio_lo = ratio[0];
    e.ratio_hi = ratio[1];
  } else {
    r.error("ratio_range", "must hold two numbers");
  }
  r.number("distance_factor", e.distance_factor, true);
}

} // namespace detail

/// Parses and validates a scenario. Throws ConfigError listing every problem.
inline ScenarioConfig parse_config(std::string_view text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("$: invalid JSON: ") + e.what()});
  }
  std::vector<std::string> errors;
  ScenarioConfig cfg;
  {
    detail::Reader r(j, "$", errors);
    std::string scenario = "solve";
    r.string("scenario", scenario);
    if (const auto kind = scenario_from_string(scenario)) cfg.scenario = *kind;
    else r.error("scenario", "unknown scenario '" + scenario + "' (valid: " + scenario_options() + ")");
    if (const json* d = r.find("domain")) {
      cfg.domain = detail::parse_domain(*d, r.at("domain"), errors);
      cfg.domain_spec = *d;
    }
    if (const json* b = r.find("boundary")) cfg.boundary = detail::parse_boundary(*b, r.at("boundary"), errors);
    if (const json* b = r.find("boundary2")) cfg.boundary2 = detail::parse_boundary(*b, r.at("boundary2"), errors);
    else cfg.boundary2 = cfg.boundary;
    r.number("k", cfg.k, true);
    r.optional_number("margin", cfg.margin);
    if (cfg.margin && *cfg.margin < 0.0) r.error("margin", "margin must be non-negative");
    r.numbers("schedule", cfg.schedule, true, true);
    r.number("h", cfg.h, true);
    r.integer("arc_resolution", cfg.arc_resolution, 8);
    if (const json* m = r.find("mesh")) {
      detail::Reader mr(*m, r.at("mesh"), errors);
      mr.number("min_angle_deg", cfg.mesh.min_angle_deg, true);
      if (cfg.mesh.min_angle_deg > 30.0) mr.error("min_angle_deg", "min_angle_deg above 30 may not terminate");
      cfg.cone.mesh.mesh = cfg.mesh;
    }
    if (const json* s = r.find("solver")) detail::parse_solver(*s, r.at("solver"), cfg.newton, errors);
    r.numbers("c_values", cfg.c_values, true, false);
    r.number("c", cfg.c);
    r.numbers("deltas", cfg.deltas, false, true);
    if (const json* v = r.find("inits")) {
      cfg.inits.clear();
      if (!v->is_array() || v->size() < 2) r.error("inits", "must list at least two initializations");
      else
        for (const auto& e : *v) {
          const std::string s = e.is_string() ? e.get<std::string>() : "";
          if (s != "zero" && s != "plane" && s != "harmonic" && s != "random")
            r.error("inits", "unknown init '" + e.dump() + "' (valid: zero, plane, harmonic, random)");
          cfg.inits.push_back(s);
        }
    }
    r.number("random_amplitude", cfg.random_amplitude, true);
    if (const json* c = r.find("cone")) detail::parse_cone(*c, r.at("cone"), cfg.cone, errors);
    if (const json* e = r.find("expect")) detail::parse_expect(*e, r.at("expect"), cfg.expect, errors);
    r.string("out_dir", cfg.out_dir);
    if (cfg.out_dir.empty()) r.error("out_dir", "out_dir must not be empty");
    r.integer("threads", cfg.threads, 1);
    r.unsigned_integer("seed", cfg.seed);
  }

  // cross-field invariants
  const auto kind = classify(cfg.domain);
  if (errors.empty()) {
    if ((cfg.scenario == ScenarioKind::foliation || cfg.scenario == ScenarioKind::linearization) &&
        kind != DomainKind::half_space)
      errors.push_back("$.domain: " + std::string(to_string(cfg.scenario)) + " needs the half_space domain");
    if (cfg.scenario == ScenarioKind::cone_linear && kind != DomainKind::cone && kind != DomainKind::half_space)
      errors.push_back("$.domain: cone_linear needs a wedge with apex at the origin");
    if (cfg.scenario == ScenarioKind::exhaustion && cfg.schedule.size() < 2)
      errors.push_back("$.schedule: exhaustion needs at least two radii");
    if (cfg.scenario == ScenarioKind::linearization && cfg.deltas.size() < 2)
      errors.push_back("$.deltas: linearization needs two deltas");
    if (cfg.effective_margin() >= cfg.k) errors.push_back("$.margin: margin must be smaller than k");
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return cfg;
}

} // namespace minsurf
