#include <minsurf/runner.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sys/wait.h>

using namespace minsurf;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> config_errors(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.errors();
  }
  return {};
}

bool any_contains(const std::vector<std::string>& lines, std::string_view needle) {
  return std::any_of(lines.begin(), lines.end(), [&](const std::string& l) { return l.find(needle) != std::string::npos; });
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("minsurf_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MINSURF_CLI_PATH) + ' ' + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
  const auto p = dir / name;
  write_text_file(p.string(), text);
  return p;
}

const char* kSmallFoliation = R"({
  "scenario": "foliation",
  "domain": "half_space",
  "boundary": {"p": [0.3, 0], "phi": {"name": "bounded_sine", "amp": 0.4}},
  "c_values": [-0.5, 0.0, 0.5],
  "k": 4,
  "h": 0.2
})";

// Every regular file below `root`, keyed by relative path.
std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

} // namespace

TEST(ParseConfig, MinimalSolveFillsDefaults) {
  const auto cfg = parse_config(R"({"scenario": "solve"})");
  EXPECT_EQ(cfg.scenario, ScenarioKind::solve);
  EXPECT_EQ(classify(cfg.domain), DomainKind::half_space);
  EXPECT_DOUBLE_EQ(cfg.k, 8.0);
  EXPECT_DOUBLE_EQ(cfg.h, 0.1);
  EXPECT_DOUBLE_EQ(cfg.effective_margin(), 1.0 / 8.0);
  EXPECT_EQ(cfg.threads, 1);
  EXPECT_EQ(cfg.out_dir, "out");
  EXPECT_EQ(cfg.boundary.phi_sup(), 0.0);
}

TEST(ParseConfig, FullBoundaryAndDomainSpecs) {
  const auto cfg = parse_config(R"({
    "scenario": "comparison",
    "domain": {"type": "wedge", "angle_deg": 120},
    "boundary": {"p": [1, 0], "q": 2, "phi": {"name": "gaussian_bump", "amp": 0.3, "center": [0, 1], "width": 2}},
    "boundary2": {"p": [1, 0.2], "phi": {"name": "compact_hat", "amp": 0.5, "radius": 2}},
    "solver": {"linear": "direct", "init": "plane", "max_iters": 7}
  })");
  EXPECT_EQ(classify(cfg.domain), DomainKind::cone);
  EXPECT_DOUBLE_EQ(cfg.boundary.q, 2.0);
  EXPECT_EQ(perturbation_name(cfg.boundary.phi), "gaussian_bump");
  EXPECT_DOUBLE_EQ(std::get<GaussianBump>(cfg.boundary.phi).width, 2.0);
  EXPECT_DOUBLE_EQ(cfg.boundary2.p.y(), 0.2);
  EXPECT_EQ(cfg.newton.linear.kind, LinearSolverKind::direct_ldlt);
  EXPECT_EQ(cfg.newton.init, InitialGuess::plane);
  EXPECT_EQ(cfg.newton.max_iters, 7);
  EXPECT_EQ(classify(parse_config(R"({"domain": {"type": "slab", "width": 2}})").domain), DomainKind::slab);
  EXPECT_EQ(classify(parse_config(R"({"domain": {"type": "halfplanes", "halfplanes": [
      {"normal": [0, -1], "offset": 0}, {"normal": [-1, 0], "offset": 0}]}})").domain), DomainKind::cone);
}

TEST(ParseConfig, DomainShortcutsAndMeshKnob) {
  const auto w = parse_config(R"j({"domain": "wedge(1.5707963267948966)"})j");
  EXPECT_EQ(classify(w.domain), DomainKind::cone);
  EXPECT_EQ(w.domain.halfplanes().size(), 2u);
  EXPECT_EQ(classify(parse_config(R"j({"domain": "slab(3)"})j").domain), DomainKind::slab);
  EXPECT_EQ(classify(parse_config(R"({"domain": [{"normal": [0, -1], "offset": 0}]})").domain), DomainKind::half_space);
  EXPECT_TRUE(any_contains(config_errors(R"j({"domain": "wedge(4)"})j"), "$.domain: wedge angle"));
  EXPECT_TRUE(any_contains(config_errors(R"j({"domain": "slab(x)"})j"), "unknown domain 'slab(x)'"));

  const auto m = parse_config(R"({"mesh": {"min_angle_deg": 25}})");
  EXPECT_DOUBLE_EQ(m.mesh.min_angle_deg, 25.0);
  EXPECT_DOUBLE_EQ(m.experiment_options().mesh.min_angle_deg, 25.0);
  EXPECT_DOUBLE_EQ(m.cone.mesh.mesh.min_angle_deg, 25.0);
  EXPECT_DOUBLE_EQ(parse_config("{}").mesh.min_angle_deg, 20.0);
  EXPECT_TRUE(any_contains(config_errors(R"({"mesh": {"min_angle_deg": 40}})"), "$.mesh.min_angle_deg"));
  EXPECT_TRUE(any_contains(config_errors(R"({"mesh": {"min_angle": 20}})"), "$.mesh.min_angle: unknown key"));
}

TEST(ParseConfig, UnknownScenarioNamesFieldAndOptions) {
  const auto errs = config_errors(R"({"scenario": "folliation"})");
  ASSERT_EQ(errs.size(), 1u);
  EXPECT_NE(errs[0].find("$.scenario"), std::string::npos);
  EXPECT_NE(errs[0].find("folliation"), std::string::npos);
  for (const auto& [kind, name] : kScenarioNames) EXPECT_NE(errs[0].find(name), std::string::npos) << name;
}

TEST(ParseConfig, NegativeH) {
  const auto errs = config_errors(R"({"h": -0.1})");
  ASSERT_EQ(errs.size(), 1u);
  EXPECT_NE(errs[0].find("$.h"), std::string::npos);
  EXPECT_NE(errs[0].find("h must be positive"), std::string::npos);
}

TEST(ParseConfig, ReportsAllErrorsWithPaths) {
  const auto errs = config_errors(R"({
    "scenario": "solve", "h": 0, "colour": "blue", "k": "big",
    "boundary": {"phi": {"name": "wiggle"}, "tilt": 1},
    "solver": {"linear": "gmres"}
  })");
  EXPECT_EQ(errs.size(), 6u);
  EXPECT_TRUE(any_contains(errs, "$.h: h must be positive"));
  EXPECT_TRUE(any_contains(errs, "$.colour: unknown key"));
  EXPECT_TRUE(any_contains(errs, "$.k: must be a number"));
  EXPECT_TRUE(any_contains(errs, "$.boundary.phi.name: unknown perturbation 'wiggle'"));
  EXPECT_TRUE(any_contains(errs, "$.boundary.tilt: unknown key"));
  EXPECT_TRUE(any_contains(errs, "$.solver.linear"));
}

TEST(ParseConfig, InvariantViolations) {
  EXPECT_TRUE(any_contains(config_errors(R"({"scenario": "exhaustion", "schedule": [10, 6]})"), "sorted"));
  EXPECT_TRUE(any_contains(config_errors(R"({"scenario": "exhaustion", "schedule": [6]})"), "at least two"));
  EXPECT_TRUE(any_contains(config_errors(R"({"scenario": "foliation", "domain": {"type": "slab", "width": 1}})"),
                           "needs the half_space domain"));
  EXPECT_TRUE(any_contains(config_errors(R"({"domain": {"type": "wedge", "angle": 4}})"), "wedge angle"));
  EXPECT_TRUE(any_contains(config_errors(R"({"domain": "quadrant"})"), "unknown domain"));
  EXPECT_TRUE(any_contains(config_errors(R"({"threads": 0})"), "threads must be at least 1"));
  EXPECT_TRUE(any_contains(config_errors(R"({"inits": ["zero"]})"), "at least two"));
  EXPECT_TRUE(any_contains(config_errors("{not json"), "invalid JSON"));
}

TEST(Run, SolveWritesArtifacts) {
  const auto dir = scratch("solve");
  auto cfg = parse_config(R"({"scenario": "solve", "domain": {"type": "wedge", "angle_deg": 120}, "k": 4, "h": 0.2,
                              "boundary": {"p": [1, 0], "phi": {"name": "gaussian_bump", "amp": 0.2}}})");
  cfg.out_dir = dir.string();
  const auto out = run(cfg);
  EXPECT_EQ(out.exit_code, exit_ok);
  for (const char* f : {"manifest.json", "assertions.csv", "failures.csv", "solve/mesh.txt", "solve/field.txt", "solve/report.csv"})
    EXPECT_TRUE(fs::exists(dir / "solve" / f)) << f;
  const auto report = slurp(dir / "solve" / "solve" / "report.csv");
  EXPECT_EQ(report.rfind("scenario,iterations,final_residual,energy\nsolve,", 0), 0u);
  EXPECT_EQ(slurp(dir / "solve" / "failures.csv"), "scenario,assertion,value,relation,threshold\n");
  std::ifstream mesh(dir / "solve" / "solve" / "mesh.txt");
  const auto back = read_mesh(mesh);
  EXPECT_GT(back.mesh->vertex_count(), 10u);
}

TEST(Cli, FoliationExitsZeroWithPerLeafCsvs) {
  const auto dir = scratch("foliation");
  const auto cfg = write_config(dir, "fol.json", kSmallFoliation);
  EXPECT_EQ(run_cli("--config " + cfg.string() + " --out-dir " + (dir / "out").string()), exit_ok);
  EXPECT_TRUE(fs::exists(dir / "out" / "foliation" / "leaves.csv"));
  for (int i = 0; i < 3; ++i) EXPECT_TRUE(fs::exists(dir / "out" / "foliation" / ("leaf_" + std::to_string(i)) / "report.csv"));
}

TEST(Cli, UnorderedComparisonIsOperationalError) {
  const auto dir = scratch("unordered");
  const auto cfg = write_config(dir, "cmp.json", R"({
    "scenario": "comparison", "domain": {"type": "wedge", "angle_deg": 120}, "k": 4, "h": 0.2,
    "boundary": {"p": [1, 0], "phi": {"name": "gaussian_bump", "amp": 0.3}},
    "boundary2": {"p": [1, 0]}
  })");
  EXPECT_EQ(run_cli("--config " + cfg.string() + " --out-dir " + (dir / "out").string()), exit_operational);
}

TEST(Cli, AssertionFailureExitsTwoWithFailuresCsv) {
  const auto dir = scratch("assert");
  const auto cfg = write_config(dir, "cmp.json", R"({
    "scenario": "comparison", "domain": {"type": "wedge", "angle_deg": 120}, "k": 4, "h": 0.2,
    "boundary": {"p": [1, 0]}, "boundary2": {"p": [1, 0], "phi": {"name": "gaussian_bump", "amp": 0.3}},
    "expect": {"max_violation": -1}
  })");
  EXPECT_EQ(run_cli("--config " + cfg.string() + " --out-dir " + (dir / "out").string()), exit_assertion);
  const auto failures = slurp(dir / "out" / "comparison" / "failures.csv");
  EXPECT_NE(failures.find("\ncomparison,violation,"), std::string::npos);
}

TEST(Cli, BadConfigAndMissingFileAreOperationalErrors) {
  const auto dir = scratch("bad");
  const auto cfg = write_config(dir, "bad.json", R"({"scenario": "folliation"})");
  EXPECT_EQ(run_cli("--config " + cfg.string()), exit_operational);
  EXPECT_EQ(run_cli("--config " + (dir / "missing.json").string()), exit_operational);
  EXPECT_EQ(run_cli(""), exit_operational);
}

TEST(Cli, FlagsOverrideConfig) {
  const auto dir = scratch("override");
  const auto cfg = write_config(dir, "solve.json", R"({"scenario": "foliation", "k": 4, "h": 0.25, "c_values": [0, 1],
                                                     "out_dir": "/nonexistent/should/not/be/used"})");
  EXPECT_EQ(run_cli("--config " + cfg.string() + " --scenario solve --threads 2 --seed 9 --out-dir " + (dir / "out").string()),
            exit_ok);
  const auto manifest = nlohmann::json::parse(slurp(dir / "out" / "solve" / "manifest.json"));
  EXPECT_EQ(manifest["scenario"], "solve");
  EXPECT_EQ(manifest["threads"], 2);
  EXPECT_EQ(manifest["seed"], 9);
  EXPECT_EQ(run_cli("--config " + cfg.string() + " --scenario folliation"), exit_operational);
}

TEST(Cli, RerunsAreByteIdentical) {
  const auto dir = scratch("rerun");
  const auto cfg = write_config(dir, "fol.json", kSmallFoliation);
  ASSERT_EQ(run_cli("--config " + cfg.string() + " --threads 1 --out-dir " + (dir / "a").string()), exit_ok);
  ASSERT_EQ(run_cli("--config " + cfg.string() + " --threads 1 --out-dir " + (dir / "b").string()), exit_ok);
  const auto a = tree(dir / "a"), b = tree(dir / "b");
  ASSERT_FALSE(a.empty());
  EXPECT_EQ(a, b);
}

TEST(Cli, ThreadCountDoesNotChangeMetrics) {
  const auto dir = scratch("threads");
  const auto cfg = write_config(dir, "fol.json", kSmallFoliation);
  ASSERT_EQ(run_cli("--config " + cfg.string() + " --threads 1 --out-dir " + (dir / "a").string()), exit_ok);
  ASSERT_EQ(run_cli("--config " + cfg.string() + " --threads 4 --out-dir " + (dir / "b").string()), exit_ok);
  auto a = tree(dir / "a"), b = tree(dir / "b");
  a.erase("foliation/manifest.json");  // records the thread count
  b.erase("foliation/manifest.json");
  EXPECT_EQ(a, b);
}

TEST(Cli, RandomInitsFollowSeed) {
  const auto dir = scratch("seed");
  const auto cfg = write_config(dir, "u.json", R"({
    "scenario": "uniqueness", "domain": {"type": "wedge", "angle_deg": 120}, "k": 4, "h": 0.25,
    "boundary": {"p": [1, 0]}, "inits": ["plane", "random"], "random_amplitude": 0.2, "solver": {"max_iters": 200}
  })");
  ASSERT_EQ(run_cli("--config " + cfg.string() + " --seed 1 --out-dir " + (dir / "a").string()), exit_ok);
  ASSERT_EQ(run_cli("--config " + cfg.string() + " --seed 2 --out-dir " + (dir / "b").string()), exit_ok);
  const auto ra = slurp(dir / "a" / "uniqueness" / "init_1" / "report.csv");
  const auto rb = slurp(dir / "b" / "uniqueness" / "init_1" / "report.csv");
  EXPECT_NE(ra, rb);  // different random starts take different Newton paths
}
