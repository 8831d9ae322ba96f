#include <minsurf/runner.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw minsurf::Error("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimal graph experiments"};
  std::string config_path, out_dir, scenario;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "scenario configuration (JSON)")->required();
  app.add_option("--out-dir", out_dir, "output directory (overrides out_dir)");
  app.add_option("--threads", threads, "worker threads (overrides threads)")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "seed for randomized initial guesses (overrides seed)");
  app.add_option("--scenario", scenario, "scenario override");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : minsurf::exit_operational;
  }

  try {
    auto j = nlohmann::json::parse(read_file(config_path), nullptr, false);
    if (j.is_discarded()) throw minsurf::ConfigError({"$: invalid JSON in " + config_path});
    if (!j.is_object()) throw minsurf::ConfigError({"$: must be an object"});
    if (!out_dir.empty()) j["out_dir"] = out_dir;
    if (threads) j["threads"] = *threads;
    if (seed) j["seed"] = *seed;
    if (!scenario.empty()) j["scenario"] = scenario;
    const auto cfg = minsurf::parse_config(j.dump());
    const auto outcome = minsurf::run(cfg);
    for (const auto& a : outcome.assertions)
      std::cout << (a.pass ? "pass " : "FAIL ") << a.name << ' ' << minsurf::format_double(a.value) << ' ' << a.relation << ' '
                << minsurf::format_double(a.threshold) << '\n';
    std::cout << "artifacts: " << outcome.dir.string() << '\n';
    return outcome.exit_code;
  } catch (const minsurf::ConfigError& e) {
    for (const auto& line : e.errors()) std::cerr << "config error: " << line << '\n';
    return minsurf::exit_operational;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return minsurf::exit_operational;
  }
}
