// Scenario runner: `wpscat run <config>` and `wpscat validate <config>`.
//
// Exit codes: 0 success, 1 invalid config, 2 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "wpscat/scenario.hpp"

namespace {

int report_config_error(const std::string& path, const wpscat::ConfigError& e) {
  std::cerr << path << ": invalid config\n";
  for (const auto& v : e.violations()) std::cerr << "  " << v << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wave-packet scattering and golden-rule toolkit"};
  app.set_version_flag("--version", std::string(wpscat::kToolkitVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  int threads = 1;
  std::uint64_t seed = 0;

  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", config_path, "scenario config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--output-dir", output_dir, "directory for datasets (overrides the config's output)");
  run->add_option("--threads", threads, "worker threads for sweeps")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "reserved; all experiments are deterministic");

  auto* validate = app.add_subcommand("validate", "check a config file and print its canonical form");
  validate->add_option("config", config_path, "scenario config (JSON)")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  wpscat::ScenarioConfig cfg;
  try {
    cfg = wpscat::load_config(config_path);
  } catch (const wpscat::ConfigError& e) {
    return report_config_error(config_path, e);
  }

  if (*validate) {
    std::cout << cfg.canonical.dump(2) << '\n' << "config_hash " << wpscat::config_hash(cfg) << '\n';
    return 0;
  }

  const std::filesystem::path out = output_dir.empty() ? std::filesystem::path(cfg.output) : std::filesystem::path(output_dir);
  try {
    const auto report = wpscat::run_scenario(cfg, out, threads);
    for (const auto& [name, rows] : report.files) std::cout << (out / name).string() << "  " << rows << " rows\n";
    std::cout << (out / "manifest.json").string() << "  config_hash " << report.config_hash << '\n';
  } catch (const wpscat::NumericalFailure& e) {
    std::cerr << "numerical failure in " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
