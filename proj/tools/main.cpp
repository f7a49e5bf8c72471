// reeblab: run, list, describe and validate scenarios.
//
// Exit codes: 0 every check passed, 1 some check failed (the report is still
// written), 2 usage or configuration error.

#include "config.hpp"
#include "runner.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <iostream>

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitUsage = 2;

constexpr const char* kOutDirEnv = "REEBLAB_OUT_DIR";

}  // namespace

int main(int argc, char** argv) {
  using namespace reeblab::cli;

  CLI::App app{"reeblab: contact-geometry scenario runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int jobs = -1;
  std::int64_t seed = -1;
  std::string kind_name;

  CLI::App* run = app.add_subcommand("run", "run a scenario config and write its report");
  run->add_option("config", config_path, "YAML config file")->required();
  run->add_option("--out-dir", out_dir, "output directory (overrides $" + std::string(kOutDirEnv) + " and the config)");
  run->add_option("--jobs", jobs, "worker threads (0: all cores)")->check(CLI::Range(0, 1024));
  run->add_option("--seed", seed, "RNG seed (overrides the config)")->check(CLI::NonNegativeNumber);

  CLI::App* list = app.add_subcommand("list", "list scenario kinds");
  CLI::App* describe_cmd = app.add_subcommand("describe", "print the parameter schema of a scenario kind");
  describe_cmd->add_option("kind", kind_name, "scenario kind")->required();
  CLI::App* validate = app.add_subcommand("validate", "parse and validate a config without running it");
  validate->add_option("config", config_path, "YAML config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (list->parsed()) {
      for (const ScenarioKind& k : scenario_kinds()) std::cout << k.name << "\t" << k.summary << "\n";
      return kExitPass;
    }
    if (describe_cmd->parsed()) {
      std::cout << describe(find_kind(kind_name));
      return kExitPass;
    }
    RunConfig cfg = load_config(config_path);
    if (validate->parsed()) {
      std::cout << "ok: " << cfg.name << " (" << cfg.kind << ")\n";
      return kExitPass;
    }

    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (jobs >= 0) cfg.jobs = jobs;
    std::string dir = cfg.out_dir.value_or("reeblab-out");
    if (const char* env = std::getenv(kOutDirEnv); env && *env) dir = env;
    if (!out_dir.empty()) dir = out_dir;

    const RunOutcome outcome = run_scenario(cfg, dir);
    std::cout << (outcome.passed ? "PASS" : "FAIL") << " " << cfg.name << ": " << outcome.checks - outcome.failed
              << "/" << outcome.checks << " checks passed; report " << outcome.report_path.string() << "\n";
    return outcome.passed ? kExitPass : kExitCheckFailure;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailure;
  }
}
