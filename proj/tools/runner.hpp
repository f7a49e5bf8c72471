#pragma once

// Scenario execution: checks with tolerances, artifacts and the JSON report.
// Files are written by the coordinating thread in the order the scenario
// produces them; worker pools only fill pre-sized result slots.

#include "config.hpp"

#include "json.hpp"

#include <chrono>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace reeblab::cli {

struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string relation;  // "<=", ">=", "=="
};

struct Artifact {
  std::string file;
  std::string kind;  // csv, dat, json
  std::string description;
};

class RunContext {
 public:
  RunContext(const RunConfig& config, std::filesystem::path out_dir);

  const RunConfig& config() const { return config_; }
  const ParameterSet& params() const { return config_.parameters; }
  const IntegratorConfig& integrator() const { return config_.integrator; }
  int jobs() const { return config_.jobs; }
  // Independent stream number k derived from the run seed.
  std::mt19937_64 rng(std::uint64_t k) const;
  std::uint64_t substream_seed(std::uint64_t k) const;

  // Each check name may be recorded once.
  bool check_le(const std::string& name, double value, double tolerance);
  bool check_ge(const std::string& name, double value, double bound);
  bool check_eq(const std::string& name, double value, double expected);
  bool check_true(const std::string& name, bool ok);

  nlohmann::ordered_json& results() { return results_; }
  nlohmann::ordered_json& census() { return census_; }

  void write_artifact(const std::string& file, const std::string& kind, const std::string& description,
                      const std::string& content);

  // Wall-clock phases, reported only in the timing sidecar.
  void phase(const std::string& name);

  bool passed() const;
  const std::vector<Check>& checks() const { return checks_; }
  nlohmann::ordered_json report() const;
  nlohmann::ordered_json timing() const;

 private:
  bool add(Check c);

  RunConfig config_;
  std::filesystem::path out_;
  std::vector<Check> checks_;
  std::vector<Artifact> artifacts_;
  nlohmann::ordered_json results_ = nlohmann::ordered_json::object();
  nlohmann::ordered_json census_;
  using Clock = std::chrono::steady_clock;
  Clock::time_point start_ = Clock::now();
  Clock::time_point phase_start_ = start_;
  std::string phase_name_ = "setup";
  std::vector<std::pair<std::string, double>> phases_;
};

nlohmann::ordered_json echo_config(const RunConfig& config);

struct RunOutcome {
  bool passed = false;
  std::filesystem::path report_path;
  std::size_t checks = 0;
  std::size_t failed = 0;
};

// Runs the scenario, then writes report.json and timing.json into out_dir.
RunOutcome run_scenario(const RunConfig& config, const std::filesystem::path& out_dir);

// Shared formatting for CSV and plot-data files: shortest round-trip
// decimal representation, so identical runs give identical bytes.
std::string fmt(double x);

}  // namespace reeblab::cli
