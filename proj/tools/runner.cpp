#include "runner.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace reeblab::cli {

namespace fs = std::filesystem;

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

RunContext::RunContext(const RunConfig& config, fs::path out_dir) : config_(config), out_(std::move(out_dir)) {}

std::uint64_t RunContext::substream_seed(std::uint64_t k) const {
  // splitmix64 of (seed, k)
  std::uint64_t z = config_.seed + 0x9e3779b97f4a7c15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mt19937_64 RunContext::rng(std::uint64_t k) const { return std::mt19937_64(substream_seed(k)); }

bool RunContext::add(Check c) {
  for (const Check& other : checks_)
    if (other.name == c.name) throw std::logic_error("check '" + c.name + "' recorded twice");
  const bool ok = c.passed;
  checks_.push_back(std::move(c));
  return ok;
}

bool RunContext::check_le(const std::string& name, double value, double tolerance) {
  return add({name, value <= tolerance, value, tolerance, "<="});
}

bool RunContext::check_ge(const std::string& name, double value, double bound) {
  return add({name, value >= bound, value, bound, ">="});
}

bool RunContext::check_eq(const std::string& name, double value, double expected) {
  return add({name, value == expected, value, expected, "=="});
}

bool RunContext::check_true(const std::string& name, bool ok) { return add({name, ok, ok ? 1.0 : 0.0, 1.0, "=="}); }

void RunContext::write_artifact(const std::string& file, const std::string& kind, const std::string& description,
                                const std::string& content) {
  for (const Artifact& a : artifacts_)
    if (a.file == file) throw std::logic_error("artifact '" + file + "' written twice");
  const fs::path path = out_ / file;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  artifacts_.push_back({file, kind, description});
}

void RunContext::phase(const std::string& name) {
  const auto now = Clock::now();
  phases_.emplace_back(phase_name_, std::chrono::duration<double>(now - phase_start_).count());
  phase_name_ = name;
  phase_start_ = now;
}

bool RunContext::passed() const {
  for (const Check& c : checks_)
    if (!c.passed) return false;
  return !checks_.empty();
}

nlohmann::ordered_json echo_config(const RunConfig& config) {
  nlohmann::ordered_json s;
  s["schema_version"] = config.schema_version;
  s["kind"] = config.kind;
  s["name"] = config.name;
  s["seed"] = config.seed;
  const IntegratorConfig& ic = config.integrator;
  s["integrator"] = {{"method", ic.method == Method::rk4 ? "rk4" : "rkf45"},
                     {"step", ic.step},
                     {"tolerance", ic.tolerance},
                     {"t_max", ic.t_max}};
  nlohmann::ordered_json p = nlohmann::ordered_json::object();
  for (const ParamSpec& spec : find_kind(config.kind).params)
    std::visit([&](const auto& v) { p[spec.name] = v; }, config.parameters.values.at(spec.name));
  s["parameters"] = p;
  return s;
}

nlohmann::ordered_json RunContext::report() const {
  nlohmann::ordered_json r;
  r["schema_version"] = kSchemaVersion;
  r["scenario"] = echo_config(config_);
  r["passed"] = passed();
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const Check& c : checks_)
    checks.push_back({{"name", c.name},
                      {"passed", c.passed},
                      {"value", c.value},
                      {"relation", c.relation},
                      {"tolerance", c.tolerance}});
  r["checks"] = checks;
  r["census"] = census_;
  r["results"] = results_;
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const Artifact& a : artifacts_)
    files.push_back({{"file", a.file}, {"kind", a.kind}, {"description", a.description}});
  files.push_back({{"file", "timing.json"}, {"kind", "json"}, {"description", "wall-clock timing sidecar"}});
  r["artifacts"] = files;
  return r;
}

nlohmann::ordered_json RunContext::timing() const {
  nlohmann::ordered_json t;
  nlohmann::ordered_json ph = nlohmann::ordered_json::array();
  double total = 0.0;
  for (const auto& [name, sec] : phases_) {
    ph.push_back({{"phase", name}, {"seconds", sec}});
    total += sec;
  }
  t["jobs"] = config_.jobs;
  t["phases"] = ph;
  t["total_seconds"] = total;
  return t;
}

RunOutcome run_scenario(const RunConfig& config, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  RunContext ctx(config, out_dir);
  find_kind(config.kind).run(ctx);
  ctx.phase("done");

  RunOutcome outcome;
  outcome.passed = ctx.passed();
  outcome.checks = ctx.checks().size();
  for (const Check& c : ctx.checks()) outcome.failed += c.passed ? 0 : 1;
  outcome.report_path = out_dir / "report.json";
  {
    std::ofstream out(outcome.report_path, std::ios::binary);
    out << ctx.report().dump(2) << '\n';
  }
  {
    std::ofstream out(out_dir / "timing.json", std::ios::binary);
    out << ctx.timing().dump(2) << '\n';
  }
  return outcome;
}

}  // namespace reeblab::cli
