#pragma once

// Run configuration: a YAML document with a versioned schema. Unknown keys
// and out-of-range values are errors that name the offending field.

#include "reeblab/flow.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace reeblab::cli {

inline constexpr int kSchemaVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ParamType { real, integer, integer_list, choice };
const char* to_string(ParamType type);

using Value = std::variant<double, std::int64_t, std::vector<std::int64_t>, std::string>;

struct ParamSpec {
  std::string name;
  ParamType type = ParamType::real;
  Value fallback;
  std::string doc;
  std::vector<std::string> choices;  // ParamType::choice
  // Returns an empty string when the value is acceptable, else the reason.
  std::function<std::string(const Value&)> check;
};

struct ParameterSet {
  std::map<std::string, Value> values;

  double real(const std::string& name) const;
  std::int64_t integer(const std::string& name) const;
  const std::vector<std::int64_t>& integers(const std::string& name) const;
  const std::string& text(const std::string& name) const;
};

struct RunConfig;
class RunContext;

struct ScenarioKind {
  std::string name;
  std::string summary;
  std::vector<ParamSpec> params;
  IntegratorConfig integrator;  // defaults for the integrator block
  // Checks spanning several parameters; empty string when consistent.
  std::function<std::string(const ParameterSet&)> cross_check;
  std::function<void(RunContext&)> run;
};

const std::vector<ScenarioKind>& scenario_kinds();
// Throws ConfigError for an unknown name.
const ScenarioKind& find_kind(std::string_view name);
// Human-readable schema.
std::string describe(const ScenarioKind& kind);

struct RunConfig {
  int schema_version = kSchemaVersion;
  std::string kind;
  std::string name;
  std::uint64_t seed = 1;
  int jobs = 0;
  std::optional<std::string> out_dir;
  IntegratorConfig integrator;
  ParameterSet parameters;  // every schema parameter, defaults filled in
};

RunConfig parse_config(std::string_view yaml_text);
RunConfig load_config(const std::string& path);

}  // namespace reeblab::cli
