#include "config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace reeblab::cli {

namespace {

std::string field_error(const std::string& field, const std::string& why) { return field + ": " + why; }

double read_real(const YAML::Node& n, const std::string& field) {
  if (!n.IsScalar()) throw ConfigError(field_error(field, "expected a number"));
  const std::string& s = n.Scalar();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(field_error(field, "expected a number, got '" + s + "'"));
  }
}

std::int64_t read_integer(const YAML::Node& n, const std::string& field) {
  if (!n.IsScalar()) throw ConfigError(field_error(field, "expected an integer"));
  const std::string& s = n.Scalar();
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(field_error(field, "expected an integer, got '" + s + "'"));
  }
}

std::string read_string(const YAML::Node& n, const std::string& field) {
  if (!n.IsScalar()) throw ConfigError(field_error(field, "expected a string"));
  return n.Scalar();
}

void reject_unknown(const YAML::Node& map, const std::set<std::string>& known, const std::string& prefix) {
  for (const auto& kv : map) {
    const std::string key = kv.first.as<std::string>();
    if (!known.count(key)) throw ConfigError(field_error(prefix + key, "unknown key"));
  }
}

Value read_value(const ParamSpec& spec, const YAML::Node& n, const std::string& field) {
  switch (spec.type) {
    case ParamType::real:
      return read_real(n, field);
    case ParamType::integer:
      return read_integer(n, field);
    case ParamType::integer_list: {
      if (!n.IsSequence()) throw ConfigError(field_error(field, "expected a list of integers"));
      std::vector<std::int64_t> out;
      for (std::size_t i = 0; i < n.size(); ++i)
        out.push_back(read_integer(n[i], field + "[" + std::to_string(i) + "]"));
      return out;
    }
    case ParamType::choice: {
      const std::string s = read_string(n, field);
      for (const auto& c : spec.choices)
        if (c == s) return s;
      std::string all;
      for (const auto& c : spec.choices) all += (all.empty() ? "" : ", ") + c;
      throw ConfigError(field_error(field, "expected one of {" + all + "}, got '" + s + "'"));
    }
  }
  throw ConfigError(field_error(field, "unsupported type"));
}

std::string value_text(const Value& v) {
  std::ostringstream out;
  std::visit(
      [&out](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::vector<std::int64_t>>) {
          out << '[';
          for (std::size_t i = 0; i < x.size(); ++i) out << (i ? ", " : "") << x[i];
          out << ']';
        } else {
          out << x;
        }
      },
      v);
  return out.str();
}

Method read_method(const YAML::Node& n) {
  const std::string s = read_string(n, "integrator.method");
  if (s == "rk4") return Method::rk4;
  if (s == "rkf45") return Method::rkf45;
  throw ConfigError(field_error("integrator.method", "expected one of {rk4, rkf45}, got '" + s + "'"));
}

template <typename T>
const T& get(const ParameterSet& set, const std::string& name) {
  const auto it = set.values.find(name);
  if (it == set.values.end()) throw std::logic_error("no parameter '" + name + "'");
  const T* v = std::get_if<T>(&it->second);
  if (!v) throw std::logic_error("parameter '" + name + "' has another type");
  return *v;
}

}  // namespace

const char* to_string(ParamType type) {
  switch (type) {
    case ParamType::real:
      return "real";
    case ParamType::integer:
      return "integer";
    case ParamType::integer_list:
      return "integer list";
    case ParamType::choice:
      return "choice";
  }
  return "?";
}

double ParameterSet::real(const std::string& name) const { return get<double>(*this, name); }
std::int64_t ParameterSet::integer(const std::string& name) const { return get<std::int64_t>(*this, name); }
const std::vector<std::int64_t>& ParameterSet::integers(const std::string& name) const {
  return get<std::vector<std::int64_t>>(*this, name);
}
const std::string& ParameterSet::text(const std::string& name) const { return get<std::string>(*this, name); }

const ScenarioKind& find_kind(std::string_view name) {
  for (const ScenarioKind& k : scenario_kinds())
    if (k.name == name) return k;
  throw ConfigError("unknown scenario kind '" + std::string(name) + "' (see `reeblab list`)");
}

std::string describe(const ScenarioKind& kind) {
  std::ostringstream out;
  out << kind.name << ": " << kind.summary << "\n\nparameters:\n";
  for (const ParamSpec& p : kind.params) {
    out << "  " << p.name << " (" << to_string(p.type);
    if (!p.choices.empty()) {
      out << ": ";
      for (std::size_t i = 0; i < p.choices.size(); ++i) out << (i ? "|" : "") << p.choices[i];
    }
    out << ", default " << value_text(p.fallback) << ")\n      " << p.doc << "\n";
  }
  const IntegratorConfig& ic = kind.integrator;
  out << "\nintegrator defaults:\n  method " << (ic.method == Method::rk4 ? "rk4" : "rkf45") << ", step " << ic.step
      << ", tolerance " << ic.tolerance << ", t_max " << ic.t_max << "\n";
  return out.str();
}

RunConfig parse_config(std::string_view yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("config must be a mapping");
  reject_unknown(root, {"schema_version", "scenario", "name", "seed", "jobs", "output", "integrator", "parameters"},
                 "");

  RunConfig cfg;
  if (!root["schema_version"]) throw ConfigError("schema_version: required");
  const std::int64_t version = read_integer(root["schema_version"], "schema_version");
  if (version != kSchemaVersion)
    throw ConfigError(field_error("schema_version", "unsupported version " + std::to_string(version) +
                                                        " (expected " + std::to_string(kSchemaVersion) + ")"));
  if (!root["scenario"]) throw ConfigError("scenario: required");
  const ScenarioKind& kind = find_kind(read_string(root["scenario"], "scenario"));
  cfg.kind = kind.name;
  cfg.name = root["name"] ? read_string(root["name"], "name") : kind.name;
  if (root["seed"]) {
    const std::int64_t s = read_integer(root["seed"], "seed");
    if (s < 0) throw ConfigError(field_error("seed", "must be non-negative"));
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  if (root["jobs"]) {
    const std::int64_t j = read_integer(root["jobs"], "jobs");
    if (j < 0 || j > 1024) throw ConfigError(field_error("jobs", "must be in [0, 1024]"));
    cfg.jobs = static_cast<int>(j);
  }
  if (const YAML::Node out = root["output"]) {
    if (!out.IsMap()) throw ConfigError("output: expected a mapping");
    reject_unknown(out, {"dir"}, "output.");
    if (out["dir"]) cfg.out_dir = read_string(out["dir"], "output.dir");
  }

  cfg.integrator = kind.integrator;
  if (const YAML::Node in = root["integrator"]) {
    if (!in.IsMap()) throw ConfigError("integrator: expected a mapping");
    reject_unknown(in, {"method", "step", "tolerance", "t_max"}, "integrator.");
    if (in["method"]) cfg.integrator.method = read_method(in["method"]);
    if (in["step"]) cfg.integrator.step = read_real(in["step"], "integrator.step");
    if (in["tolerance"]) cfg.integrator.tolerance = read_real(in["tolerance"], "integrator.tolerance");
    if (in["t_max"]) cfg.integrator.t_max = read_real(in["t_max"], "integrator.t_max");
    try {
      cfg.integrator.validate();
    } catch (const ModelError& e) {
      throw ConfigError(std::string("integrator: ") + e.what());
    }
  }

  std::set<std::string> known;
  for (const ParamSpec& p : kind.params) known.insert(p.name);
  const YAML::Node params = root["parameters"];
  if (params && !params.IsMap() && !params.IsNull()) throw ConfigError("parameters: expected a mapping");
  if (params && params.IsMap()) reject_unknown(params, known, "parameters.");
  for (const ParamSpec& p : kind.params) {
    const std::string field = "parameters." + p.name;
    Value v = p.fallback;
    if (params && params.IsMap() && params[p.name]) v = read_value(p, params[p.name], field);
    if (p.check) {
      const std::string why = p.check(v);
      if (!why.empty()) throw ConfigError(field_error(field, why + " (got " + value_text(v) + ")"));
    }
    cfg.parameters.values[p.name] = std::move(v);
  }
  if (kind.cross_check) {
    const std::string why = kind.cross_check(cfg.parameters);
    if (!why.empty()) throw ConfigError("parameters: " + why);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace reeblab::cli
