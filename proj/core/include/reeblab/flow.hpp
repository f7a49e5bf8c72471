#pragma once

// Orbit integration with invariant monitoring, event location and orbit
// classification (periodic / trapped / exits / undetermined).

#include "reeblab/contact_kernel.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace reeblab {

class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Method { rk4, rkf45 };

struct IntegratorConfig {
  Method method = Method::rk4;
  double step = 1e-2;         // rk4 step, initial rkf45 step
  double tolerance = 1e-10;   // rkf45 local error tolerance
  double min_step = 1e-12;    // rkf45 underflow limit
  double t_max = 10.0;
  bool project = true;        // reproject sphere models after every step
  bool monitor_alpha = true;  // |alpha(x') - 1|, Reeb fields only
  bool monitor_constraint = true;
  bool monitor_volume = false;
  double alpha_threshold = 1e-6;  // exceeding it truncates the orbit
  int record_every = 1;

  // Throws ModelError on a non-positive t_max, step, tolerance or stride.
  void validate() const;
};

// A vector field to integrate, with the optional contact model it lives on.
struct FlowField {
  std::string name;
  VectorFieldFn vector;
  std::shared_ptr<const ContactModel> model;
  bool reeb = false;
  // Positive inside the designated domain; orbits leaving it exit. Empty:
  // the whole model.
  std::function<double(const Vec&)> domain;

  Vec operator()(const Vec& p) const { return vector(p); }
  bool on_sphere() const { return model && model->is_sphere(); }
  std::string model_id() const { return model ? model->name() : name; }
};

FlowField reeb_flow(const ContactModel& model);
FlowField hamiltonian_flow(const ContactModel& model, const ScalarField& h);
// The same field with time reversed.
FlowField reversed(FlowField field);

enum class OrbitTag { periodic, trapped, exits, undetermined };
const char* to_string(OrbitTag tag);

struct OrbitClass {
  OrbitTag tag = OrbitTag::undetermined;
  // periodic
  double period = 0.0;
  double residual = 0.0;  // closure error |phi_T(p*) - p*|
  Vec point;              // p*
  int newton_iterations = 0;
  // trapped
  std::string region;
  double horizon = 0.0;
  double entry_time = 0.0;
  // exits
  Vec exit_point;
  double exit_time = 0.0;
  // always
  double t_max = 0.0;  // integration horizon the statement refers to
  double closest_return = std::numeric_limits<double>::infinity();
  std::string note;
};

struct OrbitTrace {
  std::string model_id;
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<double> alpha_residual;  // NaN where not monitored
  std::vector<double> constraint_residual;
  OrbitClass classification;
  bool truncated = false;
  std::string truncation_reason;
  std::optional<double> volume_ratio;
  std::size_t steps = 0;

  double max_alpha_residual() const;
  double max_constraint_residual() const;
  const Vec& final_state() const { return states.back(); }
};

// Integrates from p0 over [0, t_max]; the last step is shortened to land on
// t_max. Leaving the field's domain ends the trace at the located exit point.
OrbitTrace integrate(const FlowField& field, const Vec& p0, const IntegratorConfig& config);

// One RK4 step of size h (reprojected for sphere models).
Vec rk4_step(const FlowField& field, const Vec& p, double h);

// Uniform RK4 to time t with ceil(|t| / step) equal steps (negative t flows
// backwards). Smooth in p and t, which shooting relies on.
Vec flow_to(const FlowField& field, const Vec& p, double t, double step);
// Points of the orbit of p at the uniform RK4 steps over [0, t].
std::vector<Vec> sample_orbit(const FlowField& field, const Vec& p, double t, double step);

struct TrapRegion {
  std::string name = "K";
  std::function<bool(const Vec&)> inside;
  std::function<bool(const Vec&)> on_entry_face;
  double horizon = 1e3;
};

struct ClassifyOptions {
  double ptol = 1e-8;
  double candidate_radius = 1e-2;
  int max_candidates = 3;
  int max_newton = 12;
  std::optional<TrapRegion> trap;
};

OrbitClass classify_orbit(const FlowField& field, const Vec& p0, const IntegratorConfig& config,
                          const ClassifyOptions& options = {});

struct PeriodicCluster {
  std::size_t representative = 0;  // seed index
  double period = 0.0;
  Vec point;
  std::vector<std::size_t> members;
};

struct CensusReport {
  std::string field;
  std::string model_id;
  double t_max = 0.0;
  double ptol = 0.0;
  double cluster_radius = 0.0;
  std::vector<Vec> seeds;
  std::vector<OrbitClass> orbits;  // seed order
  std::vector<PeriodicCluster> periodic;
  std::size_t count(OrbitTag tag) const;
};

struct CensusOptions {
  ClassifyOptions classify;
  double cluster_radius = 1e-4;
  int jobs = 0;  // <= 0: hardware concurrency
};

CensusReport classify_ensemble(const FlowField& field, std::span<const Vec> seeds, const IntegratorConfig& config,
                               const CensusOptions& options = {});

// Symmetric Hausdorff distance between two closed polylines (point to
// segment).
double hausdorff_distance(std::span<const Vec> a, std::span<const Vec> b);

// Header `t,x1..xm,alpha_residual,constraint_residual`.
void write_trace_csv(std::ostream& out, const OrbitTrace& trace);

// Uniform seeds on the model: the unit sphere for sphere models, the model's
// own sampler otherwise.
std::vector<Vec> random_seeds(const ContactModel& model, std::size_t count, std::uint64_t seed);

}  // namespace reeblab
