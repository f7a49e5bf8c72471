#include "reeblab/flow.hpp"

#include "reeblab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

namespace reeblab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kShootingFdStep = 1e-6;
constexpr double kMaxShootingStep = 0.1;

Vec project_if(const FlowField& field, const Vec& x) {
  if (field.on_sphere()) return x / x.norm();
  return x;
}

Vec rk4(const FlowField& f, const Vec& x, const Vec& k1, double h) {
  const Vec k2 = f(x + 0.5 * h * k1);
  const Vec k3 = f(x + 0.5 * h * k2);
  const Vec k4 = f(x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Fehlberg 4(5); returns the fifth-order solution and the error estimate.
Vec rkf45(const FlowField& f, const Vec& x, const Vec& k1, double h, double* err) {
  const Vec k2 = f(x + h * (k1 / 4.0));
  const Vec k3 = f(x + h * (3.0 / 32.0 * k1 + 9.0 / 32.0 * k2));
  const Vec k4 = f(x + h * (1932.0 / 2197.0 * k1 - 7200.0 / 2197.0 * k2 + 7296.0 / 2197.0 * k3));
  const Vec k5 = f(x + h * (439.0 / 216.0 * k1 - 8.0 * k2 + 3680.0 / 513.0 * k3 - 845.0 / 4104.0 * k4));
  const Vec k6 = f(x + h * (-8.0 / 27.0 * k1 + 2.0 * k2 - 3544.0 / 2565.0 * k3 + 1859.0 / 4104.0 * k4 -
                            11.0 / 40.0 * k5));
  if (err) {
    const Vec e = h * (1.0 / 360.0 * k1 - 128.0 / 4275.0 * k3 - 2197.0 / 75240.0 * k4 + 1.0 / 50.0 * k5 +
                       2.0 / 55.0 * k6);
    *err = e.cwiseAbs().maxCoeff();
  }
  return x + h * (16.0 / 135.0 * k1 + 6656.0 / 12825.0 * k3 + 28561.0 / 56430.0 * k4 - 9.0 / 50.0 * k5 +
                  2.0 / 55.0 * k6);
}

class Stepper {
 public:
  Stepper(const FlowField& field, const Vec& p0, const IntegratorConfig& config)
      : x(project_if(field, p0)), k1(field(x)), field_(field), config_(config), h_(config.step) {}

  // One accepted step, shortened so as not to pass t_end.
  void advance(double t_end) {
    prev_x = x;
    prev_k1 = k1;
    prev_t = t;
    for (;;) {
      const double remaining = t_end - t;
      const bool last = remaining <= h_ * (1.0 + 1e-9);
      const double hh = last ? remaining : h_;
      Vec next;
      if (config_.method == Method::rk4) {
        next = rk4(field_, x, k1, hh);
      } else {
        double err = 0.0;
        next = rkf45(field_, x, k1, hh, &err);
        const double factor = err > 0.0 ? std::clamp(0.9 * std::pow(config_.tolerance / err, 0.2), 0.2, 5.0) : 5.0;
        if (err > config_.tolerance) {
          h_ = hh * factor;
          if (h_ < config_.min_step) throw IntegrationError("step size underflow at t = " + std::to_string(t));
          continue;
        }
        if (!last) h_ = hh * factor;
      }
      x = config_.project ? project_if(field_, next) : next;
      t = last ? t_end : t + hh;
      k1 = field_(x);
      last_step = hh;
      return;
    }
  }

  // State at prev_t + theta * last_step, by one step of the same method.
  Vec partial(double theta) const {
    const double hh = theta * last_step;
    Vec y = config_.method == Method::rk4 ? rk4(field_, prev_x, prev_k1, hh) : rkf45(field_, prev_x, prev_k1, hh, nullptr);
    return config_.project ? project_if(field_, y) : y;
  }

  // Locates the domain boundary crossing inside the last step by bisection.
  std::pair<Vec, double> locate_exit() const {
    double lo = 0.0;
    double hi = 1.0;
    Vec at_hi = x;
    for (int it = 0; it < 60 && (hi - lo) * last_step > 1e-15; ++it) {
      const double mid = 0.5 * (lo + hi);
      const Vec y = partial(mid);
      if (field_.domain(y) > 0.0) {
        lo = mid;
      } else {
        hi = mid;
        at_hi = y;
      }
    }
    return {at_hi, prev_t + hi * last_step};
  }

  Vec x;
  Vec k1;
  double t = 0.0;
  Vec prev_x;
  Vec prev_k1;
  double prev_t = 0.0;
  double last_step = 0.0;

 private:
  const FlowField& field_;
  const IntegratorConfig& config_;
  double h_;
};

double alpha_residual(const FlowField& field, const Vec& x, const Vec& v) {
  return std::abs(field.model->alpha(x).dot(v) - 1.0);
}

bool monitors_alpha(const FlowField& field, const IntegratorConfig& config) {
  return config.monitor_alpha && field.reeb && field.model;
}

double closure(const FlowField& field, const Vec& q, double period, double step) {
  return (flow_to(field, q, period, step) - q).norm();
}

// Shooting for a periodic orbit near (q0, t0). On success fills the periodic
// fields of `out`.
bool refine_periodic(const FlowField& field, const Vec& q0, double t0, double step, const ClassifyOptions& opt,
                     OrbitClass& out) {
  const int m = static_cast<int>(q0.size());
  double period = t0;
  // Period alone: put the return point on the hyperplane through q0
  // orthogonal to the field.
  for (int it = 0; it < 6; ++it) {
    const Vec x = flow_to(field, q0, period, step);
    const Vec f = field(x);
    const double dt = f.dot(x - q0) / f.squaredNorm();
    period -= dt;
    if (!(period > 0.0) || std::abs(dt) < 1e-15 * period) break;
  }
  if (!(period > 0.0)) return false;
  double err = closure(field, q0, period, step);
  if (err <= opt.ptol) {
    out.tag = OrbitTag::periodic;
    out.period = period;
    out.residual = err;
    out.point = q0;
    out.newton_iterations = 0;
    return true;
  }

  // Newton on (q, T) with the phase condition f(q0) . (q - q0) = 0 and, on
  // spheres, |q|^2 = 1.
  const bool sphere = field.on_sphere();
  const int rows = m + 1 + (sphere ? 1 : 0);
  Vec fhat = field(q0);
  fhat /= fhat.norm();
  Vec q = q0;
  for (int it = 1; it <= opt.max_newton; ++it) {
    const Vec x = flow_to(field, q, period, step);
    Vec residual(rows);
    residual.head(m) = x - q;
    residual(m) = fhat.dot(q - q0);
    if (sphere) residual(m + 1) = 0.5 * (q.squaredNorm() - 1.0);
    Mat jac = Mat::Zero(rows, m + 1);
    for (int j = 0; j < m; ++j) {
      Vec dq = Vec::Zero(m);
      dq(j) = kShootingFdStep;
      const Vec fp = flow_to(field, q + dq, period, step);
      const Vec fm = flow_to(field, q - dq, period, step);
      jac.col(j).head(m) = (fp - fm) / (2.0 * kShootingFdStep);
      jac(j, j) -= 1.0;
      jac(m, j) = fhat(j);
      if (sphere) jac(m + 1, j) = q(j);
    }
    jac.col(m).head(m) = field(x);
    Vec delta = -Eigen::CompleteOrthogonalDecomposition<Mat>(jac).solve(residual);
    const double size = delta.norm();
    if (!std::isfinite(size)) return false;
    if (size > kMaxShootingStep) delta *= kMaxShootingStep / size;
    q = project_if(field, Vec(q + delta.head(m)));
    period += delta(m);
    if (!(period > 0.0)) return false;
    err = closure(field, q, period, step);
    if (err <= opt.ptol) {
      out.tag = OrbitTag::periodic;
      out.period = period;
      out.residual = err;
      out.point = q;
      out.newton_iterations = it;
      return true;
    }
  }
  return false;
}

}  // namespace

void IntegratorConfig::validate() const {
  if (!(t_max >= 0.0)) throw ModelError("t_max must be non-negative");
  if (!(step > 0.0)) throw ModelError("step must be positive");
  if (method == Method::rkf45 && !(tolerance > 0.0)) throw ModelError("tolerance must be positive");
  if (!(min_step > 0.0)) throw ModelError("min_step must be positive");
  if (record_every < 1) throw ModelError("record_every must be at least 1");
}

FlowField reeb_flow(const ContactModel& model) {
  FlowField f;
  f.name = model.name() + " reeb";
  f.model = std::make_shared<const ContactModel>(model);
  f.vector = reeb_vector_field(*f.model);
  f.reeb = true;
  return f;
}

FlowField hamiltonian_flow(const ContactModel& model, const ScalarField& h) {
  FlowField f;
  f.name = model.name() + " hamiltonian";
  f.model = std::make_shared<const ContactModel>(model);
  f.vector = hamiltonian_vector_field(*f.model, h);
  return f;
}

FlowField reversed(FlowField field) {
  field.vector = [v = std::move(field.vector)](const Vec& p) { return Vec(-v(p)); };
  field.name += " reversed";
  field.reeb = false;
  return field;
}

const char* to_string(OrbitTag tag) {
  switch (tag) {
    case OrbitTag::periodic:
      return "periodic";
    case OrbitTag::trapped:
      return "trapped";
    case OrbitTag::exits:
      return "exits";
    case OrbitTag::undetermined:
      return "undetermined";
  }
  return "undetermined";
}

double OrbitTrace::max_alpha_residual() const {
  double worst = 0.0;
  for (double r : alpha_residual)
    if (!std::isnan(r)) worst = std::max(worst, r);
  return worst;
}

double OrbitTrace::max_constraint_residual() const {
  double worst = 0.0;
  for (double r : constraint_residual) worst = std::max(worst, r);
  return worst;
}

OrbitTrace integrate(const FlowField& field, const Vec& p0, const IntegratorConfig& config) {
  config.validate();
  OrbitTrace trace;
  trace.model_id = field.model_id();
  Stepper s(field, p0, config);
  const bool alpha_on = monitors_alpha(field, config);
  auto record = [&](const Vec& x, const Vec& v, double t) {
    trace.times.push_back(t);
    trace.states.push_back(x);
    trace.alpha_residual.push_back(alpha_on ? alpha_residual(field, x, v) : kNaN);
    trace.constraint_residual.push_back(
        config.monitor_constraint && field.model ? field.model->constraint_residual(x) : 0.0);
  };
  record(s.x, s.k1, 0.0);
  while (s.t < config.t_max) {
    s.advance(config.t_max);
    ++trace.steps;
    if (field.domain && field.domain(s.x) <= 0.0) {
      const auto [x, t] = s.locate_exit();
      record(x, field(x), t);
      trace.classification.tag = OrbitTag::exits;
      trace.classification.exit_point = x;
      trace.classification.exit_time = t;
      trace.classification.t_max = config.t_max;
      return trace;
    }
    const double ar = alpha_on ? alpha_residual(field, s.x, s.k1) : 0.0;
    const bool final_step = s.t >= config.t_max;
    if (ar > config.alpha_threshold) {
      record(s.x, s.k1, s.t);
      trace.truncated = true;
      trace.truncation_reason = "alpha monitor exceeded at t = " + std::to_string(s.t);
      return trace;
    }
    if (final_step || trace.steps % static_cast<std::size_t>(config.record_every) == 0) record(s.x, s.k1, s.t);
  }
  trace.classification.t_max = config.t_max;
  if (config.monitor_volume && field.model && config.t_max > 0.0) {
    const int substeps = std::max(1, static_cast<int>(std::ceil(config.t_max / config.step)));
    trace.volume_ratio = contact_volume_ratio(*field.model, field.vector, trace.states.front(), config.t_max, substeps);
  }
  return trace;
}

Vec rk4_step(const FlowField& field, const Vec& p, double h) {
  return project_if(field, rk4(field, p, field(p), h));
}

Vec flow_to(const FlowField& field, const Vec& p, double t, double step) {
  Vec x = project_if(field, p);
  if (t == 0.0) return x;
  const int n = std::max(1, static_cast<int>(std::ceil(std::abs(t) / step)));
  const double h = t / n;
  for (int k = 0; k < n; ++k) x = project_if(field, rk4(field, x, field(x), h));
  return x;
}

std::vector<Vec> sample_orbit(const FlowField& field, const Vec& p, double t, double step) {
  Vec x = project_if(field, p);
  const int n = std::max(1, static_cast<int>(std::ceil(std::abs(t) / step)));
  const double h = t / n;
  std::vector<Vec> out;
  out.reserve(n + 1);
  out.push_back(x);
  for (int k = 0; k < n; ++k) {
    x = project_if(field, rk4(field, x, field(x), h));
    out.push_back(x);
  }
  return out;
}

namespace {

// Shooting can land on a multiple cover, e.g. a near-return of a torus orbit
// next to an exceptional circle converges onto that circle. Retry from the
// earliest close return along the converged orbit.
void reduce_period(const FlowField& field, double step, const ClassifyOptions& options, OrbitClass& out) {
  for (int pass = 0; pass < 4; ++pass) {
    const std::vector<Vec> line = sample_orbit(field, out.point, out.period, step);
    const double h = out.period / static_cast<double>(line.size() - 1);
    bool left = false;
    std::size_t best = 0;
    for (std::size_t k = 1; k + 1 < line.size(); ++k) {
      const double d = (line[k] - out.point).norm();
      if (!left) {
        left = d > 2.0 * options.candidate_radius;
        continue;
      }
      if (d < options.candidate_radius && d <= (line[k + 1] - out.point).norm()) {
        best = k;
        break;
      }
    }
    if (best == 0 || best * h > 0.9 * out.period) return;
    OrbitClass shorter = out;
    if (!refine_periodic(field, out.point, best * h, step, options, shorter) ||
        shorter.period >= out.period * (1.0 - 1e-9))
      return;
    shorter.note = "reduced from a multiple cover of period " + std::to_string(out.period);
    out = std::move(shorter);
  }
}

}  // namespace

OrbitClass classify_orbit(const FlowField& field, const Vec& p0, const IntegratorConfig& config,
                          const ClassifyOptions& options) {
  config.validate();
  OrbitClass out;
  out.t_max = config.t_max;
  Stepper s(field, p0, config);
  const Vec q0 = s.x;
  const bool alpha_on = monitors_alpha(field, config);

  const TrapRegion* trap = options.trap ? &*options.trap : nullptr;
  bool tracking = trap && trap->on_entry_face && trap->on_entry_face(q0);
  bool in_region = false;
  double t_in = 0.0;
  double t_end = config.t_max;

  bool left = false;
  int candidates = 0;
  double d1 = std::numeric_limits<double>::infinity();  // distance at the previous step
  double d2 = d1;                                        // and the one before
  double t1 = 0.0;
  double t2 = 0.0;

  while (s.t < t_end) {
    s.advance(t_end);
    if (field.domain && field.domain(s.x) <= 0.0) {
      const auto [x, t] = s.locate_exit();
      out.tag = OrbitTag::exits;
      out.exit_point = x;
      out.exit_time = t;
      return out;
    }
    if (alpha_on && alpha_residual(field, s.x, s.k1) > config.alpha_threshold) {
      out.note = "alpha monitor exceeded at t = " + std::to_string(s.t);
      return out;
    }
    if (tracking) {
      const bool inside = trap->inside(s.x);
      if (!in_region && inside) {
        in_region = true;
        t_in = s.t;
        t_end = std::max(t_end, t_in + trap->horizon);
      } else if (in_region && !inside) {
        tracking = false;
        in_region = false;
        t_end = config.t_max;
        out.note = "left " + trap->name + " at t = " + std::to_string(s.t);
      }
    }
    const double d = (s.x - q0).norm();
    if (!left && d > 2.0 * options.candidate_radius) left = true;
    if (left) {
      if (s.t <= config.t_max) out.closest_return = std::min(out.closest_return, d);
      if (candidates < options.max_candidates && d1 < options.candidate_radius && d1 <= d && d1 < d2 &&
          t1 <= config.t_max) {
        ++candidates;
        // Vertex of the parabola through the last three squared distances.
        double t0 = t1;
        const double a = d2 * d2;
        const double b = d1 * d1;
        const double c = d * d;
        const double denom = (t1 - t2) * (b - c) - (t1 - s.t) * (b - a);
        if (denom != 0.0 && std::isfinite(a)) {
          const double num = (t1 - t2) * (t1 - t2) * (b - c) - (t1 - s.t) * (t1 - s.t) * (b - a);
          const double v = t1 - 0.5 * num / denom;
          if (v > t2 && v < s.t) t0 = v;
        }
        if (refine_periodic(field, q0, t0, config.step, options, out)) {
          reduce_period(field, config.step, options, out);
          return out;
        }
        out.note = "shooting did not converge";
      }
    }
    d2 = d1;
    t2 = t1;
    d1 = d;
    t1 = s.t;
  }
  if (tracking && in_region && s.t - t_in >= trap->horizon * (1.0 - 1e-12)) {
    out.tag = OrbitTag::trapped;
    out.region = trap->name;
    out.horizon = trap->horizon;
    out.entry_time = t_in;
    return out;
  }
  if (out.note.empty()) out.note = "no closed orbit found up to t_max";
  return out;
}

std::size_t CensusReport::count(OrbitTag tag) const {
  return static_cast<std::size_t>(
      std::count_if(orbits.begin(), orbits.end(), [tag](const OrbitClass& c) { return c.tag == tag; }));
}

namespace {

double point_segment_distance(const Vec& p, const Vec& a, const Vec& b) {
  const Vec ab = b - a;
  const double len2 = ab.squaredNorm();
  double s = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return (p - a - s * ab).norm();
}

double point_polyline_distance(const Vec& p, std::span<const Vec> line) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = line.size();
  if (n == 1) return (p - line[0]).norm();
  for (std::size_t i = 0; i < n; ++i) best = std::min(best, point_segment_distance(p, line[i], line[(i + 1) % n]));
  return best;
}

double directed_hausdorff(std::span<const Vec> a, std::span<const Vec> b) {
  double worst = 0.0;
  for (const Vec& p : a) worst = std::max(worst, point_polyline_distance(p, b));
  return worst;
}

}  // namespace

double hausdorff_distance(std::span<const Vec> a, std::span<const Vec> b) {
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

CensusReport classify_ensemble(const FlowField& field, std::span<const Vec> seeds, const IntegratorConfig& config,
                               const CensusOptions& options) {
  config.validate();
  CensusReport report;
  report.field = field.name;
  report.model_id = field.model_id();
  report.t_max = config.t_max;
  report.ptol = options.classify.ptol;
  report.cluster_radius = options.cluster_radius;
  report.seeds.assign(seeds.begin(), seeds.end());
  report.orbits.resize(seeds.size());
  std::vector<std::vector<Vec>> lines(seeds.size());
  parallel_for(seeds.size(), options.jobs, [&](std::size_t i) {
    report.orbits[i] = classify_orbit(field, seeds[i], config, options.classify);
    const OrbitClass& c = report.orbits[i];
    if (c.tag == OrbitTag::periodic) lines[i] = sample_orbit(field, c.point, c.period, config.step);
  });

  // Greedy clustering in seed order keeps the result independent of the
  // worker schedule.
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (report.orbits[i].tag != OrbitTag::periodic) continue;
    bool placed = false;
    for (PeriodicCluster& cluster : report.periodic) {
      const auto& rep = lines[cluster.representative];
      // Cheap rejection: one point already too far away.
      if (point_polyline_distance(lines[i].front(), rep) >= options.cluster_radius) continue;
      if (hausdorff_distance(lines[i], rep) < options.cluster_radius) {
        cluster.members.push_back(i);
        // Keep the shortest period found for the orbit.
        if (report.orbits[i].period < cluster.period * (1.0 - 1e-9)) {
          cluster.period = report.orbits[i].period;
          cluster.point = report.orbits[i].point;
        }
        placed = true;
        break;
      }
    }
    if (!placed) {
      PeriodicCluster cluster;
      cluster.representative = i;
      cluster.period = report.orbits[i].period;
      cluster.point = report.orbits[i].point;
      cluster.members.push_back(i);
      report.periodic.push_back(std::move(cluster));
    }
  }
  return report;
}

void write_trace_csv(std::ostream& out, const OrbitTrace& trace) {
  const int m = trace.states.empty() ? 0 : static_cast<int>(trace.states.front().size());
  out << "t";
  for (int j = 1; j <= m; ++j) out << ",x" << j;
  out << ",alpha_residual,constraint_residual\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < trace.states.size(); ++i) {
    out << trace.times[i];
    for (int j = 0; j < m; ++j) out << ',' << trace.states[i](j);
    out << ',' << trace.alpha_residual[i] << ',' << trace.constraint_residual[i] << '\n';
  }
}

std::vector<Vec> random_seeds(const ContactModel& model, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const auto& sample = model.definition().sample;
  if (!sample) throw ModelError("model '" + model.name() + "' has no sampler");
  std::vector<Vec> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Vec u(model.ambient_dim());
    for (int j = 0; j < model.ambient_dim(); ++j) u(j) = uniform(rng);
    out.push_back(model.project(sample(u)));
  }
  return out;
}

}  // namespace reeblab
