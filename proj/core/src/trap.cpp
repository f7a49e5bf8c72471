#include "reeblab/trap.hpp"

#include "reeblab/parallel.hpp"
#include "smooth.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace reeblab {

TrapConstructionError::TrapConstructionError(const std::string& what, Vec point)
    : ModelError(what), point_(std::move(point)) {}

void TrapParams::validate() const {
  if (!(slope > 0.0 && slope < 1.0)) throw ModelError("slope must lie in (0, 1)");
  if (!(ball_radius > 0.0)) throw ModelError("ball_radius must be positive");
  if (!(drive > 0.0)) throw ModelError("drive must be positive");
  if (!(drive_max > 0.0 && drive_max <= 0.2)) throw ModelError("drive_max must lie in (0, 0.2]");
  if (!(core_height >= 0.5)) throw ModelError("core_height must be at least 1/2 (the height of K)");
  if (!(fall_height > 0.0)) throw ModelError("fall_height must be positive");
  if (!(tau_width > 0.0)) throw ModelError("tau_width must be positive");
}

namespace {

using detail::bump;
using detail::bump_derivative;

constexpr double kLow = 0.45;    // support of the profile in l
constexpr double kHigh = 1.5;
constexpr double kLeftWidth = 0.5;
constexpr double kRightWidth = 0.5;
constexpr double kDriveWidth = 0.3;  // support half-width of the cylinder term in l
constexpr int kNodes = 2100;
constexpr double kHalfPi = 0.5 * kPi;

// 5-point Gauss-Legendre on [a, b].
template <class F>
double gauss5(F f, double a, double b) {
  static constexpr std::array<double, 5> x = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                                              0.9061798459386640};
  static constexpr std::array<double, 5> w = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                              0.2369268850561891, 0.2369268850561891};
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 5; ++i) s += w[i] * f(c + h * x[i]);
  return s * h;
}

}  // namespace

// Decreasing G0(l) equal to 1/l off [kLow, kHigh], with G0'(1) = G0''(1) = 0
// and G0(1) = (1 + s) / 2. Its negative derivative is
//   D0 = (1 - b1) / l^2 + cL bL + cR bR,
// b1 a bump peaked at l = 1 and bL, bR bumps left and right of it; cL and cR
// fix G0(1) and the total integral. Values are tabulated and interpolated by
// cubic Hermite with the exact D0 as slope.
struct TrapModel::Profile {
  double c_left = 0.0;
  double c_right = 0.0;
  double h = (kHigh - kLow) / kNodes;
  std::vector<double> g;

  static double b1(double l) {
    return l >= 1.0 ? bump((l - 1.0) / kRightWidth) : bump((1.0 - l) / kLeftWidth);
  }
  static double b_left(double l) { return bump((l - 0.65) / 0.2); }
  static double b_right(double l) { return bump((l - 1.3) / 0.2); }

  double d0(double l) const {
    return (1.0 - b1(l)) / (l * l) + c_left * b_left(l) + c_right * b_right(l);
  }

  explicit Profile(double slope) {
    const double m = 0.5 * (1.0 + slope);
    auto integral = [this](auto f, double a, double b) {
      double s = 0.0;
      for (int i = 0; i < kNodes; ++i) {
        const double x0 = kLow + i * h;
        const double x1 = x0 + h;
        if (x1 <= a || x0 >= b) continue;
        s += gauss5(f, std::max(x0, a), std::min(x1, b));
      }
      return s;
    };
    const auto b1_weight = [](double l) { return b1(l) / (l * l); };
    const double i_right = integral(b1_weight, 1.0, kHigh);
    const double i_left = integral(b1_weight, kLow, 1.0);
    const double j_right = integral(b_right, 1.0, kHigh);
    const double j_left = integral(b_left, kLow, 1.0);
    c_right = (m - 1.0 + i_right) / j_right;
    c_left = (i_left + 1.0 - m) / j_left;
    if (c_right < 0.0) throw ModelError("slope too small for the trap profile");
    g.assign(kNodes + 1, 0.0);
    g[kNodes] = 1.0 / kHigh;
    for (int i = kNodes - 1; i >= 0; --i) {
      const double x0 = kLow + i * h;
      g[i] = g[i + 1] + gauss5([this](double l) { return d0(l); }, x0, x0 + h);
    }
  }

  // G0(l) - 1/l and its derivative; zero off (kLow, kHigh).
  double q(double l) const {
    if (l <= kLow || l >= kHigh) return 0.0;
    const double pos = (l - kLow) / h;
    const int i = std::min(kNodes - 1, static_cast<int>(pos));
    const double t = pos - i;
    const double x0 = kLow + i * h;
    const double m0 = -d0(x0) * h;
    const double m1 = -d0(x0 + h) * h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double g0 = (2 * t3 - 3 * t2 + 1) * g[i] + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * g[i + 1] +
                      (t3 - t2) * m1;
    return g0 - 1.0 / l;
  }
  double q_derivative(double l) const {
    if (l <= kLow || l >= kHigh) return 0.0;
    return 1.0 / (l * l) - d0(l);
  }

  // -(l - 1) bump((l - 1) / w): vanishes at l = 1 with slope -1.
  static double p(double l) { return -(l - 1.0) * bump((l - 1.0) / kDriveWidth); }
  static double p_derivative(double l) {
    const double x = (l - 1.0) / kDriveWidth;
    return -bump(x) - x * bump_derivative(x);
  }
};

namespace {

struct TrapTerms {
  double value;
  Vec gradient;
};

Vec vec5(double a, double b, double c, double d, double e) {
  Vec v(5);
  v << a, b, c, d, e;
  return v;
}

TrapTerms evaluate(const TrapModel::Profile& prof, const TrapParams& par, const Vec& p, bool want_gradient) {
  TrapTerms out{1.0, Vec::Zero(5)};
  const double s = par.slope;
  const double u1 = p(0) * p(0) + p(1) * p(1);
  const double u2 = p(2) * p(2) + p(3) * p(3);
  const double z = p(4);
  const double l = (u1 + s * u2) / (1.0 + s);
  const double zmax = par.core_height + par.fall_height;
  if (l <= kLow || l >= kHigh || std::abs(z) >= zmax) return out;
  const double tau = (u2 - u1) / l;
  if (std::abs(tau) >= par.tau_width) return out;

  const double a = bump(tau / par.tau_width);
  const double a_tau = bump_derivative(tau / par.tau_width) / par.tau_width;
  const double zs = (std::abs(z) - par.core_height) / par.fall_height;
  const double az = 1.0 - detail::smooth_step(zs);
  const double az_z = -detail::smooth_step_derivative(zs) / par.fall_height * (z < 0.0 ? -1.0 : 1.0);
  const double c = par.drive / par.drive_max;
  const double den = 1.0 + c * z * z;
  const double gz = par.drive * z * z / den;
  const double gz_z = 2.0 * par.drive * z / (den * den);
  const double psi = gz * az;
  const double psi_z = gz_z * az + gz * az_z;

  const double q = prof.q(l);
  const double pp = TrapModel::Profile::p(l);
  const double f = a * az * q + a * psi * pp;
  out.value = 1.0 + l * f;
  if (!want_gradient) return out;

  const double h_l = f + l * (a * az * prof.q_derivative(l) + a * psi * TrapModel::Profile::p_derivative(l));
  const double h_tau = l * (a_tau * az * q + a_tau * psi * pp);
  const double h_z = l * (a * az_z * q + a * psi_z * pp);
  const double h_u1 = h_l / (1.0 + s) + h_tau * (-1.0 - tau / (1.0 + s)) / l;
  const double h_u2 = h_l * s / (1.0 + s) + h_tau * (1.0 - tau * s / (1.0 + s)) / l;
  out.gradient = vec5(2 * p(0) * h_u1, 2 * p(1) * h_u1, 2 * p(2) * h_u2, 2 * p(3) * h_u2, h_z);
  return out;
}

bool in_k(const Vec& p, double z0) {
  const double r1 = std::hypot(p(0), p(1));
  const double r2 = std::hypot(p(2), p(3));
  return std::abs(r1 - 1.0) <= 0.5 && std::abs(r2 - 1.0) <= 0.5 && std::abs(p(4) - z0) <= 0.5;
}

Vec polar_point(double r1, double a1, double r2, double a2, double z) {
  return vec5(r1 * std::cos(a1), r1 * std::sin(a1), r2 * std::cos(a2), r2 * std::sin(a2), z);
}

FlowField box_field(const ContactModel& model, const ScalarField& h, double radius) {
  FlowField f = hamiltonian_flow(model, h);
  f.name = "trap";
  f.domain = [radius](const Vec& p) {
    const double rr = p(0) * p(0) + p(1) * p(1) + p(2) * p(2) + p(3) * p(3);
    return std::min(radius - std::abs(p(4)), radius * radius - rr);
  };
  return f;
}

TrapRegion k_region() {
  TrapRegion k;
  k.name = "K";
  k.inside = [](const Vec& p) { return in_k(p, 0.0); };
  k.on_entry_face = [](const Vec& p) { return in_k(p, 0.0) && std::abs(p(4) + 0.5) <= 1e-12; };
  k.horizon = 1e3;
  return k;
}

}  // namespace

Vec TrapModel::torus_point(double phi1, double phi2) { return polar_point(1.0, phi1, 1.0, phi2, 0.0); }

Vec TrapModel::torus_field(const Vec& p) const {
  return vec5(-p(1), p(0), -slope() * p(3), slope() * p(2), 0.0);
}

double TrapModel::torus_distance(const Vec& p) {
  const double r1 = std::hypot(p(0), p(1));
  const double r2 = std::hypot(p(2), p(3));
  return std::sqrt((r1 - 1.0) * (r1 - 1.0) + (r2 - 1.0) * (r2 - 1.0) + p(4) * p(4));
}

TrapModel build_trap(const TrapParams& params) {
  params.validate();
  auto prof = std::make_shared<const TrapModel::Profile>(params.slope);
  TrapModel t;
  t.params_ = params;
  t.model_ = std::make_shared<const ContactModel>(r5_standard());
  t.h_ = ScalarField([prof, params](const Vec& p) { return evaluate(*prof, params, p, false).value; },
                     [prof, params](const Vec& p) { return evaluate(*prof, params, p, true).gradient; });
  t.field_ = box_field(*t.model_, t.h_, params.ball_radius);
  t.region_ = k_region();

  const double r = params.ball_radius;
  // Positivity on a grid of the flow box.
  double lowest = std::numeric_limits<double>::infinity();
  Vec lowest_at;
  const int n = 30;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j)
      for (int k = 0; k <= n; ++k) {
        const Vec p = polar_point(r * i / n, 0.1 * k, r * j / n, 0.2 * i, -r + 2.0 * r * k / n);
        const double v = t.h_(p);
        if (v < lowest) {
          lowest = v;
          lowest_at = p;
        }
      }
  if (!(lowest > 0.0)) throw TrapConstructionError("H is not positive (min " + std::to_string(lowest) + ")", lowest_at);
  // H = 1 on and outside the ball.
  for (double scale : {1.0, 1.5}) {
    for (int i = 0; i < 24; ++i)
      for (int j = 0; j <= 12; ++j) {
        const double theta = kPi * j / 12.0;  // polar angle from the z axis
        const double w = kHalfPi * ((i % 6) + 0.5) / 6.0;
        const double rho = scale * r * std::sin(theta);
        const Vec p = polar_point(rho * std::cos(w), 0.3 * i, rho * std::sin(w), 0.7 * i, scale * r * std::cos(theta));
        if (std::abs(t.h_(p) - 1.0) > 1e-12)
          throw TrapConstructionError("H differs from 1 outside the ball of radius " + std::to_string(r), p);
      }
  }
  // The linear flow on T.
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) {
      const Vec p = TrapModel::torus_point(kTwoPi * i / 16.0, kTwoPi * j / 16.0);
      const double err = (t.field_(p) - t.torus_field(p)).cwiseAbs().maxCoeff();
      if (err > 1e-8)
        throw TrapConstructionError("field on the Clifford torus is not the linear flow (error " +
                                        std::to_string(err) + ")",
                                    p);
    }
  return t;
}

TrapModel flat_trap(const TrapParams& params) {
  params.validate();
  TrapModel t;
  t.params_ = params;
  t.flat_ = true;
  t.model_ = std::make_shared<const ContactModel>(r5_standard());
  t.h_ = ScalarField::constant(1.0);
  t.field_ = box_field(*t.model_, t.h_, params.ball_radius);
  t.region_ = k_region();
  return t;
}

TrapReport verify_trap_axioms(const TrapModel& trap, const TrapCheckOptions& opt) {
  TrapReport rep;
  rep.tube = opt.tube;
  const FlowField& f = trap.field();
  const double r = trap.params().ball_radius;
  TrapRegion k = trap.region();
  k.horizon = opt.horizon;

  // (a) no periodic orbit from the seed grid.
  std::vector<Vec> seeds;
  const int n = opt.seed_grid;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int m = 0; m < n; ++m)
        seeds.push_back(polar_point(0.2 + 1.6 * (i + 0.5) / n, 0.4 * m, 0.2 + 1.6 * (j + 0.5) / n, 0.9 * i,
                                    -2.0 + 2.5 * m / std::max(1, n - 1)));
  rep.seeds = seeds.size();
  IntegratorConfig cfg;
  cfg.t_max = opt.horizon;
  cfg.step = opt.step;
  ClassifyOptions copt;
  copt.trap = k;
  std::vector<OrbitClass> classes(seeds.size());
  parallel_for(seeds.size(), opt.jobs, [&](std::size_t i) { classes[i] = classify_orbit(f, seeds[i], cfg, copt); });
  rep.aperiodic_ok = true;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    switch (classes[i].tag) {
      case OrbitTag::periodic:
        rep.aperiodic_ok = false;
        if (!rep.periodic_witness) rep.periodic_witness = seeds[i];
        break;
      case OrbitTag::exits:
        if (classes[i].exit_point(4) >= r - 1e-6) ++rep.exits_top;
        break;
      case OrbitTag::trapped:
        ++rep.trapped;
        break;
      case OrbitTag::undetermined:
        ++rep.undetermined;
        break;
    }
  }

  // (b) an entry-face seed confined to K for the horizon.
  for (const auto& [a1, a2] : std::vector<std::pair<double, double>>{{0.0, 0.0}, {1.0, 2.0}, {2.5, 4.0}}) {
    const Vec seed = polar_point(1.0, a1, 1.0, a2, -0.5);
    IntegratorConfig c = cfg;
    c.record_every = 10;
    const OrbitTrace tr = integrate(f, seed, c);
    bool confined = !tr.truncated && tr.times.back() >= opt.horizon * (1.0 - 1e-12);
    for (const Vec& x : tr.states) confined = confined && k.inside(x);
    if (confined) {
      rep.certificate = TrapCertificate{seed, opt.horizon, k.name, TrapModel::torus_distance(tr.final_state())};
      break;
    }
  }
  rep.certificate_ok = rep.certificate.has_value();

  // (c) X = d/dz on the boundary of the flow box.
  Vec ez = Vec::Zero(5);
  ez(4) = 1.0;
  const int nb = 12;
  auto probe = [&](const Vec& p) {
    const double err = (f(p) - ez).cwiseAbs().maxCoeff();
    if (err >= rep.flow_box_error) {
      rep.flow_box_error = err;
      rep.flow_box_witness = p;
    }
  };
  for (int i = 0; i <= nb; ++i)
    for (int j = 0; j <= nb; ++j) {
      const double w = kHalfPi * i / nb;
      const double rho = r * j / nb;
      for (double z : {-r, r}) probe(polar_point(rho * std::cos(w), 0.5 * j, rho * std::sin(w), 0.3 * i, z));
      probe(polar_point(r * std::cos(w), 0.5 * j, r * std::sin(w), 0.3 * i, -r + 2.0 * r * j / nb));
    }
  rep.flow_box_ok = rep.flow_box_error <= 1e-9;

  // (d) dz(X) >= delta off the tube around T.
  const int g = opt.rise_grid;
  std::vector<double> rise(static_cast<std::size_t>(g) * g * g, std::numeric_limits<double>::infinity());
  std::vector<Vec> where(rise.size());
  parallel_for(rise.size(), opt.jobs, [&](std::size_t idx) {
    const int i = static_cast<int>(idx / (g * g));
    const int j = static_cast<int>((idx / g) % g);
    const int m = static_cast<int>(idx % g);
    const Vec p = polar_point(2.2 * i / (g - 1), 0.37 * j, 2.2 * j / (g - 1), 0.61 * m, -2.0 + 4.0 * m / (g - 1));
    where[idx] = p;
    if (TrapModel::torus_distance(p) < opt.tube) return;
    rise[idx] = f(p)(4);
  });
  const auto it = std::min_element(rise.begin(), rise.end());
  rep.delta = *it;
  rep.rise_witness = where[static_cast<std::size_t>(it - rise.begin())];
  rep.rise_ok = rep.delta >= opt.min_rise;
  return rep;
}

// --- plug --------------------------------------------------------------------

Vec PlugModel::mirror(const Vec& p) {
  Vec q = p;
  q(4) = -q(4);
  return q;
}

PlugModel double_to_plug(const TrapModel& trap, double shift, double height) {
  return double_to_plug(trap, trap, shift, height);
}

PlugModel double_to_plug(const TrapModel& lower, const TrapModel& upper, double shift, double height) {
  if (!(shift > 0.0 && height > shift)) throw ModelError("plug needs 0 < shift < height");
  PlugModel plug{lower, upper, shift, height, {}, 0.0};
  const VectorFieldFn lo = lower.field().vector;
  const VectorFieldFn up = upper.field().vector;
  auto half = [shift](const VectorFieldFn& v, const Vec& p) {
    Vec q = p;
    q(4) += shift;
    return v(q);
  };
  plug.field.name = "plug";
  plug.field.model = std::make_shared<const ContactModel>(lower.model());
  plug.field.vector = [lo, up, half](const Vec& p) {
    if (p(4) < 0.0) return half(lo, p);
    Vec v = half(up, PlugModel::mirror(p));
    v.head(4) = -v.head(4);
    return v;
  };
  const double radius = lower.params().ball_radius;
  plug.field.domain = [radius, height](const Vec& p) {
    const double rr = p(0) * p(0) + p(1) * p(1) + p(2) * p(2) + p(3) * p(3);
    return std::min(height + 1.0 - std::abs(p(4)), radius * radius - rr);
  };

  // Both halves must be d/dz where they meet.
  Vec ez = Vec::Zero(5);
  ez(4) = 1.0;
  for (int i = 0; i <= 10; ++i)
    for (int j = 0; j <= 10; ++j) {
      const Vec p = polar_point(0.25 * i, 0.3 * j, 0.25 * j, 0.7 * i, 0.0);
      Vec below = half(lo, p);
      Vec above = half(up, p);
      above.head(4) = -above.head(4);
      plug.gluing_discrepancy = std::max(
          {plug.gluing_discrepancy, (below - ez).cwiseAbs().maxCoeff(), (above - ez).cwiseAbs().maxCoeff()});
    }
  if (plug.gluing_discrepancy > 1e-10)
    throw ModelError("plug halves do not glue: |X - d/dz| = " + std::to_string(plug.gluing_discrepancy) +
                     " on z = 0");
  return plug;
}

const char* to_string(PlugOutcome outcome) {
  switch (outcome) {
    case PlugOutcome::trapped:
      return "trapped";
    case PlugOutcome::matched:
      return "matched";
    case PlugOutcome::mismatched:
      return "mismatched";
    case PlugOutcome::undetermined:
      return "undetermined";
  }
  return "?";
}

std::vector<Vec> PlugGrid::points(double height) const {
  std::vector<Vec> out;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double r1 = n == 1 ? r_min : r_min + (r_max - r_min) * i / (n - 1);
      const double r2 = n == 1 ? r_min : r_min + (r_max - r_min) * j / (n - 1);
      out.push_back(polar_point(r1, phi1, r2, phi2, -height));
    }
  return out;
}

namespace {

// Locates where z(x) crosses level within one RK4 step of size h from x.
Vec locate_level(const FlowField& f, const Vec& x, double h, double level, double* theta_out) {
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (rk4_step(f, x, mid * h)(4) < level) lo = mid;
    else hi = mid;
  }
  *theta_out = hi;
  return rk4_step(f, x, hi * h);
}

PlugEntry run_entry(const PlugModel& plug, const Vec& entry, double horizon, double tol, double step) {
  PlugEntry e;
  e.entry = entry;
  const FlowField& f = plug.field;
  Vec x = entry;
  double t = 0.0;
  bool inside = false;
  double t_in = 0.0;
  const double limit_without_k = horizon + 4.0 * plug.height;
  while (true) {
    const bool in = in_k(x, -plug.shift);
    if (in && !inside) t_in = t;
    inside = in;
    if (inside && t - t_in >= horizon) {
      e.outcome = PlugOutcome::trapped;
      e.exit_time = t;
      return e;
    }
    if (!inside && t >= limit_without_k) return e;
    const Vec next = rk4_step(f, x, step);
    if (next(4) >= plug.height) {
      double theta = 1.0;
      e.exit = locate_level(f, x, step, plug.height, &theta);
      e.exit_time = t + theta * step;
      e.mismatch = (e.exit.head(4) - entry.head(4)).norm();
      e.outcome = e.mismatch <= tol ? PlugOutcome::matched : PlugOutcome::mismatched;
      return e;
    }
    if (f.domain(next) <= 0.0) {
      e.exit = next;
      e.mismatch = std::numeric_limits<double>::infinity();
      e.outcome = PlugOutcome::mismatched;
      return e;
    }
    x = next;
    t += step;
  }
}

}  // namespace

PlugReport verify_plug_matching(const PlugModel& plug, std::span<const Vec> entries, double horizon, double tol,
                                double step, int jobs) {
  PlugReport rep;
  rep.tolerance = tol;
  rep.entries.resize(entries.size());
  parallel_for(entries.size(), jobs,
               [&](std::size_t i) { rep.entries[i] = run_entry(plug, entries[i], horizon, tol, step); });
  for (const PlugEntry& e : rep.entries) {
    switch (e.outcome) {
      case PlugOutcome::trapped:
        ++rep.trapped;
        break;
      case PlugOutcome::matched:
        ++rep.matched;
        rep.max_mismatch = std::max(rep.max_mismatch, e.mismatch);
        break;
      case PlugOutcome::mismatched:
        ++rep.mismatched;
        rep.max_mismatch = std::max(rep.max_mismatch, e.mismatch);
        if (!rep.witness) rep.witness = e.entry;
        break;
      case PlugOutcome::undetermined:
        ++rep.undetermined;
        if (!rep.witness) rep.witness = e.entry;
        break;
    }
  }
  return rep;
}

Vec plug_trapped_entry(const PlugModel& plug, double phi1, double phi2, double step) {
  const FlowField back = reversed(plug.field);
  Vec x = polar_point(1.0, phi1, 1.0, phi2, -plug.shift - 0.5);
  for (int it = 0; it < 10000000; ++it) {
    const Vec next = rk4_step(back, x, step);
    if (next(4) <= -plug.height) {
      // z decreases along the reversed field.
      double lo = 0.0;
      double hi = 1.0;
      for (int k = 0; k < 60; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (rk4_step(back, x, mid * step)(4) > -plug.height) lo = mid;
        else hi = mid;
      }
      return rk4_step(back, x, hi * step);
    }
    x = next;
  }
  throw ModelError("backward orbit from the trapped cylinder does not reach the entry face");
}

}  // namespace reeblab
