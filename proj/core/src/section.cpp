#include "reeblab/section.hpp"

#include "reeblab/parallel.hpp"
#include "smooth.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace reeblab {

namespace {

Mat2 quarter_turn() {
  Mat2 j;
  j << 0.0, -1.0, 1.0, 0.0;
  return j;
}

using detail::smooth_step;
using detail::smooth_step_derivative;

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

Vec sphere_sample(const Vec& u) {
  Vec p(4);
  for (int k = 0; k < 2; ++k) {
    const double rad = std::sqrt(-2.0 * std::log(1.0 - u(2 * k)));
    p(2 * k) = rad * std::cos(kTwoPi * u(2 * k + 1));
    p(2 * k + 1) = rad * std::sin(kTwoPi * u(2 * k + 1));
  }
  return p / p.norm();
}

}  // namespace

// --- disc maps ---------------------------------------------------------------

double RadialTwist::angle(double rho) const {
  const double t = rho / radius;
  if (t >= 1.0) return 0.0;
  if (t <= plateau) return amplitude;
  return amplitude * (1.0 - smooth_step((t - plateau) / (1.0 - plateau)));
}

double RadialTwist::angle_derivative(double rho) const {
  const double t = rho / radius;
  if (t >= 1.0 || t <= plateau) return 0.0;
  return -amplitude * smooth_step_derivative((t - plateau) / (1.0 - plateau)) / ((1.0 - plateau) * radius);
}

Vec2 RadialTwist::apply(const Vec2& z, bool inverse) const {
  const Vec2 u = z - center;
  const double rho = u.norm();
  if (rho >= radius) return z;
  const double theta = inverse ? -angle(rho) : angle(rho);
  return center + rotation2(theta) * u;
}

Mat2 RadialTwist::jacobian(const Vec2& z, bool inverse) const {
  const Vec2 u = z - center;
  const double rho = u.norm();
  if (rho >= radius) return Mat2::Identity();
  const double sign = inverse ? -1.0 : 1.0;
  const Mat2 rot = rotation2(sign * angle(rho));
  const double dtheta = sign * angle_derivative(rho);
  if (dtheta == 0.0) return rot;
  return rot + (quarter_turn() * rot * u) * (dtheta / rho * u).transpose();
}

Vec2 Conjugator::apply(const Vec2& z) const {
  Vec2 w = z;
  for (const RadialTwist& t : twists) w = t.apply(w);
  return w;
}

Vec2 Conjugator::inverse(const Vec2& z) const {
  Vec2 w = z;
  for (auto it = twists.rbegin(); it != twists.rend(); ++it) w = it->apply(w, true);
  return w;
}

Mat2 Conjugator::inverse_jacobian(const Vec2& z) const {
  Mat2 jac = Mat2::Identity();
  Vec2 w = z;
  for (auto it = twists.rbegin(); it != twists.rend(); ++it) {
    jac = it->jacobian(w, true) * jac;
    w = it->apply(w, true);
  }
  return jac;
}

double Conjugator::support_radius() const {
  double r = 0.0;
  for (const RadialTwist& t : twists) r = std::max(r, t.center.norm() + t.radius);
  return r;
}

DiscMap DiscMap::rotation(double angle) {
  DiscMap m;
  m.kind_ = Kind::rigid_rotation;
  m.angle_ = angle;
  m.description_ = "rotation by " + std::to_string(angle);
  return m;
}

DiscMap DiscMap::conjugated(Conjugator phi, int p, int q) {
  if (q <= 0) throw ModelError("rotation denominator must be positive");
  DiscMap m;
  m.kind_ = Kind::conjugated_rotation;
  m.p_ = p;
  m.q_ = q;
  m.angle_ = kTwoPi * p / q;
  m.description_ = "conjugated rotation " + std::to_string(p) + "/" + std::to_string(q) + " (" +
                   std::to_string(phi.twists.size()) + " twists)";
  m.phi_ = std::move(phi);
  return m;
}

DiscMap DiscMap::flow(std::string description, std::function<Vec2(const Vec2&)> evaluator) {
  DiscMap m;
  m.kind_ = Kind::hamiltonian_flow;
  m.eval_ = std::move(evaluator);
  m.description_ = std::move(description);
  return m;
}

Vec2 DiscMap::operator()(const Vec2& z) const {
  switch (kind_) {
    case Kind::rigid_rotation:
      return rotation2(angle_) * z;
    case Kind::conjugated_rotation:
      return phi_.apply(rotation2(angle_) * phi_.inverse(z));
    case Kind::hamiltonian_flow:
      return eval_(z);
  }
  return z;
}

Mat2 DiscMap::jacobian(const Vec2& z, double h) const {
  if (kind_ == Kind::rigid_rotation) return rotation2(angle_);
  if (kind_ == Kind::conjugated_rotation) {
    // D phi(R w) R D phi^{-1}(z) with w = phi^{-1}(z).
    Vec2 y = rotation2(angle_) * phi_.inverse(z);
    Mat2 forward = Mat2::Identity();
    for (const RadialTwist& t : phi_.twists) {
      forward = t.jacobian(y) * forward;
      y = t.apply(y);
    }
    return forward * rotation2(angle_) * phi_.inverse_jacobian(z);
  }
  // Five-point stencil: the central difference alone leaves an O(h^2) bias
  // comparable to the area tolerance on the twisted stage maps.
  Mat2 jac;
  for (int k = 0; k < 2; ++k) {
    Vec2 dz = Vec2::Zero();
    dz(k) = h;
    const Vec2 near = (*this)(z + dz) - (*this)(z - dz);
    const Vec2 far = (*this)(z + 2.0 * dz) - (*this)(z - 2.0 * dz);
    jac.col(k) = (8.0 * near - far) / (12.0 * h);
  }
  return jac;
}

double DiscMap::area_defect(int n, double h, double max_radius) const {
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Vec2 z(-1.0 + (2.0 * i + 1.0) / n, -1.0 + (2.0 * j + 1.0) / n);
      if (z.norm() > max_radius) continue;
      worst = std::max(worst, std::abs(jacobian(z, h).determinant() - 1.0));
    }
  }
  return worst;
}

std::pair<int, int> convergent(double x, int k) {
  if (k < 0 || k > 40) throw ModelError("invalid convergent index " + std::to_string(k));
  long long p_prev = 1;
  long long q_prev = 0;
  double a = std::floor(x);
  long long p = static_cast<long long>(a);
  long long q = 1;
  double frac = x - a;
  for (int i = 1; i <= k; ++i) {
    if (frac < 1e-12) throw ModelError("continued fraction terminates before index " + std::to_string(k));
    const double y = 1.0 / frac;
    a = std::floor(y);
    frac = y - a;
    const long long ai = static_cast<long long>(a);
    const long long pn = ai * p + p_prev;
    const long long qn = ai * q + q_prev;
    p_prev = p;
    q_prev = q;
    p = pn;
    q = qn;
    if (q > 1000000000LL) throw ModelError("convergent denominator overflow at index " + std::to_string(k));
  }
  return {static_cast<int>(p), static_cast<int>(q)};
}

double fk_boundary_width(int nu) { return std::ldexp(1.0, -nu - 2); }

DiscMap fayad_katok_stage(int nu, const FkParams& params) {
  if (nu < 0) throw ModelError("stage index must be non-negative");
  const auto [p, q] = convergent(params.target, nu + 2);
  const double delta = fk_boundary_width(nu);
  Conjugator phi;
  for (int k = 0; k < nu; ++k) {
    const double at = kTwoPi * k / nu + 0.5;
    RadialTwist t;
    t.center = params.center_radius * Vec2(std::cos(at), std::sin(at));
    t.radius = params.twist_radius;
    t.amplitude = (k % 2 == 0 ? 1.0 : -1.0) * params.amplitude;
    // 0 stays fixed and the boundary annulus untouched.
    if (t.center.norm() <= t.radius) throw ModelError("twist support must not contain the origin");
    if (t.center.norm() + t.radius >= 1.0 - delta) throw ModelError("twist support reaches the boundary annulus");
    phi.twists.push_back(t);
  }
  return DiscMap::conjugated(std::move(phi), p, q);
}

// --- suspensions -------------------------------------------------------------

FlowField SuspensionModel::reeb() const {
  FlowField f = reeb_flow(model);
  f.name = "suspension reeb";
  return f;
}

SuspensionModel make_suspension(ScalarField h, std::optional<Collar> collar) {
  double lowest = std::numeric_limits<double>::infinity();
  double boundary_sum = 0.0;
  int boundary_count = 0;
  std::vector<double> boundary_values;
  for (int is = 0; is < 8; ++is) {
    const double s = kTwoPi * is / 8.0;
    for (int ir = 0; ir <= 20; ++ir) {
      const double r = ir / 20.0;
      for (int ip = 0; ip < 32; ++ip) {
        const double phi = kTwoPi * ip / 32.0;
        const double v = h(vec3(s, r * std::cos(phi), r * std::sin(phi)));
        lowest = std::min(lowest, v);
        if (ir == 20) {
          boundary_values.push_back(v);
          boundary_sum += v;
          ++boundary_count;
        }
      }
    }
  }
  if (!(lowest > 0.0))
    throw ModelError("suspension Hamiltonian must be positive on the closed disc (min " + std::to_string(lowest) +
                     "); in particular b = 0 is excluded");
  ContactModel model = suspension_form(h);
  const int b = static_cast<int>(std::lround(-boundary_sum / boundary_count));
  double defect = 0.0;
  for (double v : boundary_values) defect = std::max(defect, std::abs(v + b));
  return SuspensionModel{std::move(model), std::move(h), b, defect, collar, std::nullopt};
}

SuspensionModel twist_suspension(double c, double a) {
  return make_suspension(twist_hamiltonian(c, a), Collar{0.0, c, a});
}

SuspensionModel suspend(const DiscMap& map, int n_offset) {
  if (map.kind() == DiscMap::Kind::hamiltonian_flow)
    throw ModelError("only rotations and conjugated rotations can be suspended");
  // Rotation by angle = time-2pi flow of a r^2 with a = -angle / 2pi.
  const double a = -map.angle() / kTwoPi;
  const Conjugator phi = map.conjugator();
  auto build = [&](int n) {
    const double c = n - a;
    ScalarField h;
    if (phi.twists.empty()) {
      h = twist_hamiltonian(c, a);
    } else {
      h = ScalarField(
          [phi, c, a](const Vec& p) {
            const Vec2 w = phi.inverse(Vec2(p(1), p(2)));
            return c + a * w.squaredNorm();
          },
          [phi, a](const Vec& p) {
            const Vec2 z(p(1), p(2));
            const Vec2 w = phi.inverse(z);
            const Vec2 g = 2.0 * a * (phi.inverse_jacobian(z).transpose() * w);
            return vec3(0.0, g(0), g(1));
          });
    }
    SuspensionModel s = make_suspension(h, Collar{phi.support_radius(), c, a});
    s.prescribed = map;
    return s;
  };
  if (n_offset > 0) return build(n_offset);
  for (int n = 1; n <= 64; ++n) {
    try {
      return build(n);
    } catch (const ContactConditionError&) {
    } catch (const ModelError&) {
    }
  }
  throw ModelError("no offset up to 64 makes the suspension contact");
}

Vec2 hamiltonian_oracle(const SuspensionModel& susp, const Vec2& z, double step) {
  const int n = std::max(1, static_cast<int>(std::ceil(kTwoPi / step)));
  const double h = kTwoPi / n;
  auto v = [&](double s, const Vec2& w) {
    const Vec g = susp.h.gradient(vec3(s, w(0), w(1)));
    return Vec2(0.5 * g(2), -0.5 * g(1));
  };
  Vec2 w = z;
  for (int k = 0; k < n; ++k) {
    const double s = k * h;
    const Vec2 k1 = v(s, w);
    const Vec2 k2 = v(s + 0.5 * h, w + 0.5 * h * k1);
    const Vec2 k3 = v(s + 0.5 * h, w + 0.5 * h * k2);
    const Vec2 k4 = v(s + h, w + h * k3);
    w += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return w;
}

// --- sections ----------------------------------------------------------------

SectionSpec solid_torus_section(double s0) {
  SectionSpec sec;
  sec.name = "solid-torus disc s = " + std::to_string(s0);
  sec.phase = [](const Vec& p) { return p(0); };
  sec.phase_rate = [](const Vec&, const Vec& v) { return v(0); };
  sec.to_disc = [](const Vec& p) { return Vec2(p(1), p(2)); };
  sec.from_disc = [s0](const Vec2& z) { return vec3(s0, z(0), z(1)); };
  sec.phase0 = s0;
  sec.boundary = BoundaryKind::invariant_torus;
  sec.boundary_point = [s0](double t) { return vec3(s0, std::cos(t), std::sin(t)); };
  sec.boundary_distance = [](const Vec& p) { return std::abs(std::hypot(p(1), p(2)) - 1.0); };
  return sec;
}

Crossing first_crossing(const FlowField& field, const SectionSpec& section, const Vec& p, double t_max, double step) {
  const double dir = t_max < 0.0 ? -1.0 : 1.0;
  const FlowField f = dir > 0.0 ? field : reversed(field);
  const double horizon = std::abs(t_max);
  const double ph0 = section.phase(p);
  // Signed phase still to travel, along the direction of motion.
  const double off = wrap_angle(dir * (section.phase0 - ph0));
  double target = off > 1e-9 ? off : off + kTwoPi;

  Crossing out;
  Vec x = p;
  double acc = 0.0;  // unwrapped phase travelled, times dir
  double t = 0.0;
  while (t < horizon) {
    const double h = std::min(step, horizon - t);
    const Vec next = rk4_step(f, x, h);
    const double ph = section.phase(x);
    const double next_acc = acc + dir * wrap_angle(section.phase(next) - ph);
    if (next_acc >= target) {
      auto g = [&](double theta, Vec* y) {
        *y = rk4_step(f, x, theta * h);
        return acc + dir * wrap_angle(section.phase(*y) - ph) - target;
      };
      // Bracket by bisection, then polish with Newton in time.
      double lo = 0.0;
      double hi = 1.0;
      Vec y;
      for (int it = 0; it < 30; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid, &y) < 0.0) lo = mid;
        else hi = mid;
      }
      double theta = 0.5 * (lo + hi);
      double gv = g(theta, &y);
      for (int it = 0; it < 8; ++it) {
        const double rate = dir * section.phase_rate(y, f(y)) * h;
        if (rate <= 0.0) break;
        const double dtheta = gv / rate;
        theta -= dtheta;
        gv = g(theta, &y);
        if (std::abs(dtheta * h) <= section.event_tolerance) break;
      }
      out.found = true;
      out.point = y;
      out.time = dir * (t + theta * h);
      out.residual = std::abs(gv);
      return out;
    }
    x = next;
    acc = next_acc;
    t += h;
  }
  return out;
}

ReturnPoint return_map(const FlowField& field, const SectionSpec& section, const Vec2& z, double t_max, double step) {
  const Vec p = section.from_disc(z);
  const Crossing c = first_crossing(field, section, p, t_max, step);
  if (!c.found)
    throw SectionError("recurrence failure: no return to " + section.name + " within t = " + std::to_string(t_max) +
                       " from (" + std::to_string(z(0)) + ", " + std::to_string(z(1)) + ")");
  return ReturnPoint{section.to_disc(c.point), c.time, c.residual};
}

DiscMap return_disc_map(const FlowField& field, const SectionSpec& section, double t_max, double step) {
  return DiscMap::flow("return map of " + field.name + " on " + section.name,
                       [field, section, t_max, step](const Vec2& z) {
                         return return_map(field, section, z, t_max, step).image;
                       });
}

std::vector<ReturnSample> return_map_grid(const FlowField& field, const SectionSpec& section,
                                          std::span<const Vec2> points, double t_max, double step, int jobs) {
  std::vector<ReturnSample> out(points.size());
  parallel_for(points.size(), jobs, [&](std::size_t i) {
    out[i] = ReturnSample{points[i], return_map(field, section, points[i], t_max, step)};
  });
  return out;
}

void write_return_csv(std::ostream& out, std::span<const ReturnSample> samples) {
  out << "r,phi,r',phi',return_time\n" << std::setprecision(17);
  for (const ReturnSample& s : samples) {
    out << s.z.norm() << ',' << std::atan2(s.z(1), s.z(0)) << ',' << s.ret.image.norm() << ','
        << std::atan2(s.ret.image(1), s.ret.image(0)) << ',' << s.ret.time << '\n';
  }
}

double rotation_number(const std::function<Vec2(const Vec2&)>& map, Vec2 z, int iterates) {
  double total = 0.0;
  for (int k = 0; k < iterates; ++k) {
    const Vec2 w = map(z);
    double d = std::fmod(std::atan2(w(1), w(0)) - std::atan2(z(1), z(0)), kTwoPi);
    if (d < 0.0) d += kTwoPi;
    total += d;
    z = w;
  }
  return total / (kTwoPi * iterates);
}

AxiomsReport section_axioms_check(const FlowField& field, const SectionSpec& section, std::span<const Vec> seeds,
                                  double t_max, double step, int grid, int jobs) {
  AxiomsReport rep;
  auto witness = [&](const Vec& p, const char* axiom) {
    if (!rep.witness) {
      rep.witness = p;
      rep.witness_axiom = axiom;
    }
  };

  // (i) the boundary is made of orbits.
  if (section.boundary == BoundaryKind::invariant_torus) {
    const double horizon = std::min(t_max, 20.0);
    for (int k = 0; k < 8; ++k) {
      const Vec p = section.boundary_point(kTwoPi * k / 8.0);
      for (const Vec& x : sample_orbit(field, p, horizon, step))
        rep.boundary_error = std::max(rep.boundary_error, section.boundary_distance(x));
    }
    rep.boundary_ok = rep.boundary_error <= 1e-6;
    if (!rep.boundary_ok) witness(section.boundary_point(0.0), "boundary");
  } else {
    const Vec p = section.boundary_point(0.0);
    IntegratorConfig cfg;
    cfg.t_max = t_max;
    cfg.step = step;
    const OrbitClass c = classify_orbit(field, p, cfg);
    if (c.tag == OrbitTag::periodic) {
      rep.boundary_error = c.residual;
      for (const Vec& x : sample_orbit(field, c.point, c.period, step))
        rep.boundary_error = std::max(rep.boundary_error, section.boundary_distance(x));
      rep.boundary_ok = rep.boundary_error <= 1e-6;
    } else {
      rep.boundary_error = std::numeric_limits<double>::infinity();
    }
    if (!rep.boundary_ok) witness(p, "boundary");
  }

  // (ii) the interior is transverse.
  rep.min_rate = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid; ++i) {
    const double r = (i + 0.5) / grid;
    for (int j = 0; j < 2 * grid; ++j) {
      const double a = kPi * j / grid;
      const Vec p = section.from_disc(Vec2(r * std::cos(a), r * std::sin(a)));
      const double rate = section.phase_rate(p, field(p));
      if (rate < rep.min_rate) rep.min_rate = rate;
      if (rate <= section.margin) witness(p, "transversality");
    }
  }
  rep.transverse_ok = rep.min_rate > section.margin;

  // (iii) every orbit meets the section in forward and backward time.
  std::vector<char> ok(seeds.size(), 0);
  parallel_for(seeds.size(), jobs, [&](std::size_t i) {
    ok[i] = first_crossing(field, section, seeds[i], t_max, step).found &&
            first_crossing(field, section, seeds[i], -t_max, step).found;
  });
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (ok[i]) continue;
    ++rep.recurrence_failures;
    witness(seeds[i], "recurrence");
  }
  rep.recurrence_ok = rep.recurrence_failures == 0;
  return rep;
}

// --- the cut -----------------------------------------------------------------

Vec CutAtlas::to_sphere(const Vec& stp) const {
  const double s = stp(0);
  const double r2 = stp(1) * stp(1) + stp(2) * stp(2);
  const double rho = std::sqrt(std::max(0.0, 1.0 - r2));
  const Vec2 w = rotation2(-b * s) * Vec2(stp(1), stp(2));
  Vec z(4);
  z << rho * std::cos(s), rho * std::sin(s), w(0), w(1);
  return z;
}

Vec CutAtlas::from_sphere(const Vec& z) const {
  const double s = std::atan2(z(1), z(0));
  const Vec2 w = rotation2(b * s) * Vec2(z(2), z(3));
  return vec3(s, w(0), w(1));
}

Mat CutAtlas::jacobian(const Vec& stp) const {
  const double s = stp(0);
  const double x = stp(1);
  const double y = stp(2);
  const double rho = std::sqrt(std::max(0.0, 1.0 - x * x - y * y));
  const Mat2 rot = rotation2(-b * s);
  Mat jac(4, 3);
  jac.block<2, 1>(0, 0) = rho * Vec2(-std::sin(s), std::cos(s));
  jac.block<2, 1>(2, 0) = -b * quarter_turn() * rot * Vec2(x, y);
  jac.block<2, 1>(0, 1) = -x / rho * Vec2(std::cos(s), std::sin(s));
  jac.block<2, 1>(0, 2) = -y / rho * Vec2(std::cos(s), std::sin(s));
  jac.block<2, 2>(2, 1) = rot;
  return jac;
}

namespace {

// Pushforward of the solid-torus Reeb field at z off C_2, using |z_1| from z
// itself rather than sqrt(1 - r^2).
Vec generic_pushforward(const SuspensionModel& susp, const CutAtlas& atlas, const Vec& z) {
  const Vec stp = atlas.from_sphere(z);
  const Vec r = reeb_field(susp.model, stp).coefficients;
  const double r1sq = z(0) * z(0) + z(1) * z(1);
  const double radial = (stp(1) * r(1) + stp(2) * r(2)) / r1sq;  // = -d|z_1| / |z_1|
  Vec v(4);
  v(0) = -r(0) * z(1) - radial * z(0);
  v(1) = r(0) * z(0) - radial * z(1);
  const Vec2 dw = rotation2(-atlas.b * stp(0)) * Vec2(r(1), r(2));
  v(2) = dw(0) + atlas.b * r(0) * z(3);
  v(3) = dw(1) - atlas.b * r(0) * z(2);
  return v;
}

}  // namespace

double cut_continuity(const SuspensionModel& susp, const CutAtlas& atlas, const FlowField& pushed, double eps) {
  double worst = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double a = kTwoPi * i / 4.0 + 0.1;
    Vec q(4);
    q << 0.0, 0.0, std::cos(a), std::sin(a);
    const Vec limit = pushed(q);
    for (int k = 0; k < 8; ++k) {
      const double psi = kTwoPi * k / 8.0;
      const double c = std::sqrt(1.0 - eps * eps);
      Vec z(4);
      z << eps * std::cos(psi), eps * std::sin(psi), c * std::cos(a), c * std::sin(a);
      worst = std::max(worst, (generic_pushforward(susp, atlas, z) - limit).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

CutResult cut_to_sphere(const SuspensionModel& susp, double continuity_threshold) {
  if (!susp.rigid_boundary())
    throw SectionError("cut needs H = -b on the boundary circle (defect " + std::to_string(susp.boundary_defect) +
                       ")");
  if (!susp.collar) throw SectionError("cut needs a rigid collar near the boundary");
  const CutAtlas atlas{susp.b};
  const Collar collar = *susp.collar;
  // In the collar the pushed field is (1/c) d/dphi_1 + d/dphi_2, which also
  // gives its value on C_2.
  auto pushed = [susp, atlas, collar](const Vec& zin) {
    const Vec z = zin / zin.norm();
    const double r2 = std::hypot(z(2), z(3));
    if (r2 >= collar.radius || z(0) * z(0) + z(1) * z(1) == 0.0) {
      const double w1 = 1.0 / collar.c;
      Vec v(4);
      v << -w1 * z(1), w1 * z(0), -z(3), z(2);
      return v;
    }
    return generic_pushforward(susp, atlas, z);
  };

  // alpha = f lambda_1 + lambda_2 with f = (H + b r^2) / |z_1|^2, which is c
  // in the collar.
  ContactModel::Definition def;
  def.name = "cut-sphere";
  def.ambient_dim = 4;
  def.intrinsic_dim = 3;
  def.constraint = Constraint::unit_sphere;
  def.parameters = {static_cast<double>(susp.b)};
  def.alpha = [susp, atlas, collar](const Vec& z) {
    const Vec q = z / z.norm();
    double f = collar.c;
    if (std::hypot(q(2), q(3)) < collar.radius) {
      const Vec stp = atlas.from_sphere(q);
      const double r2 = stp(1) * stp(1) + stp(2) * stp(2);
      f = (susp.h(stp) + atlas.b * r2) / (q(0) * q(0) + q(1) * q(1));
    }
    Vec a(4);
    a << -f * z(1), f * z(0), -z(3), z(2);
    return a;
  };
  def.sample = sphere_sample;
  ContactModel model(def);

  FlowField field;
  field.name = "cut reeb";
  field.model = std::make_shared<const ContactModel>(model);
  field.vector = pushed;
  field.reeb = true;

  SectionSpec sec;
  sec.name = "cut disc arg z1 = 0";
  sec.phase = [](const Vec& z) { return std::atan2(z(1), z(0)); };
  sec.phase_rate = [](const Vec& z, const Vec& v) {
    return (z(0) * v(1) - z(1) * v(0)) / (z(0) * z(0) + z(1) * z(1));
  };
  sec.to_disc = [atlas](const Vec& z) {
    const Vec stp = atlas.from_sphere(z);
    return Vec2(stp(1), stp(2));
  };
  sec.from_disc = [atlas](const Vec2& w) { return atlas.to_sphere(vec3(0.0, w(0), w(1))); };
  sec.boundary = BoundaryKind::periodic_orbit;
  sec.boundary_point = [](double t) {
    Vec z(4);
    z << 0.0, 0.0, std::cos(t), std::sin(t);
    return z;
  };
  sec.boundary_distance = [](const Vec& z) { return std::hypot(z(0), z(1)); };

  CutResult out{atlas, field, model, sec, 0.0};
  out.continuity_discrepancy = cut_continuity(susp, atlas, field);
  if (out.continuity_discrepancy > continuity_threshold)
    throw SectionError("pushed field is discontinuous across C_2 (discrepancy " +
                       std::to_string(out.continuity_discrepancy) + ")");
  return out;
}

ReductionReport reduction_descent_check(const SuspensionModel& susp, int points) {
  const double b = susp.b;
  const VectorFieldFn x = [b](const Vec& p) { return vec3(1.0, -b * p(2), b * p(1)); };
  ReductionReport rep;
  const int side = std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(points)))));
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      const double s = kTwoPi * i / side;
      const double phi = kTwoPi * (j + 0.5) / side;
      const Vec p = vec3(s, std::cos(phi), std::sin(phi));
      rep.max_mu = std::max(rep.max_mu, std::abs(susp.model.alpha(p).dot(x(p))));
      rep.max_lie = std::max(rep.max_lie, lie_derivative_check(susp.model, x, p, 0.0).residual);
      rep.max_momentum = std::max(rep.max_momentum, verify_momentum_identity(susp.model, x, p));
    }
  }
  return rep;
}

}  // namespace reeblab
