#include "reeblab/bundle.hpp"

#include "reeblab/parallel.hpp"

#include <cmath>
#include <complex>
#include <numeric>
#include <random>

namespace reeblab {

namespace {

using cplx = std::complex<double>;

constexpr double kTangentTolerance = 1e-8;

cplx coord(const Vec& v, int j) { return {v(2 * j), v(2 * j + 1)}; }

void set_coord(Vec& v, int j, cplx c) {
  v(2 * j) = c.real();
  v(2 * j + 1) = c.imag();
}

// sum_j conj(a_j) b_j
cplx hermitian(const Vec& a, const Vec& b) {
  cplx s = 0.0;
  for (int j = 0; 2 * j < a.size(); ++j) s += std::conj(coord(a, j)) * coord(b, j);
  return s;
}

Vec times_i(const Vec& v) {
  Vec out(v.size());
  for (int j = 0; 2 * j < v.size(); ++j) {
    out(2 * j) = -v(2 * j + 1);
    out(2 * j + 1) = v(2 * j);
  }
  return out;
}

}  // namespace

BundleModel::BundleModel(int n) : n_(n), total_(sphere_round(n)) {}

int BundleModel::chart_index(const Vec& z) const {
  int best = 0;
  double best_mod = -1.0;
  for (int j = 0; j <= n_; ++j) {
    const double mod = std::norm(coord(z, j));
    if (mod > best_mod) {
      best_mod = mod;
      best = j;
    }
  }
  return best;
}

namespace {

// Representative of z with coordinate k real and positive.
Vec representative(const Vec& z, int k, int n) {
  const Vec q = z / z.norm();
  const cplx phase = std::polar(1.0, -std::arg(coord(q, k)));
  Vec w(q.size());
  for (int j = 0; j <= n; ++j) set_coord(w, j, coord(q, j) * phase);
  w(2 * k + 1) = 0.0;
  return w;
}

}  // namespace

Vec BundleModel::project(const Vec& z) const { return representative(z, chart_index(z), n_); }

Vec BundleModel::push_forward(const Vec& z, const Vec& v) const {
  const int k = chart_index(z);
  const cplx zk = coord(z, k);
  const double dtheta = (coord(v, k) / zk).imag();
  const cplx phase = std::polar(1.0, -std::arg(zk));
  Vec out(v.size());
  for (int j = 0; j <= n_; ++j) set_coord(out, j, (coord(v, j) - cplx(0.0, dtheta) * coord(z, j)) * phase);
  return out;
}

VectorValue horizontal_lift(const BundleModel& bundle, const Vec& base_tangent, const Vec& z, LiftDiagnostics* diag) {
  // One chart decision for the whole computation, so that near-ties between
  // coordinate moduli cannot switch charts halfway.
  const int k = bundle.chart_index(z);
  const Vec q = z / z.norm();
  const Vec w = representative(q, k, bundle.n());
  if (base_tangent.size() != q.size()) throw BundleError("base tangent has the wrong dimension");
  // Tangent to the representative slice: real in the chart coordinate and
  // orthogonal to w.
  const double slice = std::abs(base_tangent(2 * k + 1));
  const double radial = std::abs(hermitian(w, base_tangent).real());
  if (slice > kTangentTolerance || radial > kTangentTolerance)
    throw BundleError("inconsistent base tangent (off the representative slice by " +
                      std::to_string(std::max(slice, radial)) + ")");
  // Rotate into the fibre point z, then remove the vertical part i c z with
  // c = Im <z, u>; the remainder is complex-orthogonal to z.
  const cplx phase = std::polar(1.0, std::arg(coord(q, k)));
  Vec u(q.size());
  for (int j = 0; j <= bundle.n(); ++j) set_coord(u, j, coord(base_tangent, j) * phase);
  const Vec v = u - hermitian(q, u).imag() * times_i(q);
  if (diag) {
    diag->alpha_residual = std::abs(bundle.total().alpha(q).dot(v));
    diag->projection_residual = (bundle.push_forward(q, v) - base_tangent).cwiseAbs().maxCoeff();
  }
  return VectorValue{q, v};
}

WeightVector::WeightVector(std::vector<int> w, double offset) : w_(std::move(w)), c_(offset) {
  if (w_.empty()) throw ModelError("weight vector is empty");
  int g = 0;
  for (std::size_t i = 0; i < w_.size(); ++i) {
    if (w_[i] == 0) throw ModelError("weights must be nonzero");
    for (std::size_t j = 0; j < i; ++j)
      if (w_[i] == w_[j]) throw ModelError("weights must be pairwise distinct");
    g = std::gcd(g, w_[i]);
  }
  if (g != 1) throw ModelError("weights must have greatest common divisor 1");
  if (!std::isfinite(c_)) throw ModelError("offset must be finite");
}

WeightVector WeightVector::for_perturbation(std::vector<int> w, double eps) {
  int lowest = 0;
  for (int x : w) lowest = std::min(lowest, x);
  return WeightVector(std::move(w), std::floor(-eps - lowest) + 1.0);
}

BaseHamiltonian pull_back(const BundleModel& bundle, ScalarField base) {
  BaseHamiltonian h;
  h.lifted = ScalarField([bundle, base](const Vec& z) { return base(bundle.project(z)); });
  h.base = std::move(base);
  return h;
}

VectorValue lifted_field(const BundleModel& bundle, const BaseHamiltonian& h, const Vec& z, SolveDiagnostics* diag) {
  return field_of_hamiltonian(bundle.total(), h.lifted, z, diag);
}

VectorFieldFn lifted_vector_field(const BundleModel& bundle, BaseHamiltonian h) {
  return hamiltonian_vector_field(bundle.total(), std::move(h.lifted));
}

CircleAction cpn_action(const BundleModel& bundle, const WeightVector& weights) {
  const int n = bundle.n();
  if (static_cast<int>(weights.weights().size()) != n)
    throw ModelError("expected " + std::to_string(n) + " weights for CP^" + std::to_string(n));
  // Weight 0 on z_0, w_j on z_j.
  std::vector<double> w(n + 1, 0.0);
  for (int j = 1; j <= n; ++j) w[j] = weights.weights()[j - 1];
  const double c = weights.offset();

  auto value = [w, c](const Vec& z) {
    double s = 0.0;
    for (std::size_t j = 1; j < w.size(); ++j) s += w[j] * std::norm(coord(z, static_cast<int>(j)));
    return c + s / z.squaredNorm();
  };
  auto gradient = [w](const Vec& z) {
    const double r2 = z.squaredNorm();
    double s = 0.0;
    for (std::size_t j = 1; j < w.size(); ++j) s += w[j] * std::norm(coord(z, static_cast<int>(j)));
    Vec g(z.size());
    for (int i = 0; i < z.size(); ++i) g(i) = 2.0 * z(i) * (w[i / 2] / r2 - s / (r2 * r2));
    return g;
  };

  CircleAction a{weights, {}, {}, {}, {}};
  // The momentum is already fibre invariant, so base and lift coincide.
  a.hamiltonian.base = ScalarField(value, gradient);
  a.hamiltonian.lifted = a.hamiltonian.base;
  for (int j = 0; j <= n; ++j) {
    Vec e = Vec::Zero(2 * n + 2);
    e(2 * j) = 1.0;
    a.fixed_points.push_back(e);
    a.fixed_values.push_back(value(e));
  }
  a.generator = [w](const Vec& z) {
    Vec v(z.size());
    for (int j = 0; 2 * j < z.size(); ++j) {
      v(2 * j) = -w[j] * z(2 * j + 1);
      v(2 * j + 1) = w[j] * z(2 * j);
    }
    return v;
  };
  return a;
}

HolonomyReport holonomy(const BundleModel& bundle, const CircleAction& action, const Vec& z, int steps) {
  HolonomyReport report;
  report.loop = "circle-action orbit";
  const Vec start = z / z.norm();
  report.start = start;

  // The loop is pi(e^{i t w} z), t in [0, 2 pi]; its tangent at pi(x) is
  // T pi of the generator at x.
  const VectorFieldFn& gen = action.generator;
  const Vec end_of_loop = flow_to(FlowField{"action", gen, {}, false, {}}, start, kTwoPi, kTwoPi / steps);
  // Chart-free: distance from the end point to the start fibre.
  const cplx c = hermitian(start, end_of_loop);
  Vec on_fibre(start.size());
  for (int j = 0; j <= bundle.n(); ++j) set_coord(on_fibre, j, c * coord(start, j));
  report.loop_closure = (end_of_loop - on_fibre).norm();
  if (report.loop_closure > 1e-8) throw BundleError("base loop does not close");

  // Horizontal transport: x' = horizontal lift of T pi(V(y(t))) where y is
  // the action orbit; since the action commutes with the fibre rotation,
  // T pi(V(y)) = T pi(V(x)) whenever pi(x) = pi(y).
  FlowField transport;
  transport.name = "horizontal transport";
  transport.model = std::make_shared<const ContactModel>(bundle.total());
  transport.vector = [&bundle, &gen](const Vec& x) {
    const Vec q = x / x.norm();
    const Vec base_tangent = bundle.push_forward(q, gen(q));
    return horizontal_lift(bundle, base_tangent, q).coefficients;
  };
  const Vec end = flow_to(transport, start, kTwoPi, kTwoPi / steps);
  report.shift = std::arg(hermitian(start, end));
  const double h_value = action.hamiltonian.lifted(start);
  report.predicted = std::fmod(kTwoPi * h_value, kTwoPi);
  if (report.predicted < 0.0) report.predicted += kTwoPi;
  report.residual = std::abs(wrap_angle(-report.shift - kTwoPi * h_value));
  return report;
}

std::vector<HolonomyReport> holonomy_scan(const BundleModel& bundle, const CircleAction& action,
                                          std::span<const Vec> points, int steps, int jobs) {
  std::vector<HolonomyReport> out(points.size());
  parallel_for(points.size(), jobs, [&](std::size_t i) { out[i] = holonomy(bundle, action, points[i], steps); });
  return out;
}

bool has_resonance(std::span<const double> frequencies, int max_q, double tol) {
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    for (std::size_t j = 0; j < frequencies.size(); ++j) {
      if (i == j || frequencies[j] == 0.0) continue;
      const double ratio = frequencies[i] / frequencies[j];
      for (int q = 1; q <= max_q; ++q)
        if (std::abs(ratio * q - std::round(ratio * q)) <= tol * q) return true;
    }
  }
  return false;
}

PerturbedScenario perturbed_reeb_scenario(const BundleModel& bundle, const WeightVector& weights, double eps,
                                          int certification_points) {
  CircleAction action = cpn_action(bundle, weights);
  // H~ + eps is smallest at a fixed point (a convex combination of them).
  for (double v : action.fixed_values)
    if (!(v + eps > 0.0))
      throw ModelError("H + eps must be positive (value " + std::to_string(v + eps) + " at a fixed point)");
  const ScalarField shifted = action.hamiltonian.lifted.plus(eps);
  PerturbedScenario s{action, eps, {}, bundle.total().rescaled(shifted), bundle.n() + 1, {}, false, 0.0};

  const ContactModel& total = bundle.total();
  s.field.name = "lifted perturbed reeb";
  s.field.model = std::make_shared<const ContactModel>(total);
  s.field.vector = [model = total, h = action.hamiltonian.lifted, eps](const Vec& z) {
    const Vec x = field_of_hamiltonian(model, h, z).coefficients;
    return Vec(x + eps * reeb_field(model, z).coefficients);
  };
  for (double v : action.fixed_values) s.frequencies.push_back(v + eps);
  s.resonant = has_resonance(s.frequencies);

  std::mt19937_64 rng(0xB077ULL);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int k = 0; k < certification_points; ++k) {
    Vec z(total.ambient_dim());
    for (int i = 0; i < z.size(); ++i) z(i) = g(rng);
    z /= z.norm();
    const Vec diff = s.field(z) - reeb_field(s.rescaled, z).coefficients;
    s.certification_residual = std::max(s.certification_residual, diff.cwiseAbs().maxCoeff());
  }
  return s;
}

}  // namespace reeblab
