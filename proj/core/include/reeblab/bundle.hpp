#pragma once

// The circle bundle S^{2n+1} -> CP^n with the round contact form as
// connection: projection, horizontal lifts, lifted Hamiltonian circle
// actions and their holonomy.
//
// Points of S^{2n+1} are real vectors (x0, y0, ..., xn, yn) with z_j = x_j +
// i y_j. A point of CP^n is stored as its normalized representative: the unit
// vector on the fibre whose largest-modulus coordinate (first index on ties)
// is real and positive. Base tangents live in the same coordinates.

#include "reeblab/flow.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace reeblab {

class BundleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BundleModel {
 public:
  // n = 1 (S^3 -> CP^1) or n = 2 (S^5 -> CP^2).
  explicit BundleModel(int n);

  int n() const { return n_; }
  const ContactModel& total() const { return total_; }

  // Normalized representative of pi(z); exactly invariant under z -> e^{it} z
  // up to rounding in the phase division.
  Vec project(const Vec& z) const;
  // T pi at z applied to v.
  Vec push_forward(const Vec& z, const Vec& v) const;
  // Index of the coordinate that fixes the phase of the representative.
  int chart_index(const Vec& z) const;

 private:
  int n_;
  ContactModel total_;
};

struct LiftDiagnostics {
  double alpha_residual = 0.0;       // |alpha(v)|
  double projection_residual = 0.0;  // |T pi(v) - X|
};

// The unique v tangent at z with alpha(v) = 0 and T pi(v) = X. Throws
// BundleError when X is not tangent to the representative slice at pi(z).
VectorValue horizontal_lift(const BundleModel& bundle, const Vec& base_tangent, const Vec& z,
                            LiftDiagnostics* diag = nullptr);

class WeightVector {
 public:
  // Entries pairwise distinct, nonzero, with gcd 1.
  WeightVector(std::vector<int> w, double offset);
  // Offset = smallest integer c with c + min(0, min w) + eps > 0.
  static WeightVector for_perturbation(std::vector<int> w, double eps);

  const std::vector<int>& weights() const { return w_; }
  double offset() const { return c_; }

 private:
  std::vector<int> w_;
  double c_;
};

// A function on CP^n together with its pull-back to the total space.
struct BaseHamiltonian {
  // Evaluated on normalized representatives.
  ScalarField base;
  // base o pi; analytic when available.
  ScalarField lifted;
};

// H o pi with a finite-difference gradient.
BaseHamiltonian pull_back(const BundleModel& bundle, ScalarField base);

// X~ = H~ R + X_h at z, computed as the contact Hamiltonian field of H~.
VectorValue lifted_field(const BundleModel& bundle, const BaseHamiltonian& h, const Vec& z,
                         SolveDiagnostics* diag = nullptr);
VectorFieldFn lifted_vector_field(const BundleModel& bundle, BaseHamiltonian h);

struct CircleAction {
  WeightVector weights;
  // c + sum_j w_j |z_j|^2 / |z|^2, the momentum of sum_j w_j d/dphi_j.
  BaseHamiltonian hamiltonian;
  std::vector<Vec> fixed_points;  // coordinate points [1:0:..], [0:1:..], ...
  std::vector<double> fixed_values;
  // Generator sum_j w_j d/dphi_j on the total space.
  VectorFieldFn generator;
};

CircleAction cpn_action(const BundleModel& bundle, const WeightVector& weights);

struct HolonomyReport {
  std::string loop;
  Vec start;
  double shift = 0.0;      // h in (-pi, pi]
  double predicted = 0.0;  // 2 pi H(p) mod 2 pi, in [0, 2 pi)
  double residual = 0.0;   // |(-h) - 2 pi H(p)| mod 2 pi
  double loop_closure = 0.0;
};

// Horizontal transport of z around the action orbit through pi(z).
HolonomyReport holonomy(const BundleModel& bundle, const CircleAction& action, const Vec& z, int steps = 2000);
std::vector<HolonomyReport> holonomy_scan(const BundleModel& bundle, const CircleAction& action,
                                          std::span<const Vec> points, int steps = 2000, int jobs = 0);

struct PerturbedScenario {
  CircleAction action;
  double eps = 0.0;
  FlowField field;         // X~ + eps R
  ContactModel rescaled;   // alpha / (H~ + eps)
  int expected_periodic = 0;
  std::vector<double> frequencies;  // of the linear flow on each coordinate circle
  bool resonant = false;
  double certification_residual = 0.0;  // max |field - Reeb(rescaled)| on samples
};

// Throws ModelError when H~ + eps is not positive.
PerturbedScenario perturbed_reeb_scenario(const BundleModel& bundle, const WeightVector& weights, double eps,
                                          int certification_points = 200);

// Whether some ratio of the frequencies is within tol of p/q with q <= max_q.
bool has_resonance(std::span<const double> frequencies, int max_q = 1000, double tol = 1e-12);

}  // namespace reeblab
