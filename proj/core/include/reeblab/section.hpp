#pragma once

// Disc maps, their suspensions as solid-torus Reeb flows, surfaces of
// section with return maps, and the contact cut of the solid torus S^1 x D^2
// onto S^3.
//
// Solid-torus points are (s, x, y) with s unwrapped; the contact form is
// alpha = H ds + x dy - y dx. The disc carries omega = 2 dx ^ dy, and the
// Hamiltonian field of H is V = (H_y / 2, -H_x / 2); the Reeb field is
// proportional to d/ds + V.

#include "reeblab/flow.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace reeblab {

class SectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- disc maps ---------------------------------------------------------------

// z -> c + Rot(theta(|z - c|)) (z - c) with theta = amplitude on [0, plateau R]
// falling smoothly to 0 at R, and z unchanged outside the disc of radius R
// about c. Exactly area-preserving.
struct RadialTwist {
  Vec2 center = Vec2::Zero();
  double radius = 0.3;
  double amplitude = 1.0;
  double plateau = 0.3;

  double angle(double rho) const;
  double angle_derivative(double rho) const;
  Vec2 apply(const Vec2& z, bool inverse = false) const;
  Mat2 jacobian(const Vec2& z, bool inverse = false) const;
};

// Composition twists.back() o ... o twists.front().
struct Conjugator {
  std::vector<RadialTwist> twists;

  Vec2 apply(const Vec2& z) const;
  Vec2 inverse(const Vec2& z) const;
  Mat2 inverse_jacobian(const Vec2& z) const;
  // Outside this radius the conjugator is the identity.
  double support_radius() const;
};

class DiscMap {
 public:
  enum class Kind { rigid_rotation, conjugated_rotation, hamiltonian_flow };

  static DiscMap rotation(double angle);
  // phi o Rot(2 pi p / q) o phi^{-1}
  static DiscMap conjugated(Conjugator phi, int p, int q);
  static DiscMap flow(std::string description, std::function<Vec2(const Vec2&)> evaluator);

  Vec2 operator()(const Vec2& z) const;
  Kind kind() const { return kind_; }
  double angle() const { return angle_; }
  int p() const { return p_; }
  int q() const { return q_; }
  const Conjugator& conjugator() const { return phi_; }
  const std::string& description() const { return description_; }

  // Analytic for rotations and conjugated rotations; central differences
  // (five-point stencil) with step h for flows.
  Mat2 jacobian(const Vec2& z, double h = 1e-4) const;
  // max |det D psi - 1| over the points of an n x n grid on [-1, 1]^2 lying
  // in the disc of radius max_radius.
  double area_defect(int n = 50, double h = 1e-4, double max_radius = 0.99) const;

 private:
  Kind kind_ = Kind::rigid_rotation;
  double angle_ = 0.0;
  int p_ = 0;
  int q_ = 1;
  Conjugator phi_;
  std::function<Vec2(const Vec2&)> eval_;
  std::string description_;
};

// Continued-fraction convergent p_k / q_k of x (k = 0 is the integer part).
std::pair<int, int> convergent(double x, int k);

struct FkParams {
  double target = (2.23606797749978969 - 1.0) / 2.0;  // golden mean
  double center_radius = 0.45;
  double twist_radius = 0.3;
  double amplitude = 1.2;
};

// Width of the boundary annulus on which stage nu is the rigid rotation.
double fk_boundary_width(int nu);
// Stage nu approximant phi_nu o R_{p/q} o phi_nu^{-1}, with p/q the
// convergent of index nu + 2 and phi_nu a composition of nu off-centre
// twists (the identity for nu = 0).
DiscMap fayad_katok_stage(int nu, const FkParams& params = {});

// --- suspensions -------------------------------------------------------------

// Where H is the rigid twist c + a r^2 (for r >= radius).
struct Collar {
  double radius = 0.0;
  double c = 1.0;
  double a = 0.0;
};

struct SuspensionModel {
  ContactModel model;
  ScalarField h;
  int b = 0;                     // slope of the collapsed action d/ds + b d/dphi
  double boundary_defect = 0.0;  // max |H + b| on r = 1
  std::optional<Collar> collar;
  std::optional<DiscMap> prescribed;  // the map this suspends, if any

  FlowField reeb() const;
  bool rigid_boundary(double tol = 1e-10) const { return boundary_defect <= tol; }
};

// Requires H > 0 on the closed disc and the contact inequality; b is the
// integer nearest to -H on r = 1.
SuspensionModel make_suspension(ScalarField h, std::optional<Collar> collar = std::nullopt);
SuspensionModel twist_suspension(double c, double a);
// Autonomous generator c + a |phi^{-1} z|^2 with a = -p/q and c = N + p/q, so
// that b = -N and the time-2pi flow is exactly the stage map. N = 0 picks
// the smallest N >= 1 passing the contact inequality.
SuspensionModel suspend(const DiscMap& map, int n_offset = 0);

// Time-2pi flow of V_s, integrated directly in s by RK4.
Vec2 hamiltonian_oracle(const SuspensionModel& susp, const Vec2& z, double step = 1e-3);

// --- sections and return maps ------------------------------------------------

enum class BoundaryKind { invariant_torus, periodic_orbit };

struct SectionSpec {
  std::string name;
  // Angle-valued section coordinate; the section is {phase = phase0 mod 2pi}.
  std::function<double(const Vec&)> phase;
  // d phase (v) at p.
  std::function<double(const Vec&, const Vec&)> phase_rate;
  std::function<Vec2(const Vec&)> to_disc;
  std::function<Vec(const Vec2&)> from_disc;
  double phase0 = 0.0;
  BoundaryKind boundary = BoundaryKind::invariant_torus;
  // Boundary points: on the invariant torus, or on the boundary orbit.
  std::function<Vec(double)> boundary_point;
  std::function<double(const Vec&)> boundary_distance;
  double margin = 1e-3;
  double event_tolerance = 1e-10;
};

SectionSpec solid_torus_section(double s0 = 0.0);

struct Crossing {
  bool found = false;
  Vec point;
  double time = 0.0;
  double residual = 0.0;  // |phase - target| after polishing
};

// First crossing of the section by the orbit of p (forward for a positive
// t_max, backward otherwise), excluding the start point itself.
Crossing first_crossing(const FlowField& field, const SectionSpec& section, const Vec& p, double t_max,
                        double step = 1e-2);

struct ReturnPoint {
  Vec2 image;
  double time = 0.0;
  double residual = 0.0;
};

// Throws SectionError when the orbit does not come back within t_max.
ReturnPoint return_map(const FlowField& field, const SectionSpec& section, const Vec2& z, double t_max = 200.0,
                       double step = 1e-2);
// The return map as a DiscMap (its evaluator integrates).
DiscMap return_disc_map(const FlowField& field, const SectionSpec& section, double t_max = 200.0,
                        double step = 1e-2);

struct ReturnSample {
  Vec2 z;
  ReturnPoint ret;
};
std::vector<ReturnSample> return_map_grid(const FlowField& field, const SectionSpec& section,
                                          std::span<const Vec2> points, double t_max = 200.0, double step = 1e-2,
                                          int jobs = 0);
// Header `r,phi,r',phi',return_time`.
void write_return_csv(std::ostream& out, std::span<const ReturnSample> samples);

// Mean angular increment per iterate, in [0, 1) turns.
double rotation_number(const std::function<Vec2(const Vec2&)>& map, Vec2 z, int iterates);

struct AxiomsReport {
  bool boundary_ok = false;
  double boundary_error = 0.0;
  bool transverse_ok = false;
  double min_rate = 0.0;
  bool recurrence_ok = false;
  std::size_t recurrence_failures = 0;
  std::optional<Vec> witness;  // first failing point
  std::string witness_axiom;
  bool ok() const { return boundary_ok && transverse_ok && recurrence_ok; }
};

AxiomsReport section_axioms_check(const FlowField& field, const SectionSpec& section, std::span<const Vec> seeds,
                                  double t_max, double step = 1e-2, int grid = 12, int jobs = 0);

// --- the cut -----------------------------------------------------------------

// Psi_b(s, x, y) = (sqrt(1 - r^2) e^{is}, (x + iy) e^{-ibs}) in S^3.
struct CutAtlas {
  int b = 0;
  Vec to_sphere(const Vec& stp) const;
  // Off C_2 = {z_1 = 0}; s in (-pi, pi].
  Vec from_sphere(const Vec& z) const;
  Mat jacobian(const Vec& stp) const;
};

struct CutResult {
  CutAtlas atlas;
  FlowField field;      // pushed Reeb field on S^3
  ContactModel model;   // the cut form f lambda_1 + lambda_2
  SectionSpec section;  // the disc {arg z_1 = 0} bounded by C_2
  double continuity_discrepancy = 0.0;
};

// Throws SectionError without a rigid integer boundary, or when the pushed
// field is discontinuous across C_2 beyond the threshold.
CutResult cut_to_sphere(const SuspensionModel& susp, double continuity_threshold = 1e-5);
// Max |DPsi R - value on C_2| at distance eps along 8 rays onto C_2.
double cut_continuity(const SuspensionModel& susp, const CutAtlas& atlas, const FlowField& pushed, double eps = 1e-7);

struct ReductionReport {
  double max_mu = 0.0;        // |alpha(X)| on r = 1
  double max_lie = 0.0;       // FD L_X alpha
  double max_momentum = 0.0;  // d mu + i_X d alpha
  bool ok(double mu_tol = 1e-10, double tol = 1e-6) const {
    return max_mu <= mu_tol && max_lie <= tol && max_momentum <= tol;
  }
};

// Checks on the boundary torus that X = d/ds + b d/dphi is a strict contact
// field with alpha(X) = 0 there.
ReductionReport reduction_descent_check(const SuspensionModel& susp, int points = 64);

}  // namespace reeblab
