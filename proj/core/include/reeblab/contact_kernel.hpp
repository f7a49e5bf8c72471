#pragma once

// Differential-forms arithmetic on model charts, the Reeb-field solver and the
// correspondence between contact vector fields and contact Hamiltonians.
//
// Forms are stored by their ambient coefficients. A 1-form is the vector a
// with alpha(v) = a . v, a 2-form is the antisymmetric matrix Omega with
// omega(u, v) = u^T Omega v, and d(sum a_j dx_j) has Omega_ij = d_i a_j - d_j a_i.
// Sphere models are evaluated on the unit sphere and restricted to its
// tangent space, the orthogonal complement of the position vector.

#include "reeblab/linalg.hpp"

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace reeblab {

enum class Constraint { none, unit_sphere };
enum class DerivativeMode { analytic, central_difference };

inline constexpr double kDefaultFdStep = 1e-5;      // first derivatives
inline constexpr double kDefaultFlowDelta = 1e-3;   // flow-map Lie derivatives
inline constexpr double kConditionLimit = 1e8;

using VectorFieldFn = std::function<Vec(const Vec&)>;

class ContactModel;

struct AmbientPoint {
  std::string model_id;
  Vec coords;
};

struct OneFormValue {
  Vec base;
  Vec coefficients;
  double operator()(const Vec& v) const { return coefficients.dot(v); }
};

struct VectorValue {
  Vec base;
  Vec coefficients;
};

struct TwoFormValue {
  Vec base;
  Mat omega;
  double operator()(const Vec& u, const Vec& v) const { return u.dot(omega * v); }
};

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when the sampled contact rank test fails.
class ContactConditionError : public std::runtime_error {
 public:
  ContactConditionError(const std::string& model, Vec point, int rank_defect);
  const Vec& point() const { return point_; }
  int rank_defect() const { return rank_defect_; }

 private:
  Vec point_;
  int rank_defect_;
};

// Raised when a Reeb or contact-Hamiltonian solve is singular or
// ill-conditioned beyond kConditionLimit.
class DegenerateFormError : public std::runtime_error {
 public:
  DegenerateFormError(const std::string& model, Vec point, double condition);
  const Vec& point() const { return point_; }
  double condition() const { return condition_; }

 private:
  Vec point_;
  double condition_;
};

class ScalarField {
 public:
  using Evaluator = std::function<double(const Vec&)>;
  using Gradient = std::function<Vec(const Vec&)>;

  ScalarField() = default;
  // Gradient by central differences with step h.
  explicit ScalarField(Evaluator f, double h = kDefaultFdStep);
  ScalarField(Evaluator f, Gradient g);

  static ScalarField constant(double value);
  // Gradient by the five-point stencil, error O(h^4).
  static ScalarField fourth_order(Evaluator f, double h = 3e-4);

  double operator()(const Vec& p) const { return f_(p); }
  Vec gradient(const Vec& p) const;
  DerivativeMode gradient_mode() const { return grad_ ? DerivativeMode::analytic : DerivativeMode::central_difference; }
  double fd_step() const { return h_; }
  explicit operator bool() const { return static_cast<bool>(f_); }

  ScalarField plus(double c) const;
  ScalarField scaled(double k) const;
  // this(p) + k * other(p), keeping analytic gradients when both have them.
  ScalarField add(const ScalarField& other, double k = 1.0) const;

 private:
  Evaluator f_;
  Gradient grad_;
  double h_ = kDefaultFdStep;
  bool five_point_ = false;
};

class ContactModel {
 public:
  using AlphaFn = std::function<Vec(const Vec&)>;
  using DAlphaFn = std::function<Mat(const Vec&)>;

  struct Definition {
    std::string name;
    int ambient_dim = 0;
    int intrinsic_dim = 0;
    Constraint constraint = Constraint::none;
    AlphaFn alpha;
    DAlphaFn d_alpha;  // empty: central differences
    double fd_step = kDefaultFdStep;
    std::vector<double> parameters;
    // Sampler for the construction-time rank check; receives a uniform
    // variate vector in [0,1)^ambient_dim.
    std::function<Vec(const Vec&)> sample;
  };

  // Runs the contact rank check on a sample grid of `check_points` points.
  explicit ContactModel(Definition def, int check_points = 1000);

  const std::string& name() const { return def_.name; }
  int ambient_dim() const { return def_.ambient_dim; }
  int intrinsic_dim() const { return def_.intrinsic_dim; }
  Constraint constraint() const { return def_.constraint; }
  bool is_sphere() const { return def_.constraint == Constraint::unit_sphere; }
  const std::vector<double>& parameters() const { return def_.parameters; }
  DerivativeMode d_alpha_mode() const {
    return def_.d_alpha ? DerivativeMode::analytic : DerivativeMode::central_difference;
  }
  double fd_step() const { return def_.fd_step; }

  // Validated point (projected onto the sphere for sphere models).
  AmbientPoint point(const Vec& coords) const;
  Vec project(const Vec& p) const;
  double constraint_residual(const Vec& p) const;
  // Columns span the tangent space at project(p).
  Mat tangent_basis(const Vec& p) const;

  Vec alpha(const Vec& p) const;
  Mat d_alpha(const Vec& p) const;
  OneFormValue alpha_at(const Vec& p) const;

  // Rank of [T^T Omega T; a^T T] minus the intrinsic dimension (<= 0 when
  // the contact condition holds at p); condition estimate on output.
  int rank_defect(const Vec& p, double* condition = nullptr) const;

  // Same model with dalpha computed by central differences of step h.
  ContactModel with_finite_differences(double h = kDefaultFdStep) const;
  // The form alpha / H (H > 0 on the sample grid); dalpha stays analytic
  // when both dalpha and grad H are analytic.
  ContactModel rescaled(const ScalarField& h) const;

  const Definition& definition() const { return def_; }

 private:
  Definition def_;
};

// --- catalog ---------------------------------------------------------------

// alpha = dz + (x dy - y dx)/2 on R^3, coordinates (x, y, z).
ContactModel r3_standard();
// alpha = dz + (1/2) sum_j (x_j dy_j - y_j dx_j) on R^5, coordinates
// (x1, y1, x2, y2, z).
ContactModel r5_standard();
// alpha = (x1 dy1 - y1 dx1) + (x2 dy2 - y2 dx2)/(1 + eps) on S^3.
ContactModel s3_ellipsoid(double eps);
// alpha = sum_j (x_j dy_j - y_j dx_j) on S^{2n+1} in R^{2n+2}, coordinates
// (x0, y0, ..., xn, yn). The Reeb field is sum_j d/dphi_j.
ContactModel sphere_round(int n);
// alpha = H ds + x dy - y dx on R x D^2, coordinates (s, x, y); H must be
// 2pi-periodic in s and satisfy 2H - (x H_x + y H_y) > 0 on the closed disc.
ContactModel suspension_form(const ScalarField& h, int check_points = 1000);
// Twist family H = c + a (x^2 + y^2).
ScalarField twist_hamiltonian(double c, double a);

// Dispatch by name: "r3-standard", "r5-standard", "s3-ellipsoid" {eps},
// "sphere-round" {n}, "suspension" {c, a} (twist family).
ContactModel model_catalog(std::string_view name, std::span<const double> params = {});

// --- operations ------------------------------------------------------------

TwoFormValue exterior_derivative(const ContactModel& model, const Vec& p);

struct SolveDiagnostics {
  double kernel_residual = 0.0;   // max |(i_v dalpha - rhs)(T_k)|
  double alpha_residual = 0.0;    // |alpha(v) - target|
  double condition = 0.0;
};

VectorValue reeb_field(const ContactModel& model, const Vec& p, SolveDiagnostics* diag = nullptr);
VectorFieldFn reeb_vector_field(const ContactModel& model);

// alpha(X), differentiated with the five-point stencil.
ScalarField hamiltonian_of_field(const ContactModel& model, VectorFieldFn x);

// X_H = H R + Y with Y in ker(alpha) and i_Y dalpha = dH(R) alpha - dH.
VectorValue field_of_hamiltonian(const ContactModel& model, const ScalarField& h, const Vec& p,
                                 SolveDiagnostics* diag = nullptr);
VectorFieldFn hamiltonian_vector_field(const ContactModel& model, ScalarField h);

struct FlowMapOptions {
  double delta = kDefaultFlowDelta;
  double fd_step = kDefaultFdStep;
  int substeps = 4;
};

// Time-t map of the field by RK4 substeps, reprojected for sphere models.
Vec flow_map(const ContactModel& model, const VectorFieldFn& x, const Vec& p, double t, int substeps);

struct LieDerivativeResult {
  double residual = 0.0;
  double lambda = 0.0;
};

// Finite-difference L_X alpha at p from the time +-delta flow maps, compared
// against lambda * alpha on the tangent space. Without an expected lambda it
// is fitted as (L_X alpha)(R).
LieDerivativeResult lie_derivative_check(const ContactModel& model, const VectorFieldFn& x, const Vec& p,
                                         std::optional<double> expected_lambda = std::nullopt,
                                         const FlowMapOptions& opt = {});
// Same for X = X_H, with expected lambda = dH(R)(p).
LieDerivativeResult lie_derivative_check(const ContactModel& model, const ScalarField& h, const Vec& p,
                                         const FlowMapOptions& opt = {});

ScalarField momentum_map(const ContactModel& model, VectorFieldFn x);
// max_k |dmu(T_k) + (i_X dalpha)(T_k)| with dmu by central differences.
double verify_momentum_identity(const ContactModel& model, const VectorFieldFn& x, const Vec& p,
                                double h = kDefaultFdStep);

// FD Lie bracket [X, Y] = DY X - DX Y at p, tangent-projected for spheres.
Vec lie_bracket(const ContactModel& model, const VectorFieldFn& x, const VectorFieldFn& y, const Vec& p,
                double h = kDefaultFdStep);

// Ratio of the contact volume alpha ^ (dalpha)^n transported by the time-t
// flow map to its value at p (1 for volume-preserving flows).
double contact_volume_ratio(const ContactModel& model, const VectorFieldFn& x, const Vec& p, double t,
                            int substeps, double h = kDefaultFdStep);

}  // namespace reeblab
