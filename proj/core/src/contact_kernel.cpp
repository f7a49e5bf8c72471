#include "reeblab/contact_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace reeblab {

namespace {

std::string format_point(const Vec& p) {
  std::ostringstream os;
  os.precision(6);
  os << "(";
  for (Eigen::Index i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p(i);
  os << ")";
  return os.str();
}

Mat antisymmetric_fd(const ContactModel::AlphaFn& alpha, const Vec& p, double h) {
  const int m = static_cast<int>(p.size());
  Mat jac(m, m);  // jac(i, j) = d_i a_j
  Vec q = p;
  for (int i = 0; i < m; ++i) {
    q(i) = p(i) + h;
    const Vec ap = alpha(q);
    q(i) = p(i) - h;
    const Vec am = alpha(q);
    q(i) = p(i);
    jac.row(i) = ((ap - am) / (2.0 * h)).transpose();
  }
  return jac - jac.transpose();
}

// Stacked tangent-space system [T^T Omega T; a^T T], factored once and shared
// by the Reeb and contact-Hamiltonian solves.
struct TangentSystem {
  Vec p;
  Mat basis;  // ambient x d; empty for unconstrained models (identity)
  Vec a;
  Mat omega;
  Mat stacked;
  Eigen::ColPivHouseholderQR<Mat> qr;
  double condition = 0.0;
  int rank = 0;

  int dim() const { return static_cast<int>(stacked.cols()); }
  Vec to_ambient(const Vec& c) const { return basis.size() ? Vec(basis * c) : c; }
  Vec restrict(const Vec& covector) const {
    return basis.size() ? Vec(basis.transpose() * covector) : covector;
  }
};

TangentSystem assemble(const ContactModel& model, const Vec& raw) {
  TangentSystem sys;
  sys.p = model.project(raw);
  sys.a = model.alpha(sys.p);
  sys.omega = model.d_alpha(sys.p);
  const int m = model.ambient_dim();
  int d = m;
  if (model.is_sphere()) {
    sys.basis = complement_basis(sys.p);
    d = m - 1;
  }
  sys.stacked.resize(d + 1, d);
  if (sys.basis.size()) {
    sys.stacked.topRows(d) = sys.basis.transpose() * sys.omega * sys.basis;
    sys.stacked.row(d) = sys.a.transpose() * sys.basis;
  } else {
    sys.stacked.topRows(d) = sys.omega;
    sys.stacked.row(d) = sys.a.transpose();
  }
  sys.qr.compute(sys.stacked);
  const auto diag = sys.qr.matrixR().diagonal().cwiseAbs();
  const double largest = diag(0);
  const double smallest = diag(d - 1);
  sys.condition = smallest > 0.0 ? largest / smallest : std::numeric_limits<double>::infinity();
  sys.rank = static_cast<int>(sys.qr.rank());
  return sys;
}

void require_regular(const ContactModel& model, const TangentSystem& sys) {
  if (sys.rank < sys.dim() || !(sys.condition <= kConditionLimit))
    throw DegenerateFormError(model.name(), sys.p, sys.condition);
}

Vec solve(const TangentSystem& sys, const Vec& rhs) { return sys.qr.solve(rhs); }

Vec sphere_sample(const Vec& u) {
  // Box-Muller on coordinate pairs.
  Vec g(u.size());
  for (Eigen::Index i = 0; i + 1 < u.size(); i += 2) {
    const double rad = std::sqrt(-2.0 * std::log(1.0 - u(i)));
    g(i) = rad * std::cos(kTwoPi * u(i + 1));
    g(i + 1) = rad * std::sin(kTwoPi * u(i + 1));
  }
  return g / g.norm();
}

Vec box_sample(const Vec& u, double half_width) { return (2.0 * u.array() - 1.0).matrix() * half_width; }

Vec disc_bundle_sample(const Vec& u) {
  Vec p(3);
  const double r = std::sqrt(u(1));
  p << kTwoPi * u(0), r * std::cos(kTwoPi * u(2)), r * std::sin(kTwoPi * u(2));
  return p;
}

}  // namespace

ContactConditionError::ContactConditionError(const std::string& model, Vec point, int rank_defect)
    : std::runtime_error("contact condition violated for model '" + model + "' at " + format_point(point) +
                         " (rank defect " + std::to_string(rank_defect) + ")"),
      point_(std::move(point)),
      rank_defect_(rank_defect) {}

DegenerateFormError::DegenerateFormError(const std::string& model, Vec point, double condition)
    : std::runtime_error("degenerate contact form '" + model + "' at " + format_point(point) +
                         " (condition " + std::to_string(condition) + ")"),
      point_(std::move(point)),
      condition_(condition) {}

// --- ScalarField -------------------------------------------------------------

ScalarField::ScalarField(Evaluator f, double h) : f_(std::move(f)), h_(h) {}

ScalarField::ScalarField(Evaluator f, Gradient g) : f_(std::move(f)), grad_(std::move(g)) {}

ScalarField ScalarField::constant(double value) {
  return ScalarField([value](const Vec&) { return value; },
                     [](const Vec& p) { return Vec(Vec::Zero(p.size())); });
}

ScalarField ScalarField::fourth_order(Evaluator f, double h) {
  ScalarField s(std::move(f), h);
  s.five_point_ = true;
  return s;
}

Vec ScalarField::gradient(const Vec& p) const {
  if (grad_) return grad_(p);
  Vec g(p.size());
  Vec q = p;
  auto at = [&](Eigen::Index i, double d) {
    q(i) = p(i) + d;
    const double v = f_(q);
    q(i) = p(i);
    return v;
  };
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double c1 = at(i, h_) - at(i, -h_);
    if (five_point_)
      g(i) = (8.0 * c1 - (at(i, 2.0 * h_) - at(i, -2.0 * h_))) / (12.0 * h_);
    else
      g(i) = c1 / (2.0 * h_);
  }
  return g;
}

ScalarField ScalarField::plus(double c) const { return add(constant(c)); }

ScalarField ScalarField::scaled(double k) const {
  return ScalarField::constant(0.0).add(*this, k);
}

ScalarField ScalarField::add(const ScalarField& other, double k) const {
  auto f = f_;
  auto g = other.f_;
  Evaluator sum = [f, g, k](const Vec& p) { return f(p) + k * g(p); };
  if (grad_ && other.grad_) {
    auto gf = grad_;
    auto gg = other.grad_;
    return ScalarField(std::move(sum), [gf, gg, k](const Vec& p) { return Vec(gf(p) + k * gg(p)); });
  }
  return ScalarField(std::move(sum), std::min(h_, other.h_));
}

// --- ContactModel --------------------------------------------------------------

ContactModel::ContactModel(Definition def, int check_points) : def_(std::move(def)) {
  if (def_.ambient_dim <= 0 || def_.ambient_dim > kMaxDim - 2)
    throw ModelError("model '" + def_.name + "': unsupported ambient dimension");
  if (def_.intrinsic_dim % 2 == 0) throw ModelError("model '" + def_.name + "': intrinsic dimension must be odd");
  const int expected = def_.ambient_dim - (def_.constraint == Constraint::unit_sphere ? 1 : 0);
  if (def_.intrinsic_dim != expected)
    throw ModelError("model '" + def_.name + "': intrinsic dimension inconsistent with constraint");
  if (!def_.alpha) throw ModelError("model '" + def_.name + "': missing contact form");
  if (check_points <= 0 || !def_.sample) return;
  std::mt19937_64 rng(0x5eedC0117AC7ULL);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec u(def_.ambient_dim);
  for (int k = 0; k < check_points; ++k) {
    for (int i = 0; i < def_.ambient_dim; ++i) u(i) = unif(rng);
    const Vec p = project(def_.sample(u));
    const int defect = rank_defect(p);
    if (defect > 0) throw ContactConditionError(def_.name, p, defect);
  }
}

AmbientPoint ContactModel::point(const Vec& coords) const {
  if (coords.size() != def_.ambient_dim)
    throw ModelError("point for model '" + def_.name + "' has wrong dimension");
  return AmbientPoint{def_.name, project(coords)};
}

Vec ContactModel::project(const Vec& p) const {
  if (def_.constraint == Constraint::unit_sphere) return p / p.norm();
  return p;
}

double ContactModel::constraint_residual(const Vec& p) const {
  if (def_.constraint == Constraint::unit_sphere) return std::abs(p.norm() - 1.0);
  return 0.0;
}

Mat ContactModel::tangent_basis(const Vec& p) const {
  if (def_.constraint == Constraint::unit_sphere) return complement_basis(project(p));
  return Mat::Identity(def_.ambient_dim, def_.ambient_dim);
}

Vec ContactModel::alpha(const Vec& p) const { return def_.alpha(p); }

Mat ContactModel::d_alpha(const Vec& p) const {
  if (def_.d_alpha) return def_.d_alpha(p);
  return antisymmetric_fd(def_.alpha, p, def_.fd_step);
}

OneFormValue ContactModel::alpha_at(const Vec& p) const {
  const Vec q = project(p);
  return OneFormValue{q, alpha(q)};
}

int ContactModel::rank_defect(const Vec& p, double* condition) const {
  const TangentSystem sys = assemble(*this, p);
  if (condition) *condition = sys.condition;
  if (sys.rank < sys.dim()) return sys.dim() - sys.rank;
  if (!(sys.condition <= kConditionLimit)) return 1;
  return 0;
}

ContactModel ContactModel::with_finite_differences(double h) const {
  Definition def = def_;
  def.d_alpha = nullptr;
  def.fd_step = h;
  def.name += "/fd";
  return ContactModel(std::move(def), 0);
}

ContactModel ContactModel::rescaled(const ScalarField& h) const {
  Definition def = def_;
  def.name += "/H";
  auto alpha = def_.alpha;
  def.alpha = [alpha, h](const Vec& p) { return Vec(alpha(p) / h(p)); };
  if (def_.d_alpha && h.gradient_mode() == DerivativeMode::analytic) {
    auto d_alpha = def_.d_alpha;
    def.d_alpha = [alpha, d_alpha, h](const Vec& p) {
      const double hv = h(p);
      const Vec g = h.gradient(p);
      const Vec a = alpha(p);
      return Mat(d_alpha(p) / hv - (g * a.transpose() - a * g.transpose()) / (hv * hv));
    };
  } else {
    def.d_alpha = nullptr;
  }
  if (def_.sample) {
    auto sample = def_.sample;
    const bool sphere = is_sphere();
    def.sample = [sample, h, sphere](const Vec& u) {
      Vec p = sample(u);
      if (sphere) p /= p.norm();
      if (!(h(p) > 0.0)) throw ModelError("rescaling function is not positive at " + format_point(p));
      return p;
    };
  }
  return ContactModel(std::move(def));
}

// --- catalog -------------------------------------------------------------------

ContactModel r3_standard() {
  ContactModel::Definition def;
  def.name = "r3-standard";
  def.ambient_dim = 3;
  def.intrinsic_dim = 3;
  def.alpha = [](const Vec& p) {
    Vec a(3);
    a << -0.5 * p(1), 0.5 * p(0), 1.0;
    return a;
  };
  def.d_alpha = [](const Vec&) {
    Mat w = Mat::Zero(3, 3);
    w(0, 1) = 1.0;
    w(1, 0) = -1.0;
    return w;
  };
  def.sample = [](const Vec& u) { return box_sample(u, 2.0); };
  return ContactModel(std::move(def));
}

ContactModel r5_standard() {
  ContactModel::Definition def;
  def.name = "r5-standard";
  def.ambient_dim = 5;
  def.intrinsic_dim = 5;
  def.alpha = [](const Vec& p) {
    Vec a(5);
    a << -0.5 * p(1), 0.5 * p(0), -0.5 * p(3), 0.5 * p(2), 1.0;
    return a;
  };
  def.d_alpha = [](const Vec&) {
    Mat w = Mat::Zero(5, 5);
    w(0, 1) = w(2, 3) = 1.0;
    w(1, 0) = w(3, 2) = -1.0;
    return w;
  };
  def.sample = [](const Vec& u) { return box_sample(u, 2.0); };
  return ContactModel(std::move(def));
}

namespace {

ContactModel weighted_sphere(std::string name, std::vector<double> k, std::vector<double> params) {
  const int m = static_cast<int>(2 * k.size());
  ContactModel::Definition def;
  def.name = std::move(name);
  def.ambient_dim = m;
  def.intrinsic_dim = m - 1;
  def.constraint = Constraint::unit_sphere;
  def.parameters = std::move(params);
  def.alpha = [k, m](const Vec& p) {
    Vec a(m);
    for (int j = 0; j < m / 2; ++j) {
      a(2 * j) = -k[j] * p(2 * j + 1);
      a(2 * j + 1) = k[j] * p(2 * j);
    }
    return a;
  };
  def.d_alpha = [k, m](const Vec&) {
    Mat w = Mat::Zero(m, m);
    for (int j = 0; j < m / 2; ++j) {
      w(2 * j, 2 * j + 1) = 2.0 * k[j];
      w(2 * j + 1, 2 * j) = -2.0 * k[j];
    }
    return w;
  };
  def.sample = sphere_sample;
  return ContactModel(std::move(def));
}

}  // namespace

ContactModel s3_ellipsoid(double eps) {
  if (!(std::abs(1.0 + eps) > 1e-12)) throw ModelError("s3-ellipsoid: epsilon must differ from -1");
  return weighted_sphere("s3-ellipsoid", {1.0, 1.0 / (1.0 + eps)}, {eps});
}

ContactModel sphere_round(int n) {
  if (n < 1 || 2 * n + 2 > kMaxDim - 2) throw ModelError("sphere-round: n must be 1 or 2");
  return weighted_sphere("sphere-round", std::vector<double>(n + 1, 1.0), {static_cast<double>(n)});
}

ScalarField twist_hamiltonian(double c, double a) {
  return ScalarField([c, a](const Vec& p) { return c + a * (p(1) * p(1) + p(2) * p(2)); },
                     [a](const Vec& p) {
                       Vec g(3);
                       g << 0.0, 2.0 * a * p(1), 2.0 * a * p(2);
                       return g;
                     });
}

ContactModel suspension_form(const ScalarField& h, int check_points) {
  // Admissibility: 2H - (x H_x + y H_y) > 0 on the closed disc; this is
  // alpha ^ dalpha / (ds ^ dx ^ dy).
  if (check_points > 0) {
    std::mt19937_64 rng(0xD15CULL);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double worst = std::numeric_limits<double>::infinity();
    Vec worst_point;
    auto probe = [&](const Vec& p) {
      const Vec g = h.gradient(p);
      const double v = 2.0 * h(p) - (p(1) * g(1) + p(2) * g(2));
      if (v < worst) {
        worst = v;
        worst_point = p;
      }
    };
    Vec u(3);
    for (int k = 0; k < check_points; ++k) {
      for (int i = 0; i < 3; ++i) u(i) = unif(rng);
      probe(disc_bundle_sample(u));
    }
    for (int k = 0; k < 64; ++k) {  // boundary circle and centre
      Vec p(3);
      const double t = kTwoPi * k / 64.0;
      p << t, std::cos(t), std::sin(t);
      probe(p);
      p << t, 0.0, 0.0;
      probe(p);
    }
    if (!(worst > 0.0)) throw ContactConditionError("suspension", worst_point, 1);
  }
  ContactModel::Definition def;
  def.name = "suspension";
  def.ambient_dim = 3;
  def.intrinsic_dim = 3;
  def.alpha = [h](const Vec& p) {
    Vec a(3);
    a << h(p), -p(2), p(1);
    return a;
  };
  def.d_alpha = [h](const Vec& p) {
    const Vec g = h.gradient(p);
    Mat w = Mat::Zero(3, 3);
    w(0, 1) = -g(1);
    w(0, 2) = -g(2);
    w(1, 2) = 2.0;
    w(1, 0) = g(1);
    w(2, 0) = g(2);
    w(2, 1) = -2.0;
    return w;
  };
  def.sample = disc_bundle_sample;
  return ContactModel(std::move(def), check_points);
}

ContactModel model_catalog(std::string_view name, std::span<const double> params) {
  auto need = [&](std::size_t n) {
    if (params.size() != n)
      throw ModelError("model '" + std::string(name) + "' expects " + std::to_string(n) + " parameter(s)");
  };
  if (name == "r3-standard") {
    need(0);
    return r3_standard();
  }
  if (name == "r5-standard") {
    need(0);
    return r5_standard();
  }
  if (name == "s3-ellipsoid") {
    need(1);
    return s3_ellipsoid(params[0]);
  }
  if (name == "sphere-round") {
    need(1);
    return sphere_round(static_cast<int>(params[0]));
  }
  if (name == "suspension") {
    need(2);
    return suspension_form(twist_hamiltonian(params[0], params[1]));
  }
  throw ModelError("unknown contact model '" + std::string(name) + "'");
}

// --- operations ------------------------------------------------------------------

TwoFormValue exterior_derivative(const ContactModel& model, const Vec& p) {
  const Vec q = model.project(p);
  return TwoFormValue{q, model.d_alpha(q)};
}

VectorValue reeb_field(const ContactModel& model, const Vec& p, SolveDiagnostics* diag) {
  const TangentSystem sys = assemble(model, p);
  require_regular(model, sys);
  const int d = sys.dim();
  Vec rhs = Vec::Zero(d + 1);
  rhs(d) = 1.0;
  const Vec v = sys.to_ambient(solve(sys, rhs));
  if (diag) {
    diag->kernel_residual = sys.restrict(sys.omega * v).cwiseAbs().maxCoeff();
    diag->alpha_residual = std::abs(sys.a.dot(v) - 1.0);
    diag->condition = sys.condition;
  }
  return VectorValue{sys.p, v};
}

VectorFieldFn reeb_vector_field(const ContactModel& model) {
  return [model](const Vec& p) { return reeb_field(model, p).coefficients; };
}

ScalarField hamiltonian_of_field(const ContactModel& model, VectorFieldFn x) {
  return ScalarField::fourth_order([model, x = std::move(x)](const Vec& p) {
    const Vec q = model.project(p);
    return model.alpha(q).dot(x(q));
  });
}

VectorValue field_of_hamiltonian(const ContactModel& model, const ScalarField& h, const Vec& p,
                                 SolveDiagnostics* diag) {
  const TangentSystem sys = assemble(model, p);
  require_regular(model, sys);
  const int d = sys.dim();
  Vec rhs = Vec::Zero(d + 1);
  rhs(d) = 1.0;
  const Vec reeb = sys.to_ambient(solve(sys, rhs));
  const double hv = h(sys.p);
  const Vec grad = h.gradient(sys.p);
  const double dh_r = grad.dot(reeb);
  // i_Y dalpha has coefficient vector Omega^T Y = -Omega Y.
  const Vec target = dh_r * sys.a - grad;
  rhs.head(d) = -sys.restrict(target);
  rhs(d) = 0.0;
  const Vec y = sys.to_ambient(solve(sys, rhs));
  const Vec x = hv * reeb + y;
  if (diag) {
    diag->kernel_residual = sys.restrict(-(sys.omega * y) - target).cwiseAbs().maxCoeff();
    diag->alpha_residual = std::abs(sys.a.dot(x) - hv);
    diag->condition = sys.condition;
  }
  return VectorValue{sys.p, x};
}

VectorFieldFn hamiltonian_vector_field(const ContactModel& model, ScalarField h) {
  return [model, h = std::move(h)](const Vec& p) { return field_of_hamiltonian(model, h, p).coefficients; };
}

Vec flow_map(const ContactModel& model, const VectorFieldFn& x, const Vec& p, double t, int substeps) {
  Vec y = model.project(p);
  const double dt = t / substeps;
  for (int k = 0; k < substeps; ++k) {
    const Vec k1 = x(y);
    const Vec k2 = x(model.project(y + 0.5 * dt * k1));
    const Vec k3 = x(model.project(y + 0.5 * dt * k2));
    const Vec k4 = x(model.project(y + dt * k3));
    y = model.project(y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  }
  return y;
}

namespace {

// Columns: FD images of the tangent frame under the time-t flow map.
Mat pushed_frame(const ContactModel& model, const VectorFieldFn& x, const Vec& p, const Mat& frame, double t,
                 int substeps, double h) {
  Mat out(p.size(), frame.cols());
  for (Eigen::Index k = 0; k < frame.cols(); ++k) {
    const Vec fp = flow_map(model, x, model.project(p + h * frame.col(k)), t, substeps);
    const Vec fm = flow_map(model, x, model.project(p - h * frame.col(k)), t, substeps);
    out.col(k) = (fp - fm) / (2.0 * h);
  }
  return out;
}

}  // namespace

LieDerivativeResult lie_derivative_check(const ContactModel& model, const VectorFieldFn& x, const Vec& raw,
                                         std::optional<double> expected_lambda, const FlowMapOptions& opt) {
  const Vec p = model.project(raw);
  const Mat frame = model.tangent_basis(p);
  const Vec a = model.alpha(p);
  Vec pulled[2];
  for (int side = 0; side < 2; ++side) {
    const double t = side == 0 ? opt.delta : -opt.delta;
    const Vec q = flow_map(model, x, p, t, opt.substeps);
    const Mat images = pushed_frame(model, x, p, frame, t, opt.substeps, opt.fd_step);
    pulled[side] = images.transpose() * model.alpha(q);
  }
  const Vec lie = (pulled[0] - pulled[1]) / (2.0 * opt.delta);
  const Vec alpha_frame = frame.transpose() * a;
  LieDerivativeResult out;
  if (expected_lambda) {
    out.lambda = *expected_lambda;
  } else {
    // (L_X alpha)(R) with R expressed in the frame.
    const Vec reeb = reeb_field(model, p).coefficients;
    const Vec coeffs = frame.transpose() * reeb;  // orthonormal frame
    out.lambda = lie.dot(coeffs);
  }
  out.residual = (lie - out.lambda * alpha_frame).cwiseAbs().maxCoeff();
  return out;
}

LieDerivativeResult lie_derivative_check(const ContactModel& model, const ScalarField& h, const Vec& raw,
                                         const FlowMapOptions& opt) {
  const Vec p = model.project(raw);
  const Vec reeb = reeb_field(model, p).coefficients;
  const double lambda = h.gradient(p).dot(reeb);
  return lie_derivative_check(model, hamiltonian_vector_field(model, h), p, lambda, opt);
}

ScalarField momentum_map(const ContactModel& model, VectorFieldFn x) { return hamiltonian_of_field(model, std::move(x)); }

double verify_momentum_identity(const ContactModel& model, const VectorFieldFn& x, const Vec& raw, double h) {
  const Vec p = model.project(raw);
  const Mat frame = model.tangent_basis(p);
  auto mu = [&](const Vec& q) {
    const Vec r = model.project(q);
    return model.alpha(r).dot(x(r));
  };
  const Vec minus_contraction = model.d_alpha(p) * x(p);  // -i_X dalpha
  double worst = 0.0;
  for (Eigen::Index k = 0; k < frame.cols(); ++k) {
    const double dmu = (mu(p + h * frame.col(k)) - mu(p - h * frame.col(k))) / (2.0 * h);
    worst = std::max(worst, std::abs(dmu - minus_contraction.dot(frame.col(k))));
  }
  return worst;
}

Vec lie_bracket(const ContactModel& model, const VectorFieldFn& x, const VectorFieldFn& y, const Vec& raw,
                double h) {
  const Vec p = model.project(raw);
  const Vec xv = x(p);
  const Vec yv = y(p);
  const Vec dy_x = (y(model.project(p + h * xv)) - y(model.project(p - h * xv))) / (2.0 * h);
  const Vec dx_y = (x(model.project(p + h * yv)) - x(model.project(p - h * yv))) / (2.0 * h);
  Vec b = dy_x - dx_y;
  if (model.is_sphere()) b -= p * p.dot(b);
  return b;
}

namespace {

double contact_pfaffian_square(const ContactModel& model, const Vec& base, const Mat& frame) {
  const Vec a = model.alpha(base);
  const Mat w = model.d_alpha(base);
  const Eigen::Index d = frame.cols();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d + 1, d + 1);
  const Vec af = frame.transpose() * a;
  m.block(0, 1, 1, d) = af.transpose();
  m.block(1, 0, d, 1) = -af;
  m.block(1, 1, d, d) = frame.transpose() * w * frame;
  return m.determinant();
}

}  // namespace

double contact_volume_ratio(const ContactModel& model, const VectorFieldFn& x, const Vec& raw, double t, int substeps,
                            double h) {
  const Vec p = model.project(raw);
  const Mat frame = model.tangent_basis(p);
  const Vec q = flow_map(model, x, p, t, substeps);
  const Mat images = pushed_frame(model, x, p, frame, t, substeps, h);
  const double before = contact_pfaffian_square(model, p, frame);
  const double after = contact_pfaffian_square(model, q, images);
  return std::sqrt(after / before);
}

}  // namespace reeblab
