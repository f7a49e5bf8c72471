#include "doctest.h"

#include "reeblab/bundle.hpp"

#include <cmath>
#include <random>

using namespace reeblab;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Vec random_point(std::mt19937_64& rng, int m) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec p(m);
  for (int i = 0; i < m; ++i) p(i) = g(rng);
  return p / p.norm();
}

// e^{i t} z
Vec fibre_rotate(const Vec& z, double t) {
  Vec out(z.size());
  for (int j = 0; 2 * j < z.size(); ++j) {
    const Vec2 r = rotation2(t) * Vec2(z(2 * j), z(2 * j + 1));
    out(2 * j) = r(0);
    out(2 * j + 1) = r(1);
  }
  return out;
}

// sum_j f_j d/dphi_j
Vec rotation(const Vec& z, const std::vector<double>& f) {
  Vec v(z.size());
  for (int j = 0; 2 * j < z.size(); ++j) {
    v(2 * j) = -f[j] * z(2 * j + 1);
    v(2 * j + 1) = f[j] * z(2 * j);
  }
  return v;
}

}  // namespace

TEST_CASE("projection and horizontal lifts") {
  std::mt19937_64 rng(1);
  for (int n : {1, 2}) {
    const BundleModel b(n);
    for (int k = 0; k < 100; ++k) {
      const Vec z = random_point(rng, 2 * n + 2);
      const Vec w = b.project(z);
      CHECK((b.project(fibre_rotate(z, 0.1 + 0.5 * k)) - w).cwiseAbs().maxCoeff() <= 1e-15);
      CHECK(std::abs(w.norm() - 1.0) <= 1e-15);
      // Lift a base tangent obtained by pushing forward a random vector.
      Vec v = random_point(rng, 2 * n + 2);
      v -= v.dot(z) * z;
      const Vec x = b.push_forward(z, v);
      LiftDiagnostics diag;
      const Vec lift = horizontal_lift(b, x, z, &diag).coefficients;
      CHECK(diag.alpha_residual <= 1e-12);
      CHECK(diag.projection_residual <= 1e-10);
      CHECK(std::abs(lift.dot(z)) <= 1e-12);
      // The lift differs from v by a vertical vector.
      const Vec diff = v - lift;
      const Vec reeb = reeb_field(b.total(), z).coefficients;
      CHECK((diff - diff.dot(reeb) * reeb).norm() <= 1e-12);
    }
  }
  const BundleModel b(1);
  SUBCASE("zero lifts to zero") {
    CHECK(horizontal_lift(b, Vec::Zero(4), vec({0.6, 0.0, 0.0, 0.8})).coefficients.norm() == 0.0);
  }
  SUBCASE("hand-computed lift at (1, 0)") {
    // alpha(v) = Im(v_0) = 0 and T pi(v) = v - i Im(v_0) z = X force v = X.
    const Vec v = horizontal_lift(b, vec({0, 0, 1, 0}), vec({1, 0, 0, 0})).coefficients;
    CHECK((v - vec({0, 0, 1, 0})).norm() <= 1e-15);
    // At the fibre point i(1, 0) the lift is rotated accordingly.
    const Vec vi = horizontal_lift(b, vec({0, 0, 1, 0}), vec({0, 1, 0, 0})).coefficients;
    CHECK((vi - vec({0, 0, 0, 1})).norm() <= 1e-15);
  }
  SUBCASE("inconsistent tangents are rejected") {
    CHECK_THROWS_AS(horizontal_lift(b, vec({1, 0, 0, 0}), vec({1, 0, 0, 0})), BundleError);
    CHECK_THROWS_AS(horizontal_lift(b, vec({0, 1, 0, 0}), vec({1, 0, 0, 0})), BundleError);
  }
}

TEST_CASE("weights and the circle action") {
  CHECK_THROWS_AS(WeightVector({1, 1}, 0.0), ModelError);
  CHECK_THROWS_AS(WeightVector({2, 4}, 0.0), ModelError);
  CHECK_THROWS_AS(WeightVector({0, 1}, 0.0), ModelError);
  CHECK(WeightVector::for_perturbation({1}, 0.3).offset() == 0.0);
  CHECK(WeightVector::for_perturbation({-1, 2}, 0.5).offset() == 1.0);
  CHECK(WeightVector::for_perturbation({1, 2}, 1.0 / std::sqrt(2.0)).offset() == 0.0);

  const BundleModel b1(1);
  const CircleAction a1 = cpn_action(b1, WeightVector({1}, 3.0));
  REQUIRE(a1.fixed_points.size() == 2);
  CHECK(a1.fixed_values[0] == 3.0);
  CHECK(a1.fixed_values[1] == 4.0);
  const BundleModel b2(2);
  const CircleAction a2 = cpn_action(b2, WeightVector({1, 2}, 0.0));
  REQUIRE(a2.fixed_points.size() == 3);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(std::abs(a2.fixed_values[j] - std::round(a2.fixed_values[j])) <= 1e-10);
    // The action orbit through a fixed point stays in its fibre.
    const Vec moved = flow_to(FlowField{"action", a2.generator, {}, false, {}}, a2.fixed_points[j], 1.3, 1e-2);
    CHECK((b2.project(moved) - b2.project(a2.fixed_points[j])).norm() <= 1e-12);
  }
  CHECK_THROWS_AS(cpn_action(b2, WeightVector({1}, 0.0)), ModelError);
}

TEST_CASE("lifted fields") {
  std::mt19937_64 rng(2);
  SUBCASE("H = 1 lifts to the Reeb field") {
    const BundleModel b(1);
    const BaseHamiltonian one = pull_back(b, ScalarField::constant(1.0));
    const Vec z = random_point(rng, 4);
    CHECK((lifted_field(b, one, z).coefficients - reeb_field(b.total(), z).coefficients).norm() <= 1e-9);
  }
  for (int n : {1, 2}) {
    const BundleModel b(n);
    const std::vector<int> w = n == 1 ? std::vector<int>{1} : std::vector<int>{1, 2};
    const double c = 2.0;
    const CircleAction a = cpn_action(b, WeightVector(w, c));
    std::vector<double> freq(n + 1, c);
    for (int j = 1; j <= n; ++j) freq[j] += w[j - 1];
    const VectorFieldFn lifted = lifted_vector_field(b, a.hamiltonian);
    for (int k = 0; k < 20; ++k) {
      const Vec z = random_point(rng, 2 * n + 2);
      // H~ R + X_h is c R plus the weighted rotation.
      CHECK((lifted(z) - rotation(z, freq)).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK(lie_derivative_check(b.total(), lifted, z, 0.0).residual <= 1e-5);
      CHECK(lie_bracket(b.total(), reeb_vector_field(b.total()), lifted, z).cwiseAbs().maxCoeff() <= 1e-5);
    }
  }
  SUBCASE("composed base Hamiltonians use the representative") {
    const BundleModel b(1);
    const BaseHamiltonian h = pull_back(b, ScalarField([](const Vec& w) { return 1.0 + w(2) * w(2) + w(3) * w(3); }));
    const Vec z = random_point(rng, 4);
    CHECK(h.lifted(fibre_rotate(z, 1.0)) == doctest::Approx(h.lifted(z)).epsilon(1e-14));
    // Same function as the w = (1), c = 1 momentum.
    const CircleAction a = cpn_action(b, WeightVector({1}, 1.0));
    CHECK((lifted_field(b, h, z).coefficients - lifted_field(b, a.hamiltonian, z).coefficients).norm() <= 1e-8);
  }
}

TEST_CASE("holonomy") {
  SUBCASE("fixed points have zero shift") {
    for (int n : {1, 2}) {
      const BundleModel b(n);
      const CircleAction a =
          cpn_action(b, WeightVector::for_perturbation(n == 1 ? std::vector<int>{1} : std::vector<int>{1, 2}, 0.3));
      for (const Vec& p : a.fixed_points) {
        const HolonomyReport r = holonomy(b, a, fibre_rotate(p, 0.7));
        CHECK(std::abs(r.shift) <= 1e-8);
        CHECK(r.residual <= 1e-8);
      }
    }
  }
  SUBCASE("CP^1, momentum 1/2 gives -h = pi") {
    const BundleModel b(1);
    const CircleAction a = cpn_action(b, WeightVector({1}, 0.0));
    const double s = std::sqrt(0.5);
    const HolonomyReport r = holonomy(b, a, vec({s, 0.0, 0.0, s}));
    CHECK(std::abs(std::abs(r.shift) - kPi) <= 1e-8);
    CHECK(r.predicted == doctest::Approx(kPi));
    CHECK(r.residual <= 1e-8);
  }
  SUBCASE("random points on CP^2 match the transported phase") {
    const BundleModel b(2);
    const CircleAction a = cpn_action(b, WeightVector({1, 2}, 0.0));
    std::mt19937_64 rng(3);
    std::vector<Vec> pts;
    for (int k = 0; k < 20; ++k) pts.push_back(random_point(rng, 6));
    const auto reports = holonomy_scan(b, a, pts, 2000, 2);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const Vec& z = pts[k];
      // The horizontal transport is z_j -> e^{i (w_j - S) t} z_j with S the
      // weighted sum, so the end point is e^{-2 pi i S} z.
      const double s = std::norm(std::complex<double>(z(2), z(3))) + 2.0 * std::norm(std::complex<double>(z(4), z(5)));
      CHECK(std::abs(wrap_angle(reports[k].shift + kTwoPi * s)) <= 1e-8);
      CHECK(reports[k].residual <= 1e-4);
    }
  }
}

TEST_CASE("perturbed Reeb scenarios") {
  SUBCASE("n = 1 is the ellipsoid field") {
    const double eps = 1.0 / std::sqrt(3.0);
    const BundleModel b(1);
    const PerturbedScenario s = perturbed_reeb_scenario(b, WeightVector::for_perturbation({1}, eps), eps);
    CHECK(s.certification_residual <= 1e-8);
    CHECK(s.expected_periodic == 2);
    CHECK_FALSE(s.resonant);
    // eps d/dphi_0 + (1 + eps) d/dphi_1 = eps times the Reeb field of the
    // ellipsoid with parameter 1 / eps.
    const ContactModel ell = s3_ellipsoid(1.0 / eps);
    std::mt19937_64 rng(4);
    for (int k = 0; k < 100; ++k) {
      const Vec z = random_point(rng, 4);
      CHECK((s.field(z) - eps * reeb_field(ell, z).coefficients).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK((s.field(z) - rotation(z, {eps, 1.0 + eps})).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
  SUBCASE("n = 2, weights (1, 2): three periodic orbits") {
    const double eps = 1.0 / std::sqrt(2.0);
    const BundleModel b(2);
    const PerturbedScenario s = perturbed_reeb_scenario(b, WeightVector::for_perturbation({1, 2}, eps), eps);
    CHECK(s.certification_residual <= 1e-8);
    CHECK(s.expected_periodic == 3);
    CHECK_FALSE(s.resonant);
    std::vector<Vec> seeds = random_seeds(b.total(), 30, 5);
    for (const Vec& p : s.action.fixed_points) seeds.push_back(p);
    IntegratorConfig c;
    c.t_max = 100.0;
    const CensusReport r = classify_ensemble(s.field, seeds, c);
    CHECK(r.periodic.size() == 3);
  }
  SUBCASE("rational eps is flagged resonant") {
    const BundleModel b(1);
    const PerturbedScenario s = perturbed_reeb_scenario(b, WeightVector::for_perturbation({1}, 0.5), 0.5);
    CHECK(s.resonant);
  }
  SUBCASE("positivity") {
    CHECK_THROWS_AS(perturbed_reeb_scenario(BundleModel(1), WeightVector({1}, -1.0), 0.3), ModelError);
  }
}
