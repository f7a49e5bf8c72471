#include "doctest.h"

#include "reeblab/contact_kernel.hpp"

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

Vec random_sphere_point(std::mt19937_64& rng, int m) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec p(m);
  for (int i = 0; i < m; ++i) p(i) = g(rng);
  return p / p.norm();
}

// d/dphi_1 + k d/dphi_2 on S^3, written out in ambient coordinates.
Vec rotation_field(const Vec& p, double w1, double w2) {
  return vec({-w1 * p(1), w1 * p(0), -w2 * p(3), w2 * p(2)});
}

// Closed-form contact Hamiltonian field of alpha = dz + (x dy - y dx)/2,
// obtained by solving alpha(Y) = 0, i_Y dalpha = H_z alpha - dH by hand.
Vec r3_hamiltonian_field(const ScalarField& h, const Vec& p) {
  const Vec g = h.gradient(p);
  const double hz = g(2);
  return vec({0.5 * hz * p(0) - g(1), 0.5 * hz * p(1) + g(0), h(p) - 0.5 * (p(0) * g(0) + p(1) * g(1))});
}

ScalarField generic_r3_hamiltonian() {
  return ScalarField(
      [](const Vec& p) { return 1.5 + 0.3 * std::sin(p(0)) * p(1) + 0.2 * std::cos(p(2)) + 0.1 * p(0) * p(2); },
      [](const Vec& p) {
        return vec({0.3 * std::cos(p(0)) * p(1) + 0.1 * p(2), 0.3 * std::sin(p(0)),
                    -0.2 * std::sin(p(2)) + 0.1 * p(0)});
      });
}

}  // namespace

TEST_CASE("catalog forms and their exterior derivatives") {
  SUBCASE("r3-standard") {
    const ContactModel m = model_catalog("r3-standard");
    const Vec p = vec({0.3, -1.2, 2.0});
    CHECK(m.alpha(p).isApprox(vec({0.6, 0.15, 1.0})));
    const TwoFormValue w = exterior_derivative(m, p);
    Mat expected = Mat::Zero(3, 3);
    expected(0, 1) = 1.0;
    expected(1, 0) = -1.0;
    CHECK((w.omega - expected).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("sphere-round has dalpha = 2 sum dx ^ dy") {
    const ContactModel m = sphere_round(1);
    const Mat w = exterior_derivative(m, vec({0.5, 0.5, 0.5, 0.5})).omega;
    CHECK(w(0, 1) == 2.0);
    CHECK(w(2, 3) == 2.0);
    CHECK((w + w.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(w(0, 2) == 0.0);
  }
  SUBCASE("analytic and finite-difference dalpha agree on s3-ellipsoid") {
    const ContactModel m = s3_ellipsoid(0.3);
    const ContactModel fd = m.with_finite_differences(1e-5);
    CHECK(fd.d_alpha_mode() == DerivativeMode::central_difference);
    std::mt19937_64 rng(7);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const Vec p = random_sphere_point(rng, 4);
      worst = std::max(worst, (m.d_alpha(p) - fd.d_alpha(p)).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-8);
  }
  SUBCASE("suspension contact scalar for H = 2 + r^2/2") {
    const ScalarField h = twist_hamiltonian(2.0, 0.5);
    const Vec p = vec({0.4, 0.3, -0.5});
    const double r = std::hypot(p(1), p(2));
    const Vec g = h.gradient(p);
    // 2 r H - r^2 dH/dr, with r dH/dr = x H_x + y H_y.
    const double scalar = 2.0 * r * h(p) - r * (p(1) * g(1) + p(2) * g(2));
    CHECK(scalar == doctest::Approx(4.0 * r).epsilon(1e-14));
    CHECK_NOTHROW(model_catalog("suspension", std::vector<double>{2.0, 0.5}));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(model_catalog("no-such-model"), ModelError);
    CHECK_THROWS_AS(s3_ellipsoid(-1.0), ModelError);
    CHECK_THROWS_AS(model_catalog("s3-ellipsoid"), ModelError);
    // For the twist family 2H - r H_r = 2c, so c < 0 fails everywhere.
    CHECK_THROWS_AS(suspension_form(twist_hamiltonian(-0.5, 1.0)), ContactConditionError);
    CHECK_NOTHROW(suspension_form(twist_hamiltonian(0.5, -1.0)));
  }
  SUBCASE("rank check reports the degenerate point") {
    ContactModel::Definition def;
    def.name = "degenerate";
    def.ambient_dim = 3;
    def.intrinsic_dim = 3;
    def.alpha = [](const Vec&) { return vec({0.0, 0.0, 1.0}); };  // dz: integrable
    def.sample = [](const Vec& u) { return u; };
    try {
      ContactModel bad(def);
      FAIL("expected a contact condition error");
    } catch (const ContactConditionError& e) {
      CHECK(e.rank_defect() >= 1);
      CHECK(e.point().size() == 3);
    }
  }
}

TEST_CASE("reeb field") {
  SUBCASE("ellipsoid eps = 0.3 at (1,0,0,0)") {
    const ContactModel m = s3_ellipsoid(0.3);
    SolveDiagnostics diag;
    const Vec r = reeb_field(m, vec({1, 0, 0, 0}), &diag).coefficients;
    CHECK((r - vec({0, 1, 0, 0})).norm() <= 1e-12);
    CHECK(diag.kernel_residual <= 1e-12);
    CHECK(diag.alpha_residual <= 1e-12);
  }
  SUBCASE("r3-standard is d/dz everywhere") {
    const ContactModel m = r3_standard();
    for (const Vec& p : {vec({0, 0, 0}), vec({1.5, -2, 3}), vec({-0.7, 0.1, 10})})
      CHECK((reeb_field(m, p).coefficients - vec({0, 0, 1})).norm() <= 1e-14);
  }
  SUBCASE("suspension twist c = 2, a = 0.5") {
    const ContactModel m = suspension_form(twist_hamiltonian(2.0, 0.5));
    const Vec p = vec({1.1, 0.3, -0.4});
    const Vec r = reeb_field(m, p).coefficients;
    const double rad = std::hypot(p(1), p(2));
    const double dr = (p(1) * r(1) + p(2) * r(2)) / rad;
    const double dphi = (p(1) * r(2) - p(2) * r(1)) / (rad * rad);
    CHECK(r(0) == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(std::abs(dr) <= 1e-13);
    CHECK(dphi == doctest::Approx(-0.25).epsilon(1e-13));
  }
  SUBCASE("residuals on all catalog models") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const std::vector<ContactModel> models = {r3_standard(), r5_standard(), s3_ellipsoid(0.3), sphere_round(1),
                                              sphere_round(2), suspension_form(twist_hamiltonian(2.0, 0.5))};
    for (const auto& m : models) {
      double worst_kernel = 0.0;
      double worst_alpha = 0.0;
      double worst_tangent = 0.0;
      for (int k = 0; k < 1000; ++k) {
        Vec p(m.ambient_dim());
        for (int i = 0; i < m.ambient_dim(); ++i) p(i) = u(rng);
        if (m.name() == "suspension") p.tail(2) *= 0.3;
        SolveDiagnostics diag;
        const VectorValue r = reeb_field(m, p, &diag);
        worst_kernel = std::max(worst_kernel, diag.kernel_residual);
        worst_alpha = std::max(worst_alpha, diag.alpha_residual);
        if (m.is_sphere()) worst_tangent = std::max(worst_tangent, std::abs(r.base.dot(r.coefficients)));
      }
      INFO(m.name());
      CHECK(worst_kernel <= 1e-10);
      CHECK(worst_alpha <= 1e-10);
      CHECK(worst_tangent <= 1e-10);
    }
  }
}

TEST_CASE("contact hamiltonians") {
  const ContactModel round = sphere_round(1);
  SUBCASE("H_X for the Reeb field is 1") {
    const ScalarField h = hamiltonian_of_field(round, reeb_vector_field(round));
    CHECK(h(vec({0.6, 0.0, 0.0, 0.8})) == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("H_X for d/dphi_2 on the round sphere is r_2^2") {
    const ScalarField h = hamiltonian_of_field(round, [](const Vec& p) { return rotation_field(p, 0.0, 1.0); });
    const Vec p = vec({0.6, 0.0, 0.0, 0.8});
    CHECK(h(p) == doctest::Approx(0.64).epsilon(1e-14));
  }
  SUBCASE("H_X for d/dtheta on the suspension is r^2") {
    const ContactModel m = suspension_form(twist_hamiltonian(2.0, 0.5));
    const ScalarField h = hamiltonian_of_field(m, [](const Vec& p) { return vec({0.0, -p(2), p(1)}); });
    CHECK(h(vec({0.2, 0.3, 0.4})) == doctest::Approx(0.25).epsilon(1e-14));
  }
  SUBCASE("X_1 is the Reeb field") {
    const Vec p = vec({0.1, 0.7, -0.5, 0.3});
    const Vec x = field_of_hamiltonian(round, ScalarField::constant(1.0), p).coefficients;
    CHECK((x - reeb_field(round, p).coefficients).norm() <= 1e-14);
  }
  SUBCASE("H = eps + r_2^2 gives eps d/dphi_1 + (1 + eps) d/dphi_2") {
    const double eps = 0.37;
    const ScalarField h([eps](const Vec& p) { return eps + p(2) * p(2) + p(3) * p(3); },
                        [](const Vec& p) { return vec({0.0, 0.0, 2.0 * p(2), 2.0 * p(3)}); });
    std::mt19937_64 rng(3);
    for (int k = 0; k < 50; ++k) {
      const Vec p = random_sphere_point(rng, 4);
      SolveDiagnostics diag;
      const Vec x = field_of_hamiltonian(round, h, p, &diag).coefficients;
      CHECK((x - rotation_field(p, eps, 1.0 + eps)).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK(diag.kernel_residual <= 1e-9);
      CHECK(diag.alpha_residual <= 1e-10);
    }
  }
  SUBCASE("X_H agrees with the hand-solved formula on r3-standard") {
    const ContactModel m = r3_standard();
    const ScalarField h = generic_r3_hamiltonian();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 100; ++k) {
      const Vec p = vec({u(rng), u(rng), u(rng)});
      CHECK((field_of_hamiltonian(m, h, p).coefficients - r3_hamiltonian_field(h, p)).norm() <= 1e-12);
    }
  }
  SUBCASE("rescaling: X_H is the Reeb field of alpha / H") {
    const ContactModel m = r3_standard();
    const ScalarField h = generic_r3_hamiltonian();
    const ContactModel scaled = m.rescaled(h);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 100; ++k) {
      const Vec p = vec({u(rng), u(rng), u(rng)});
      CHECK((field_of_hamiltonian(m, h, p).coefficients - reeb_field(scaled, p).coefficients)
                .cwiseAbs()
                .maxCoeff() <= 1e-8);
    }
  }
  SUBCASE("round trips") {
    const ContactModel m = s3_ellipsoid(0.3);
    const ScalarField h([](const Vec& p) { return 0.4 + p(0) * p(3) + p(1) * p(1); },
                        [](const Vec& p) { return vec({p(3), 2.0 * p(1), 0.0, p(0)}); });
    std::mt19937_64 rng(13);
    for (int k = 0; k < 100; ++k) {
      const Vec p = random_sphere_point(rng, 4);
      const VectorFieldFn xh = hamiltonian_vector_field(m, h);
      CHECK(std::abs(hamiltonian_of_field(m, xh)(p) - h(p)) <= 1e-10);
      // A contact field: the weighted rotation, which preserves alpha.
      const VectorFieldFn rot = [](const Vec& q) { return rotation_field(q, 2.0, -1.0); };
      const ScalarField hr = hamiltonian_of_field(m, rot);
      CHECK((field_of_hamiltonian(m, hr, p).coefficients - rot(p)).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("lie derivative, momentum identity, bracket and volume") {
  std::mt19937_64 rng(17);
  SUBCASE("Reeb flows preserve alpha") {
    for (const ContactModel& m : {s3_ellipsoid(0.3), sphere_round(1), r3_standard()}) {
      for (int k = 0; k < 10; ++k) {
        Vec p = m.is_sphere() ? random_sphere_point(rng, m.ambient_dim()) : vec({0.3 * k, -0.2, 0.1 * k});
        const LieDerivativeResult strict = lie_derivative_check(m, reeb_vector_field(m), p, 0.0);
        CHECK(strict.residual <= 1e-5);
        const LieDerivativeResult fitted = lie_derivative_check(m, reeb_vector_field(m), p);
        CHECK(std::abs(fitted.lambda) <= 1e-5);
      }
    }
  }
  SUBCASE("H = eps + r_2^2 is R-invariant, so X_H is strict") {
    const ContactModel m = sphere_round(1);
    const ScalarField h([](const Vec& p) { return 0.3 + p(2) * p(2) + p(3) * p(3); },
                        [](const Vec& p) { return vec({0.0, 0.0, 2.0 * p(2), 2.0 * p(3)}); });
    for (int k = 0; k < 10; ++k) {
      const Vec p = random_sphere_point(rng, 4);
      const LieDerivativeResult res = lie_derivative_check(m, h, p);
      CHECK(res.lambda == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(res.residual <= 1e-5);
    }
  }
  SUBCASE("generic H on r3-standard: L_X alpha = dH(R) alpha") {
    const ContactModel m = r3_standard();
    const ScalarField h = generic_r3_hamiltonian();
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 20; ++k) {
      const Vec p = vec({u(rng), u(rng), u(rng)});
      const LieDerivativeResult res = lie_derivative_check(m, h, p);
      CHECK(res.residual <= 1e-4);
      const LieDerivativeResult fitted = lie_derivative_check(m, hamiltonian_vector_field(m, h), p);
      CHECK(fitted.lambda == doctest::Approx(h.gradient(p)(2)).epsilon(1e-4));
    }
  }
  SUBCASE("momentum identity") {
    const ContactModel susp = suspension_form(twist_hamiltonian(2.0, 0.5));
    CHECK(verify_momentum_identity(susp, [](const Vec& p) { return Vec(Vec::Zero(p.size())); },
                                   vec({0.1, 0.2, 0.3})) == 0.0);
    const VectorFieldFn dtheta = [](const Vec& p) { return vec({0.0, -p(2), p(1)}); };
    CHECK(verify_momentum_identity(susp, dtheta, vec({0.7, 0.4, -0.2})) <= 1e-7);
    const ContactModel round = sphere_round(1);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k)
      worst = std::max(worst, verify_momentum_identity(round, [](const Vec& p) { return rotation_field(p, 1.0, 3.0); },
                                                       random_sphere_point(rng, 4)));
    CHECK(worst <= 1e-6);
  }
  SUBCASE("bracket of commuting rotations vanishes") {
    const ContactModel m = sphere_round(1);
    const Vec p = random_sphere_point(rng, 4);
    const Vec b = lie_bracket(m, reeb_vector_field(m), [](const Vec& q) { return rotation_field(q, 1.0, 2.0); }, p);
    CHECK(b.cwiseAbs().maxCoeff() <= 1e-8);
  }
  SUBCASE("time-1 Reeb flows preserve contact volume") {
    const ContactModel ell = s3_ellipsoid((std::sqrt(5.0) - 1.0) / 2.0);
    const ContactModel susp = suspension_form(twist_hamiltonian(2.0, 0.5));
    for (int k = 0; k < 5; ++k) {
      CHECK(std::abs(contact_volume_ratio(ell, reeb_vector_field(ell), random_sphere_point(rng, 4), 1.0, 50) - 1.0) <=
            1e-6);
      CHECK(std::abs(contact_volume_ratio(susp, reeb_vector_field(susp), vec({0.1 * k, 0.3, -0.2}), 1.0, 50) - 1.0) <=
            1e-6);
    }
  }
}
