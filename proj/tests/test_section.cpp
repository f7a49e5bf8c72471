#include "doctest.h"

#include "reeblab/section.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace reeblab;

namespace {

const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

std::vector<Vec2> disc_points(int count, double max_radius, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec2> out;
  for (int k = 0; k < count; ++k) {
    const double r = max_radius * std::sqrt(u(rng));
    const double a = kTwoPi * u(rng);
    out.emplace_back(r * std::cos(a), r * std::sin(a));
  }
  return out;
}

}  // namespace

TEST_CASE("radial twists") {
  RadialTwist t;
  t.center = Vec2(0.45, 0.0);
  t.radius = 0.3;
  t.amplitude = 1.2;

  SUBCASE("profile is flat, then falls smoothly to zero") {
    CHECK(t.angle(0.0) == 1.2);
    CHECK(t.angle(0.3 * 0.3) == 1.2);
    CHECK(t.angle(0.3) == 0.0);
    CHECK(t.angle(0.2999) < 1e-10);
    for (double rho : {0.1, 0.15, 0.2, 0.25}) {
      const double h = 1e-6;
      CHECK(t.angle_derivative(rho) == doctest::Approx((t.angle(rho + h) - t.angle(rho - h)) / (2 * h)).epsilon(1e-6));
    }
  }
  SUBCASE("inverse and Jacobian") {
    for (const Vec2& z : disc_points(50, 0.95, 3)) {
      CHECK((t.apply(t.apply(z), true) - z).norm() <= 1e-14);
      const double h = 1e-6;
      Mat2 fd;
      for (int k = 0; k < 2; ++k) {
        Vec2 dz = Vec2::Zero();
        dz(k) = h;
        fd.col(k) = (t.apply(z + dz, true) - t.apply(z - dz, true)) / (2 * h);
      }
      CHECK((t.jacobian(z, true) - fd).cwiseAbs().maxCoeff() <= 1e-6);
      CHECK(t.jacobian(z).determinant() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("identity outside the support") { CHECK(t.apply(Vec2(-0.5, 0.2)) == Vec2(-0.5, 0.2)); }
}

TEST_CASE("convergents") {
  CHECK(convergent(kGolden, 0) == std::pair{0, 1});
  CHECK(convergent(kGolden, 1) == std::pair{1, 1});
  CHECK(convergent(kGolden, 2) == std::pair{1, 2});
  CHECK(convergent(kGolden, 3) == std::pair{2, 3});
  CHECK(convergent(kGolden, 4) == std::pair{3, 5});
  CHECK(convergent(kGolden, 5) == std::pair{5, 8});
  CHECK(convergent(std::sqrt(2.0), 3) == std::pair{17, 12});
  CHECK_THROWS_AS(convergent(0.5, 3), ModelError);
  CHECK_THROWS_AS(convergent(kGolden, -1), ModelError);
}

TEST_CASE("stage maps") {
  SUBCASE("stage 0 is the rigid rotation by 2 pi / 2") {
    const DiscMap m = fayad_katok_stage(0);
    CHECK(m.p() == 1);
    CHECK(m.q() == 2);
    for (const Vec2& z : disc_points(20, 1.0, 4)) CHECK((m(z) + z).norm() <= 1e-15);
  }
  for (int nu = 0; nu <= 3; ++nu) {
    CAPTURE(nu);
    const DiscMap m = fayad_katok_stage(nu);
    CHECK(m.area_defect() <= 1e-5);
    CHECK(m(Vec2::Zero()).norm() <= 1e-15);
    // Rigid on the boundary annulus.
    const double r = 1.0 - 0.5 * fk_boundary_width(nu);
    for (int k = 0; k < 16; ++k) {
      const Vec2 z = r * Vec2(std::cos(0.4 * k), std::sin(0.4 * k));
      CHECK((m(z) - rotation2(m.angle()) * z).norm() <= 1e-15);
    }
    // q-periodic: phi R^q phi^{-1} = id.
    for (const Vec2& z : disc_points(10, 0.9, 5)) {
      Vec2 w = z;
      for (int k = 0; k < m.q(); ++k) w = m(w);
      CHECK((w - z).norm() <= 1e-12);
    }
  }
  SUBCASE("analytic Jacobian agrees with differences") {
    const DiscMap m = fayad_katok_stage(3);
    const DiscMap fd = DiscMap::flow("stage 3", [&m](const Vec2& z) { return m(z); });
    for (const Vec2& z : disc_points(50, 0.95, 7))
      CHECK((m.jacobian(z) - fd.jacobian(z, 1e-6)).cwiseAbs().maxCoeff() <= 1e-6);
  }
  SUBCASE("stage 2 differs from its rotation") {
    const DiscMap m = fayad_katok_stage(2);
    double moved = 0.0;
    for (const Vec2& z : disc_points(50, 0.9, 6)) moved = std::max(moved, (m(z) - rotation2(m.angle()) * z).norm());
    CHECK(moved > 0.05);
  }
  CHECK_THROWS_AS(fayad_katok_stage(-1), ModelError);
  FkParams wide;
  wide.twist_radius = 0.6;
  CHECK_THROWS_AS(fayad_katok_stage(2, wide), ModelError);
}

TEST_CASE("twist suspension") {
  const double c = 2.0;
  const double a = 0.5;
  const SuspensionModel s = twist_suspension(c, a);
  const FlowField f = s.reeb();
  const SectionSpec sec = solid_torus_section();

  SUBCASE("Reeb field closed form") {
    for (const Vec2& z : disc_points(100, 1.0, 7)) {
      const Vec p = vec3(0.3, z(0), z(1));
      const Vec expected = vec3(1.0, a * z(1), -a * z(0)) / c;
      CHECK((f(p) - expected).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }
  SUBCASE("return time and rotation") {
    const auto pts = disc_points(100, 1.0, 8);
    double time_err = 0.0;
    double map_err = 0.0;
    for (const Vec2& z : pts) {
      const ReturnPoint r = return_map(f, sec, z);
      time_err = std::max(time_err, std::abs(r.time - kTwoPi * c));
      map_err = std::max(map_err, (r.image - rotation2(-kTwoPi * a) * z).norm());
    }
    CHECK(time_err <= 1e-6);
    CHECK(map_err <= 1e-6);
  }
  SUBCASE("a = 0 gives the identity") {
    const FlowField g = twist_suspension(1.0, 0.0).reeb();
    for (const Vec2& z : disc_points(10, 1.0, 9)) CHECK((return_map(g, sec, z).image - z).norm() <= 1e-9);
  }
  SUBCASE("backward crossing") {
    const Crossing back = first_crossing(f, sec, vec3(1.0, 0.2, 0.1), -100.0);
    REQUIRE(back.found);
    CHECK(back.time == doctest::Approx(-c * 1.0).epsilon(1e-9));
    CHECK(std::abs(back.point(0)) <= 1e-9);
  }
  SUBCASE("rotation number") {
    const DiscMap ret = return_disc_map(f, sec);
    CHECK(rotation_number(ret, Vec2(0.5, 0.0), 10) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(rotation_number(DiscMap::rotation(kTwoPi * kGolden), Vec2(0.3, 0.1), 100) ==
          doctest::Approx(kGolden).epsilon(1e-12));
  }
  SUBCASE("grid and csv") {
    const std::vector<Vec2> pts = {Vec2(0.5, 0.0), Vec2(0.0, 0.25)};
    const auto grid = return_map_grid(f, sec, pts, 200.0, 1e-2, 2);
    std::ostringstream out;
    write_return_csv(out, grid);
    const std::string text = out.str();
    CHECK(text.rfind("r,phi,r',phi',return_time\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
    CHECK(grid[1].ret.image.norm() == doctest::Approx(0.25).epsilon(1e-9));
  }
  SUBCASE("recurrence failure is reported") {
    CHECK_THROWS_AS(return_map(f, sec, Vec2(0.5, 0.0), 1.0), SectionError);
  }
}

TEST_CASE("suspended stage maps") {
  for (int nu = 1; nu <= 3; ++nu) {
    CAPTURE(nu);
    const DiscMap m = fayad_katok_stage(nu);
    const SuspensionModel s = suspend(m);
    REQUIRE(s.collar);
    CHECK(s.rigid_boundary());
    CHECK(s.b <= -1);
    const FlowField f = s.reeb();
    const SectionSpec sec = solid_torus_section();
    double oracle_err = 0.0;
    double map_err = 0.0;
    for (const Vec2& z : disc_points(12, 0.95, 10 + nu)) {
      const Vec2 w = return_map(f, sec, z, 200.0, 5e-3).image;
      oracle_err = std::max(oracle_err, (w - hamiltonian_oracle(s, z)).norm());
      map_err = std::max(map_err, (w - m(z)).norm());
    }
    CHECK(oracle_err <= 1e-4);
    CHECK(map_err <= 1e-4);
  }
  CHECK_THROWS_AS(suspend(DiscMap::flow("x", [](const Vec2& z) { return z; })), ModelError);
}

TEST_CASE("suspension preconditions") {
  // b = 0 forces H to vanish on the boundary.
  CHECK_THROWS_AS(make_suspension(twist_hamiltonian(0.5, -0.5)), ModelError);
  const SuspensionModel s = twist_suspension(1.7, 0.5);
  CHECK(s.b == -2);
  CHECK(s.boundary_defect == doctest::Approx(0.2));
  CHECK_FALSE(s.rigid_boundary());
  CHECK_THROWS_AS(cut_to_sphere(s), SectionError);
}

TEST_CASE("section axioms") {
  const SuspensionModel s = twist_suspension(2.0 - kGolden, kGolden);
  const FlowField f = s.reeb();
  const SectionSpec sec = solid_torus_section();
  std::vector<Vec> seeds;
  for (const Vec2& z : disc_points(20, 1.0, 20)) seeds.push_back(vec3(1.0, z(0), z(1)));

  SUBCASE("pass on a twist") {
    const AxiomsReport rep = section_axioms_check(f, sec, seeds, 50.0);
    CHECK(rep.ok());
    CHECK(rep.boundary_error <= 1e-9);
    CHECK(rep.min_rate == doctest::Approx(1.0 / (2.0 - kGolden)));
    CHECK_FALSE(rep.witness);
  }
  SUBCASE("a field tangent to the section fails transversality") {
    FlowField g = f;
    g.vector = [](const Vec& p) { return vec3(p(1) * p(1) - 0.25, -p(2), p(1)); };
    const AxiomsReport rep = section_axioms_check(g, sec, {}, 50.0);
    CHECK_FALSE(rep.transverse_ok);
    REQUIRE(rep.witness);
    CHECK(rep.witness_axiom == "transversality");
    CHECK(rep.min_rate < 0.0);
  }
  SUBCASE("a field leaking through the boundary fails invariance") {
    FlowField g = f;
    g.vector = [](const Vec& p) { return vec3(1.0, 0.1 * p(1), 0.1 * p(2)); };
    const AxiomsReport rep = section_axioms_check(g, sec, {}, 50.0);
    CHECK_FALSE(rep.boundary_ok);
    CHECK(rep.witness_axiom == "boundary");
  }
}

TEST_CASE("contact cut") {
  const double a = kGolden;
  const double c = 2.0 - a;
  const SuspensionModel s = twist_suspension(c, a);
  REQUIRE(s.b == -2);
  const CutResult cut = cut_to_sphere(s);

  SUBCASE("atlas") {
    for (const Vec2& z : disc_points(100, 0.999, 30)) {
      const Vec stp = vec3(2.5, z(0), z(1));
      const Vec q = cut.atlas.to_sphere(stp);
      CHECK(std::abs(q.norm() - 1.0) <= 1e-14);
      const Vec back = cut.atlas.from_sphere(q);
      CHECK(std::abs(back(0) - 2.5) <= 1e-12);
      CHECK((back.tail(2) - stp.tail(2)).norm() <= 1e-12);
      const double h = 1e-6;
      Mat fd(4, 3);
      for (int k = 0; k < 3; ++k) {
        Vec d = Vec::Zero(3);
        d(k) = h;
        fd.col(k) = (cut.atlas.to_sphere(stp + d) - cut.atlas.to_sphere(stp - d)) / (2 * h);
      }
      CHECK((cut.atlas.jacobian(stp) - fd).cwiseAbs().maxCoeff() <= 1e-5);
    }
    const Vec core = cut.atlas.to_sphere(vec3(0.7, 0.0, 0.0));
    CHECK(std::abs(core(0) - std::cos(0.7)) + std::abs(core(1) - std::sin(0.7)) <= 1e-15);
    CHECK(core.tail(2).norm() == 0.0);
  }
  SUBCASE("pulled-back form") {
    // Psi^* (f lambda_1 + lambda_2) = alpha on the solid torus.
    for (const Vec2& z : disc_points(50, 0.99, 31)) {
      const Vec stp = vec3(1.1, z(0), z(1));
      const Vec q = cut.atlas.to_sphere(stp);
      const Vec pulled = cut.atlas.jacobian(stp).transpose() * cut.model.alpha(q);
      CHECK((pulled - s.model.alpha(stp)).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
  SUBCASE("pushed field is the pushforward and the cut-form Reeb field") {
    for (const Vec2& z : disc_points(50, 0.99, 32)) {
      const Vec stp = vec3(-0.4, z(0), z(1));
      const Vec q = cut.atlas.to_sphere(stp);
      const Vec pushed = cut.atlas.jacobian(stp) * s.reeb()(stp);
      CHECK((cut.field(q) - pushed).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK((reeb_field(cut.model, q).coefficients - pushed).cwiseAbs().maxCoeff() <= 1e-6);
    }
  }
  SUBCASE("continuity and the boundary orbit") {
    CHECK(cut.continuity_discrepancy <= 1e-5);
    IntegratorConfig cfg;
    cfg.t_max = 30.0;
    const OrbitClass oc = classify_orbit(cut.field, cut.section.boundary_point(0.3), cfg);
    CHECK(oc.tag == OrbitTag::periodic);
    CHECK(oc.period == doctest::Approx(kTwoPi).epsilon(1e-8));
    CHECK(oc.residual <= 1e-6);
  }
  SUBCASE("axioms on S^3 and agreement of return maps") {
    std::vector<Vec> seeds;
    for (const Vec2& z : disc_points(10, 0.99, 33)) seeds.push_back(cut.atlas.to_sphere(vec3(1.0, z(0), z(1))));
    const AxiomsReport rep = section_axioms_check(cut.field, cut.section, seeds, 50.0);
    CHECK(rep.boundary_ok);
    CHECK(rep.transverse_ok);
    CHECK(rep.recurrence_ok);
    const SectionSpec torus = solid_torus_section();
    double worst = 0.0;
    for (const Vec2& z : disc_points(20, 0.98, 34)) {
      const Vec2 a1 = return_map(cut.field, cut.section, z).image;
      const Vec2 a2 = return_map(s.reeb(), torus, z).image;
      worst = std::max(worst, (a1 - a2).norm());
    }
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("cut of a suspended stage map") {
  const DiscMap m = fayad_katok_stage(2);
  const SuspensionModel s = suspend(m);
  const CutResult cut = cut_to_sphere(s);
  CHECK(cut.continuity_discrepancy <= 1e-5);
  double worst = 0.0;
  for (const Vec2& z : disc_points(8, 0.9, 40))
    worst = std::max(worst, (return_map(cut.field, cut.section, z, 200.0, 5e-3).image - m(z)).norm());
  CHECK(worst <= 1e-4);
}

TEST_CASE("reduction at the boundary") {
  SUBCASE("rigid twist") {
    const ReductionReport rep = reduction_descent_check(twist_suspension(2.0 - kGolden, kGolden));
    CHECK(rep.ok());
  }
  SUBCASE("non-rigid boundary is flagged") {
    const ScalarField h([](const Vec& p) { return 2.0 + 0.3 * (p(1) * p(1) + p(2) * p(2)) + 0.1 * p(1) * std::sin(p(0)); });
    const ReductionReport rep = reduction_descent_check(make_suspension(h));
    CHECK_FALSE(rep.ok());
    CHECK(rep.max_mu > 1e-3);
  }
}
