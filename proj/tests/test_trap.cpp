#include "doctest.h"

#include "reeblab/trap.hpp"

#include <cmath>
#include <random>

using namespace reeblab;

namespace {

Vec point(double r1, double a1, double r2, double a2, double z) {
  Vec v(5);
  v << r1 * std::cos(a1), r1 * std::sin(a1), r2 * std::cos(a2), r2 * std::sin(a2), z;
  return v;
}

Vec e_z() {
  Vec v = Vec::Zero(5);
  v(4) = 1.0;
  return v;
}

// H - sum_j u_j dH/du_j with the u-derivatives taken by differences along the
// radial scalings (x_j, y_j) -> e^{t/2} (x_j, y_j).
double rise_oracle(const ScalarField& h, const Vec& p) {
  const double eps = 1e-6;
  double euler = 0.0;
  for (int j = 0; j < 2; ++j) {
    Vec plus = p;
    Vec minus = p;
    plus.segment(2 * j, 2) *= std::exp(0.5 * eps);
    minus.segment(2 * j, 2) *= std::exp(-0.5 * eps);
    euler += (h(plus) - h(minus)) / (2.0 * eps);
  }
  return h(p) - euler;
}

double tau_of(const Vec& p, double s) {
  const double u1 = p(0) * p(0) + p(1) * p(1);
  const double u2 = p(2) * p(2) + p(3) * p(3);
  return (u2 - u1) / ((u1 + s * u2) / (1.0 + s));
}

}  // namespace

TEST_CASE("trap model") {
  const TrapModel trap = build_trap();
  const double s = trap.slope();
  const ScalarField& h = trap.hamiltonian();
  const FlowField& f = trap.field();

  SUBCASE("X = d/dz outside the ball") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (int k = 0; k < 200; ++k) {
      Vec p(5);
      for (int i = 0; i < 5; ++i) p(i) = g(rng);
      p *= (3.0 + std::abs(g(rng))) / p.norm();
      CHECK(h(p) == 1.0);
      CHECK((f(p) - e_z()).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
  SUBCASE("linear flow and H = (1 + s) / 2 on the Clifford torus") {
    for (int i = 0; i < 12; ++i) {
      const Vec p = TrapModel::torus_point(0.5 * i, 1.3 * i);
      CHECK(h(p) == doctest::Approx((1.0 + s) / 2.0).epsilon(1e-12));
      CHECK((f(p) - trap.torus_field(p)).cwiseAbs().maxCoeff() <= 1e-8);
      // No component along the three normal directions of T.
      const Vec v = f(p);
      CHECK(std::abs(p(0) * v(0) + p(1) * v(1)) <= 1e-8);
      CHECK(std::abs(p(2) * v(2) + p(3) * v(3)) <= 1e-8);
      CHECK(std::abs(v(4)) <= 1e-8);
    }
  }
  SUBCASE("positive, and dz(X) from the Euler identity") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 300; ++k) {
      const Vec p = point(2.0 * u(rng), kTwoPi * u(rng), 2.0 * u(rng), kTwoPi * u(rng), -2.0 + 4.0 * u(rng));
      CHECK(h(p) > 0.0);
      const double rise = f(p)(4);
      CHECK(rise == doctest::Approx(rise_oracle(h, p)).epsilon(1e-6).scale(1.0));
      CHECK(rise >= 0.0);
    }
  }
  SUBCASE("gradient agrees with differences") {
    const ScalarField fd([&h](const Vec& p) { return h(p); });
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
      const Vec p = point(0.5 + u(rng), kTwoPi * u(rng), 0.5 + u(rng), kTwoPi * u(rng), -1.8 + 3.6 * u(rng));
      CHECK((h.gradient(p) - fd.gradient(p)).cwiseAbs().maxCoeff() <= 1e-6);
    }
  }
  SUBCASE("X is the Reeb field of alpha / H") {
    const ContactModel scaled = trap.model().rescaled(h);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
      const Vec p = point(2.0 * u(rng), kTwoPi * u(rng), 2.0 * u(rng), kTwoPi * u(rng), -2.0 + 4.0 * u(rng));
      CHECK((reeb_field(scaled, p).coefficients - f(p)).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
  SUBCASE("tau is conserved along orbits") {
    const Vec p0 = point(1.1, 0.2, 0.8, 1.0, -1.5);
    const OrbitTrace tr = integrate(f, p0, [] {
      IntegratorConfig c;
      c.t_max = 20.0;
      return c;
    }());
    for (const Vec& x : tr.states) REQUIRE(tau_of(x, s) == doctest::Approx(tau_of(p0, s)).epsilon(1e-7));
  }
}

TEST_CASE("trap construction errors") {
  TrapParams small;
  small.ball_radius = 1.5;
  try {
    build_trap(small);
    FAIL("expected a construction error");
  } catch (const TrapConstructionError& e) {
    CHECK(e.point().size() == 5);
    CHECK(e.point().norm() >= 1.5 - 1e-12);
  }
  TrapParams bad;
  bad.slope = 1.5;
  CHECK_THROWS_AS(build_trap(bad), ModelError);
  bad.slope = 0.2;  // the profile cannot reach (1 + s) / 2
  CHECK_THROWS_AS(build_trap(bad), ModelError);
}

TEST_CASE("trap axioms") {
  const TrapModel trap = build_trap();

  SUBCASE("shipped candidate passes") {
    const TrapReport rep = verify_trap_axioms(trap);
    CHECK(rep.aperiodic_ok);
    CHECK(rep.certificate_ok);
    REQUIRE(rep.certificate);
    CHECK(rep.certificate->horizon == 1e3);
    CHECK(rep.certificate->final_torus_distance < 1e-2);
    CHECK(rep.flow_box_ok);
    CHECK(rep.flow_box_error <= 1e-9);
    CHECK(rep.rise_ok);
    CHECK(rep.delta >= 0.01);
    CHECK(rep.ok());
    CHECK(rep.exits_top == rep.seeds);
  }
  SUBCASE("a far seed traverses and leaves through the top") {
    IntegratorConfig cfg;
    cfg.t_max = 100.0;
    const OrbitClass c = classify_orbit(trap.field(), point(1.7, 0.0, 0.3, 0.0, -2.9), cfg);
    REQUIRE(c.tag == OrbitTag::exits);
    CHECK(c.exit_point(4) == doctest::Approx(3.0).epsilon(1e-9));
  }
  SUBCASE("trapping is forward only") {
    const Vec seed = point(1.0, 0.0, 1.0, 0.0, -0.5);
    ClassifyOptions opt;
    opt.trap = trap.region();
    IntegratorConfig cfg;
    cfg.t_max = 1e3;
    CHECK(classify_orbit(trap.field(), seed, cfg, opt).tag == OrbitTag::trapped);
    cfg.t_max = 100.0;
    const OrbitClass back = classify_orbit(reversed(trap.field()), seed, cfg);
    REQUIRE(back.tag == OrbitTag::exits);
    CHECK(back.exit_point(4) == doctest::Approx(-3.0).epsilon(1e-9));
  }
  SUBCASE("the flat field is rejected") {
    TrapCheckOptions opt;
    opt.horizon = 50.0;
    const TrapReport rep = verify_trap_axioms(flat_trap(), opt);
    CHECK(rep.flow_box_ok);
    CHECK(rep.aperiodic_ok);
    CHECK_FALSE(rep.certificate_ok);
    CHECK_FALSE(rep.ok());
    CHECK(rep.delta == 1.0);
  }
}

TEST_CASE("plug") {
  const TrapModel trap = build_trap();
  const PlugModel plug = double_to_plug(trap);

  SUBCASE("halves glue to d/dz") {
    CHECK(plug.gluing_discrepancy <= 1e-10);
    const Vec p = point(1.0, 0.4, 1.0, 2.0, 1e-14);
    CHECK((plug.field(p) - plug.field(PlugModel::mirror(p))).norm() <= 1e-10);
  }
  SUBCASE("mirror symmetry of the glued field") {
    const Vec p = point(1.05, 0.3, 0.9, 1.2, -2.3);
    const Vec below = plug.field(p);
    const Vec above = plug.field(PlugModel::mirror(p));
    CHECK((above.head(4) + below.head(4)).norm() <= 1e-15);
    CHECK(above(4) == below(4));
  }
  SUBCASE("a traversing orbit exits where it entered") {
    const std::vector<Vec> e = {point(1.2, 0.3, 0.7, 1.1, -5.0)};
    const PlugReport rep = verify_plug_matching(plug, e);
    REQUIRE(rep.entries[0].outcome == PlugOutcome::matched);
    CHECK(rep.entries[0].mismatch <= 1e-6);
    CHECK(rep.entries[0].exit(4) == doctest::Approx(5.0));
  }
  SUBCASE("trapped entry and its mirror") {
    const Vec entry = plug_trapped_entry(plug, 0.0, 0.0);
    CHECK(entry(4) == doctest::Approx(-5.0).epsilon(1e-12));
    const std::vector<Vec> e = {entry};
    const PlugReport rep = verify_plug_matching(plug, e);
    CHECK(rep.entries[0].outcome == PlugOutcome::trapped);
    CHECK(rep.trapped == 1);
    // The mirror of the entry, run backward, stays in the upper copy of K.
    const FlowField back = reversed(plug.field);
    Vec x = PlugModel::mirror(entry);
    double t = 0.0;
    double t_in = -1.0;
    bool confined = true;
    while (t < 1200.0) {
      x = rk4_step(back, x, 1e-2);
      t += 1e-2;
      const double r1 = std::hypot(x(0), x(1));
      const double r2 = std::hypot(x(2), x(3));
      const bool in = std::abs(r1 - 1.0) <= 0.5 && std::abs(r2 - 1.0) <= 0.5 && std::abs(x(4) - 2.5) <= 0.5;
      if (in && t_in < 0.0) t_in = t;
      if (t_in >= 0.0 && !in) confined = false;
    }
    CHECK(t_in > 0.0);
    CHECK(t - t_in >= 1000.0);
    CHECK(confined);
  }
  SUBCASE("flat plug is the straight flow") {
    const PlugModel flat = double_to_plug(flat_trap());
    PlugGrid g;
    g.n = 4;
    const auto pts = g.points(flat.height);
    const PlugReport rep = verify_plug_matching(flat, pts);
    CHECK(rep.matched == pts.size());
    CHECK(rep.max_mismatch <= 1e-14);
  }
  SUBCASE("a broken mirror is witnessed") {
    TrapParams other;
    other.drive_max = 0.08;
    const PlugModel broken = double_to_plug(trap, build_trap(other));
    PlugGrid g;
    g.n = 5;
    g.r_min = 0.8;
    g.r_max = 1.3;
    const auto pts = g.points(broken.height);
    const PlugReport rep = verify_plug_matching(broken, pts);
    CHECK(rep.mismatched > 0);
    CHECK_FALSE(rep.ok());
    REQUIRE(rep.witness);
    CHECK(rep.max_mismatch > 1e-6);
  }
  SUBCASE("plug needs room for the halves") { CHECK_THROWS_AS(double_to_plug(trap, 0.5, 5.0), ModelError); }
}
