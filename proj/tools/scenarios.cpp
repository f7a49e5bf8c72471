// The nine scenario kinds: parameter schemas and what each run checks.

#include "config.hpp"
#include "runner.hpp"

#include "reeblab/bundle.hpp"
#include "reeblab/parallel.hpp"
#include "reeblab/section.hpp"
#include "reeblab/trap.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

namespace reeblab::cli {

namespace {

using json = nlohmann::ordered_json;

const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;

using Vec3 = Eigen::Vector3d;

// --- schema helpers ------------------------------------------------------------

ParamSpec real_param(std::string name, double fallback, std::string doc,
                     std::function<std::string(double)> check = {}) {
  ParamSpec p{std::move(name), ParamType::real, fallback, std::move(doc), {}, {}};
  if (check) p.check = [check](const Value& v) { return check(std::get<double>(v)); };
  return p;
}

ParamSpec int_param(std::string name, std::int64_t fallback, std::int64_t lo, std::int64_t hi, std::string doc) {
  ParamSpec p{std::move(name), ParamType::integer, fallback, std::move(doc), {}, {}};
  p.check = [lo, hi](const Value& v) {
    const std::int64_t x = std::get<std::int64_t>(v);
    if (x < lo || x > hi) return "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]";
    return std::string();
  };
  return p;
}

std::function<std::string(double)> above(double lo) {
  return [lo](double x) {
    if (x > lo) return std::string();
    std::ostringstream s;
    s << "must be greater than " << lo;
    return s.str();
  };
}

std::function<std::string(double)> within(double lo, double hi) {
  return [lo, hi](double x) {
    if (x >= lo && x <= hi) return std::string();
    std::ostringstream s;
    s << "must be in [" << lo << ", " << hi << "]";
    return s.str();
  };
}

ParamSpec weights_param(std::vector<std::int64_t> fallback) {
  ParamSpec p{"weights", ParamType::integer_list, std::move(fallback),
              "circle-action weights w_1..w_n on CP^n: n entries, pairwise distinct, nonzero, gcd 1",
              {},
              {}};
  p.check = [](const Value& v) {
    const auto& w = std::get<std::vector<std::int64_t>>(v);
    if (w.empty() || w.size() > 2) return std::string("must have 1 or 2 entries");
    std::int64_t g = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] == 0) return std::string("entries must be nonzero");
      for (std::size_t j = 0; j < i; ++j)
        if (w[i] == w[j]) return std::string("entries must be pairwise distinct");
      g = std::gcd(g, w[i]);
    }
    if (g != 1) return std::string("entries must have gcd 1");
    return std::string();
  };
  return p;
}

std::string weights_match_n(const ParameterSet& p) {
  if (static_cast<std::int64_t>(p.integers("weights").size()) != p.integer("n"))
    return "weights must have exactly n entries";
  return {};
}

IntegratorConfig integrator_with(double t_max, double step = 1e-2) {
  IntegratorConfig c;
  c.t_max = t_max;
  c.step = step;
  return c;
}

// --- shared output helpers -----------------------------------------------------

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json census_json(const CensusReport& r) {
  json c;
  c["field"] = r.field;
  c["model"] = r.model_id;
  c["t_max"] = r.t_max;
  c["ptol"] = r.ptol;
  c["cluster_radius"] = r.cluster_radius;
  c["seeds"] = r.seeds.size();
  c["counts"] = {{"periodic", r.count(OrbitTag::periodic)},
                 {"trapped", r.count(OrbitTag::trapped)},
                 {"exits", r.count(OrbitTag::exits)},
                 {"undetermined", r.count(OrbitTag::undetermined)}};
  json p = json::array();
  for (const PeriodicCluster& pc : r.periodic)
    p.push_back({{"representative", pc.representative},
                 {"members", pc.members.size()},
                 {"period", pc.period},
                 {"point", vec_json(pc.point)}});
  c["periodic_orbits"] = p;
  c["distinct_periodic"] = r.periodic.size();
  return c;
}

std::string census_csv(const CensusReport& r) {
  std::ostringstream out;
  out << "seed,tag,period,closure_residual";
  const Eigen::Index dim = r.seeds.empty() ? 0 : r.seeds[0].size();
  for (Eigen::Index i = 0; i < dim; ++i) out << ",p" << i;
  out << '\n';
  for (std::size_t k = 0; k < r.orbits.size(); ++k) {
    const OrbitClass& c = r.orbits[k];
    out << k << ',' << to_string(c.tag) << ',' << fmt(c.period) << ',' << fmt(c.residual);
    for (Eigen::Index i = 0; i < dim; ++i) out << ',' << fmt(r.seeds[k](i));
    out << '\n';
  }
  return out.str();
}

// Stereographic projection of S^3 from (0, 0, 0, 1) for plot data.
Vec3 stereo(const Vec& z) {
  const double d = 1.0 - z(3);
  return Vec3(z(0), z(1), z(2)) / (std::abs(d) < 1e-12 ? 1e-12 : d);
}

// Closed polylines as gnuplot data blocks separated by two blank lines.
std::string orbit_blocks(const FlowField& f, const std::vector<std::pair<Vec, double>>& orbits, double step,
                         bool stereographic) {
  std::ostringstream out;
  out << "# one block per orbit; columns: " << (stereographic ? "X Y Z (stereographic)" : "coordinates") << '\n';
  for (const auto& [p, period] : orbits) {
    for (const Vec& x : sample_orbit(f, p, period, step)) {
      if (stereographic) {
        const Vec3 s = stereo(x);
        out << fmt(s(0)) << ' ' << fmt(s(1)) << ' ' << fmt(s(2)) << '\n';
      } else {
        for (Eigen::Index i = 0; i < x.size(); ++i) out << (i ? " " : "") << fmt(x(i));
        out << '\n';
      }
    }
    out << "\n\n";
  }
  return out.str();
}

std::vector<Vec2> disc_points(std::mt19937_64 rng, std::size_t count, double max_radius) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec2> out;
  for (std::size_t k = 0; k < count; ++k) {
    const double r = max_radius * std::sqrt(u(rng));
    const double a = kTwoPi * u(rng);
    out.emplace_back(r * std::cos(a), r * std::sin(a));
  }
  return out;
}

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

Vec axis_point(int dim, int k) {
  Vec v = Vec::Zero(dim);
  v(k) = 1.0;
  return v;
}

template <typename F>
double parallel_max(std::size_t n, int jobs, F&& f) {
  std::vector<double> v(n, 0.0);
  parallel_for(n, jobs, [&](std::size_t i) { v[i] = f(i); });
  double worst = 0.0;
  for (double x : v) worst = std::isnan(x) ? x : std::max(worst, x);
  return worst;
}

std::vector<int> to_int(const std::vector<std::int64_t>& w) { return {w.begin(), w.end()}; }

// --- ellipsoid-census ----------------------------------------------------------

void run_ellipsoid_census(RunContext& ctx) {
  const double eps = ctx.params().real("eps");
  const auto count = static_cast<std::size_t>(ctx.params().integer("seeds"));
  const ContactModel m = s3_ellipsoid(eps);
  const FlowField f = reeb_flow(m);

  std::vector<Vec> seeds = random_seeds(m, count, ctx.substream_seed(0));
  seeds.push_back(axis_point(4, 0));
  seeds.push_back(axis_point(4, 2));

  ctx.phase("closed form");
  const double closed = parallel_max(seeds.size(), ctx.jobs(), [&](std::size_t k) {
    const Vec& p = seeds[k];
    Vec expected(4);
    expected << -p(1), p(0), -(1.0 + eps) * p(3), (1.0 + eps) * p(2);
    return (f(p) - expected).cwiseAbs().maxCoeff();
  });
  ctx.check_le("reeb_closed_form", closed, 1e-9);

  ctx.phase("census");
  CensusOptions opt;
  opt.jobs = ctx.jobs();
  const CensusReport rep = classify_ensemble(f, seeds, ctx.integrator(), opt);
  ctx.phase("report");
  ctx.census() = census_json(rep);

  const std::vector<double> freq = {1.0, 1.0 + eps};
  const bool resonant = has_resonance(freq, 50, 1e-9);
  ctx.results()["resonant"] = resonant;
  if (!resonant) {
    ctx.check_eq("distinct_periodic_orbits", static_cast<double>(rep.periodic.size()), 2.0);
    std::vector<double> expected = {kTwoPi, kTwoPi / (1.0 + eps)};
    std::vector<double> found;
    for (const PeriodicCluster& c : rep.periodic) found.push_back(c.period);
    std::sort(expected.begin(), expected.end());
    std::sort(found.begin(), found.end());
    double err = found.size() == 2 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < found.size() && i < 2; ++i)
      err = std::max(err, std::abs(found[i] - expected[i]) / expected[i]);
    ctx.check_le("period_relative_error", err, 1e-6);
    ctx.results()["expected_periods"] = expected;
  } else {
    // Every orbit closes; the count depends only on the seeds.
    ctx.check_eq("every_seed_periodic", static_cast<double>(rep.count(OrbitTag::periodic)),
                 static_cast<double>(seeds.size()));
  }
  double closure = 0.0;
  for (const OrbitClass& c : rep.orbits)
    if (c.tag == OrbitTag::periodic) closure = std::max(closure, c.residual);
  ctx.check_le("closure_residual", closure, 1e-6);

  ctx.write_artifact("census.csv", "csv", "seed classifications", census_csv(rep));
  std::vector<std::pair<Vec, double>> orbits;
  for (const PeriodicCluster& c : rep.periodic) orbits.emplace_back(c.point, c.period);
  if (orbits.size() > 8) orbits.resize(8);
  ctx.write_artifact("periodic_orbits.dat", "dat", "periodic orbits, stereographic",
                     orbit_blocks(f, orbits, 1e-2, true));
}

// --- hopf ----------------------------------------------------------------------

void run_hopf(RunContext& ctx) {
  const auto count = static_cast<std::size_t>(ctx.params().integer("seeds"));
  const ContactModel m = s3_ellipsoid(0.0);
  const BundleModel bundle(1);
  const FlowField f = reeb_flow(m);
  const std::vector<Vec> seeds = random_seeds(m, count, ctx.substream_seed(0));

  ctx.phase("census");
  CensusOptions opt;
  opt.jobs = ctx.jobs();
  const CensusReport rep = classify_ensemble(f, seeds, ctx.integrator(), opt);
  ctx.phase("fibres");
  ctx.census() = census_json(rep);
  ctx.check_eq("periodic_seeds", static_cast<double>(rep.count(OrbitTag::periodic)), static_cast<double>(count));
  ctx.check_eq("distinct_fibres", static_cast<double>(rep.periodic.size()), static_cast<double>(count));
  double period_err = 0.0;
  for (const OrbitClass& c : rep.orbits)
    period_err = std::max(period_err, c.tag == OrbitTag::periodic ? std::abs(c.period - kTwoPi) / kTwoPi : 1.0);
  ctx.check_le("period_relative_error", period_err, 1e-6);

  // Every orbit is a fibre: its image in CP^1 is a point.
  const double fibre = parallel_max(count, ctx.jobs(), [&](std::size_t k) {
    const Vec base = bundle.project(seeds[k]);
    double worst = 0.0;
    for (const Vec& x : sample_orbit(f, seeds[k], kTwoPi, 1e-2))
      worst = std::max(worst, (bundle.project(x) - base).norm());
    return worst;
  });
  ctx.check_le("orbits_are_fibres", fibre, 1e-8);

  ctx.write_artifact("census.csv", "csv", "seed classifications", census_csv(rep));
  std::vector<std::pair<Vec, double>> orbits;
  for (std::size_t k = 0; k < std::min<std::size_t>(count, 12); ++k) orbits.emplace_back(seeds[k], kTwoPi);
  ctx.write_artifact("fibres.dat", "dat", "Hopf fibres, stereographic", orbit_blocks(f, orbits, 1e-2, true));
}

// --- boothby-wang --------------------------------------------------------------

void run_boothby_wang(RunContext& ctx) {
  const int n = static_cast<int>(ctx.params().integer("n"));
  const double eps = ctx.params().real("eps");
  const BundleModel bundle(n);
  const WeightVector w = WeightVector::for_perturbation(to_int(ctx.params().integers("weights")), eps);
  const PerturbedScenario s = perturbed_reeb_scenario(bundle, w, eps);

  json& res = ctx.results();
  res["offset"] = w.offset();
  res["frequencies"] = s.frequencies;
  res["resonant"] = s.resonant;
  res["expected_periodic"] = s.expected_periodic;
  ctx.check_le("reeb_of_rescaled_form", s.certification_residual, 1e-8);
  ctx.check_true("non_resonant_frequencies", !s.resonant);

  ctx.phase("strictness");
  const ContactModel& total = bundle.total();
  const auto samples = random_seeds(total, static_cast<std::size_t>(ctx.params().integer("samples")),
                                    ctx.substream_seed(1));
  const VectorFieldFn reeb = reeb_vector_field(total);
  const double strict = parallel_max(samples.size(), ctx.jobs(), [&](std::size_t k) {
    return lie_derivative_check(total, s.field.vector, samples[k], 0.0).residual;
  });
  ctx.check_le("strict_contact", strict, 1e-5);
  const double bracket = parallel_max(samples.size(), ctx.jobs(), [&](std::size_t k) {
    return lie_bracket(total, reeb, s.field.vector, samples[k]).cwiseAbs().maxCoeff();
  });
  ctx.check_le("commutes_with_reeb", bracket, 1e-5);

  if (n == 1 && w.offset() == 0.0) {
    // eps d/dphi_0 + (1 + eps) d/dphi_1 is eps times the ellipsoid field
    // with parameter 1 / eps.
    const ContactModel ell = s3_ellipsoid(1.0 / eps);
    const double diff = parallel_max(samples.size(), ctx.jobs(), [&](std::size_t k) {
      return (s.field(samples[k]) - eps * reeb_field(ell, samples[k]).coefficients).cwiseAbs().maxCoeff();
    });
    ctx.check_le("equals_rescaled_ellipsoid_field", diff, 1e-10);
  }

  ctx.phase("census");
  std::vector<Vec> seeds = random_seeds(total, static_cast<std::size_t>(ctx.params().integer("seeds")),
                                        ctx.substream_seed(0));
  for (const Vec& p : s.action.fixed_points) seeds.push_back(p);
  CensusOptions opt;
  opt.jobs = ctx.jobs();
  const CensusReport rep = classify_ensemble(s.field, seeds, ctx.integrator(), opt);
  ctx.phase("report");
  ctx.census() = census_json(rep);
  ctx.check_eq("distinct_periodic_orbits", static_cast<double>(rep.periodic.size()), n + 1.0);

  ctx.write_artifact("census.csv", "csv", "seed classifications", census_csv(rep));
  std::vector<std::pair<Vec, double>> orbits;
  for (const PeriodicCluster& c : rep.periodic) orbits.emplace_back(c.point, c.period);
  ctx.write_artifact("periodic_orbits.dat", "dat", "periodic orbits", orbit_blocks(s.field, orbits, 1e-2, n == 1));
}

// --- holonomy ------------------------------------------------------------------

void run_holonomy(RunContext& ctx) {
  const int n = static_cast<int>(ctx.params().integer("n"));
  const BundleModel bundle(n);
  const WeightVector w(to_int(ctx.params().integers("weights")), ctx.params().real("offset"));
  const CircleAction action = cpn_action(bundle, w);
  const int steps = static_cast<int>(ctx.params().integer("steps"));
  const auto points =
      random_seeds(bundle.total(), static_cast<std::size_t>(ctx.params().integer("points")), ctx.substream_seed(0));

  ctx.phase("transport");
  const std::vector<HolonomyReport> reps = holonomy_scan(bundle, action, points, steps, ctx.jobs());
  double worst = 0.0;
  for (const HolonomyReport& r : reps) worst = std::max(worst, r.residual);
  ctx.check_le("holonomy_residual", worst, 1e-4);

  double fixed = 0.0;
  for (const Vec& p : action.fixed_points) fixed = std::max(fixed, std::abs(holonomy(bundle, action, p, steps).shift));
  ctx.check_le("fixed_point_holonomy", fixed, 1e-8);

  std::ostringstream out;
  out << "point,shift,predicted,residual,loop_closure\n";
  for (std::size_t k = 0; k < reps.size(); ++k)
    out << k << ',' << fmt(reps[k].shift) << ',' << fmt(reps[k].predicted) << ',' << fmt(reps[k].residual) << ','
        << fmt(reps[k].loop_closure) << '\n';
  ctx.write_artifact("holonomy.csv", "csv", "holonomy per base point", out.str());
}

// --- suspension-return-map -----------------------------------------------------

std::string return_csv(std::span<const ReturnSample> samples) {
  std::ostringstream out;
  write_return_csv(out, samples);
  return out.str();
}

std::string iterates_dat(const DiscMap& map, std::size_t starts, int iterates) {
  std::ostringstream out;
  out << "# x y, one block per starting point\n";
  for (std::size_t k = 0; k < starts; ++k) {
    Vec2 z(0.95 * (k + 0.5) / static_cast<double>(starts), 0.0);
    for (int i = 0; i < iterates; ++i) {
      out << fmt(z(0)) << ' ' << fmt(z(1)) << '\n';
      z = map(z);
    }
    out << "\n\n";
  }
  return out.str();
}

void run_suspension_return_map(RunContext& ctx) {
  const double c = ctx.params().real("c");
  const double a = ctx.params().real("a");
  const auto count = static_cast<std::size_t>(ctx.params().integer("points"));
  const double t_max = ctx.integrator().t_max;
  const double step = ctx.integrator().step;
  const SectionSpec sec = solid_torus_section();

  const SuspensionModel twist = twist_suspension(c, a);
  const FlowField f = twist.reeb();
  const std::vector<Vec2> pts = disc_points(ctx.rng(0), count, 1.0);

  ctx.phase("twist");
  const double closed = parallel_max(pts.size(), ctx.jobs(), [&](std::size_t k) {
    const Vec p = vec3(0.3, pts[k](0), pts[k](1));
    return (f(p) - vec3(1.0, a * pts[k](1), -a * pts[k](0)) / c).cwiseAbs().maxCoeff();
  });
  ctx.check_le("twist.reeb_closed_form", closed, 1e-9);

  const auto samples = return_map_grid(f, sec, pts, t_max, step, ctx.jobs());
  double time_err = 0.0;
  double map_err = 0.0;
  for (const ReturnSample& s : samples) {
    time_err = std::max(time_err, std::abs(s.ret.time - kTwoPi * c));
    map_err = std::max(map_err, (s.ret.image - rotation2(-kTwoPi * a) * s.z).norm());
  }
  ctx.check_le("twist.return_time", time_err, 1e-6);
  ctx.check_le("twist.rotation", map_err, 1e-6);
  const int area_grid = static_cast<int>(ctx.params().integer("area_grid"));
  const double twist_area = return_disc_map(f, sec, t_max, step).area_defect(area_grid, 1e-4, 0.95);
  ctx.check_le("twist.area_defect", twist_area, 1e-5);
  ctx.write_artifact("twist_return.csv", "csv", "twist return map samples", return_csv(samples));

  const int stages = static_cast<int>(ctx.params().integer("stages"));
  const auto stage_count = static_cast<std::size_t>(ctx.params().integer("stage_points"));
  json stage_info = json::array();
  for (int nu = 1; nu <= stages; ++nu) {
    ctx.phase("stage " + std::to_string(nu));
    const std::string tag = "stage" + std::to_string(nu);
    const DiscMap m = fayad_katok_stage(nu);
    const SuspensionModel s = suspend(m);
    const FlowField g = s.reeb();
    const std::vector<Vec2> zs = disc_points(ctx.rng(10 + nu), stage_count, 0.95);
    const auto ret = return_map_grid(g, sec, zs, t_max, 5e-3, ctx.jobs());
    std::vector<double> oracle(zs.size());
    parallel_for(zs.size(), ctx.jobs(),
                 [&](std::size_t k) { oracle[k] = (ret[k].ret.image - hamiltonian_oracle(s, zs[k])).norm(); });
    double map_gap = 0.0;
    for (std::size_t k = 0; k < zs.size(); ++k) map_gap = std::max(map_gap, (ret[k].ret.image - m(zs[k])).norm());
    ctx.check_le(tag + ".oracle", *std::max_element(oracle.begin(), oracle.end()), 1e-4);
    ctx.check_le(tag + ".prescribed_map", map_gap, 1e-4);
    ctx.check_le(tag + ".map_area_defect", m.area_defect(50, 1e-4, 0.99), 1e-5);
    // A finite stage is conjugate to the rotation by p/q, so every point is
    // q-periodic; report how well the iterates close up rather than claim
    // anything about the limit.
    double q_closure = 0.0;
    for (const Vec2& z : zs) {
      Vec2 w = z;
      for (int k = 0; k < m.q(); ++k) w = m(w);
      q_closure = std::max(q_closure, (w - z).norm());
    }
    ctx.check_le(tag + ".q_periodic_closure", q_closure, 1e-8);
    stage_info.push_back({{"stage", nu},
                          {"p", m.p()},
                          {"q", m.q()},
                          {"b", s.b},
                          {"boundary_width", fk_boundary_width(nu)},
                          {"periodic_structure", "every point has period q (conjugate to rotation by p/q)"},
                          {"q_periodic_closure", q_closure}});
    ctx.write_artifact(tag + "_return.csv", "csv", "return map samples of stage " + std::to_string(nu),
                       return_csv(ret));
    ctx.write_artifact(tag + "_orbits.dat", "dat", "iterates of stage " + std::to_string(nu),
                       iterates_dat(m, 12, 300));
  }
  ctx.results()["stages"] = stage_info;
}

// --- pseudorotation-cut --------------------------------------------------------

void run_pseudorotation_cut(RunContext& ctx) {
  const int nu = static_cast<int>(ctx.params().integer("stage"));
  const auto count = static_cast<std::size_t>(ctx.params().integer("points"));
  const double t_max = ctx.integrator().t_max;
  const DiscMap m = fayad_katok_stage(nu);
  const SuspensionModel s = suspend(m);
  ctx.phase("cut");
  const CutResult cut = cut_to_sphere(s, std::numeric_limits<double>::infinity());
  ctx.results()["b"] = s.b;
  ctx.results()["p"] = m.p();
  ctx.results()["q"] = m.q();
  ctx.check_le("continuity_across_c2", cut.continuity_discrepancy, 1e-5);

  IntegratorConfig bc = ctx.integrator();
  bc.t_max = 30.0;
  const OrbitClass boundary = classify_orbit(cut.field, cut.section.boundary_point(0.3), bc);
  ctx.check_true("boundary_circle_periodic", boundary.tag == OrbitTag::periodic);
  ctx.check_le("boundary_circle_closure", boundary.tag == OrbitTag::periodic ? boundary.residual : 1.0, 1e-6);
  ctx.results()["boundary_period"] = boundary.period;

  ctx.phase("axioms");
  std::vector<Vec> seeds;
  for (const Vec2& z : disc_points(ctx.rng(0), static_cast<std::size_t>(ctx.params().integer("seeds")), 0.99))
    seeds.push_back(cut.atlas.to_sphere(vec3(1.0, z(0), z(1))));
  const AxiomsReport ax = section_axioms_check(cut.field, cut.section, seeds, 50.0, 1e-2, 12, ctx.jobs());
  ctx.check_true("section_boundary_invariant", ax.boundary_ok);
  ctx.check_ge("section_transverse", ax.min_rate, 1e-12);
  ctx.check_eq("section_recurrence_failures", static_cast<double>(ax.recurrence_failures), 0.0);

  ctx.phase("return maps");
  const SectionSpec torus = solid_torus_section();
  const std::vector<Vec2> zs = disc_points(ctx.rng(1), count, 0.9);
  const auto sphere_ret = return_map_grid(cut.field, cut.section, zs, t_max, 5e-3, ctx.jobs());
  const auto torus_ret = return_map_grid(s.reeb(), torus, zs, t_max, 5e-3, ctx.jobs());
  std::vector<double> oracle(zs.size());
  parallel_for(zs.size(), ctx.jobs(),
               [&](std::size_t k) { oracle[k] = (sphere_ret[k].ret.image - hamiltonian_oracle(s, zs[k])).norm(); });
  double agree = 0.0;
  double map_gap = 0.0;
  for (std::size_t k = 0; k < zs.size(); ++k) {
    agree = std::max(agree, (sphere_ret[k].ret.image - torus_ret[k].ret.image).norm());
    map_gap = std::max(map_gap, (sphere_ret[k].ret.image - m(zs[k])).norm());
  }
  ctx.check_le("sphere_return_vs_oracle", *std::max_element(oracle.begin(), oracle.end()), 1e-4);
  ctx.check_le("sphere_return_vs_prescribed_map", map_gap, 1e-4);
  ctx.check_le("sphere_return_vs_torus_return", agree, 1e-5);
  ctx.write_artifact("sphere_return.csv", "csv", "return map of the disc section in S^3", return_csv(sphere_ret));
}

// --- trap-verify / plug-verify -------------------------------------------------

TrapParams trap_params(const ParameterSet& p) {
  TrapParams t;
  t.slope = p.real("slope");
  t.drive_max = p.real("drive_max");
  return t;
}

std::string valid_trap(const ParameterSet& p) {
  try {
    trap_params(p).validate();
  } catch (const ModelError& e) {
    return e.what();
  }
  return {};
}

void run_trap_verify(RunContext& ctx) {
  TrapModel trap;
  try {
    trap = build_trap(trap_params(ctx.params()));
  } catch (const TrapConstructionError& e) {
    ctx.results()["construction_error"] = e.what();
    ctx.results()["construction_witness"] = vec_json(e.point());
    ctx.check_true("trap_construction", false);
    return;
  }
  ctx.check_true("trap_construction", true);
  TrapCheckOptions opt;
  opt.horizon = ctx.params().real("horizon");
  opt.tube = ctx.params().real("tube");
  opt.min_rise = ctx.params().real("min_rise");
  opt.rise_grid = static_cast<int>(ctx.params().integer("rise_grid"));
  opt.seed_grid = static_cast<int>(ctx.params().integer("seed_grid"));
  opt.step = ctx.integrator().step;
  opt.jobs = ctx.jobs();
  ctx.phase("axioms");
  const TrapReport rep = verify_trap_axioms(trap, opt);

  ctx.check_le("flow_box_boundary", rep.flow_box_error, 1e-9);
  ctx.check_ge("rise_off_tube", rep.delta, opt.min_rise);
  ctx.check_true("trapped_certificate", rep.certificate_ok);
  ctx.check_true("no_periodic_orbit_sampled", rep.aperiodic_ok);
  json& res = ctx.results();
  res["seeds"] = rep.seeds;
  res["exits_top"] = rep.exits_top;
  res["trapped"] = rep.trapped;
  res["undetermined"] = rep.undetermined;
  res["rise_witness"] = vec_json(rep.rise_witness);
  if (rep.periodic_witness) res["periodic_witness"] = vec_json(*rep.periodic_witness);
  if (rep.certificate) {
    res["certificate"] = {{"seed", vec_json(rep.certificate->seed)},
                          {"horizon", rep.certificate->horizon},
                          {"region", rep.certificate->region},
                          {"final_torus_distance", rep.certificate->final_torus_distance}};

    ctx.phase("certificate trace");
    IntegratorConfig c = ctx.integrator();
    c.t_max = opt.horizon;
    c.record_every = 100;
    const OrbitTrace tr = integrate(trap.field(), rep.certificate->seed, c);
    std::ostringstream out;
    out << "# t r1 r2 z torus_distance\n";
    for (std::size_t k = 0; k < tr.states.size(); ++k) {
      const Vec& x = tr.states[k];
      out << fmt(tr.times[k]) << ' ' << fmt(std::hypot(x(0), x(1))) << ' ' << fmt(std::hypot(x(2), x(3))) << ' '
          << fmt(x(4)) << ' ' << fmt(TrapModel::torus_distance(x)) << '\n';
    }
    ctx.write_artifact("certificate.dat", "dat", "trapped certificate orbit", out.str());
  }
}

void run_plug_verify(RunContext& ctx) {
  const PlugModel plug = double_to_plug(build_trap(trap_params(ctx.params())));
  ctx.check_le("gluing_discrepancy", plug.gluing_discrepancy, 1e-10);
  PlugGrid grid;
  grid.n = static_cast<int>(ctx.params().integer("grid"));
  grid.r_min = ctx.params().real("r_min");
  grid.r_max = ctx.params().real("r_max");
  const double horizon = ctx.params().real("horizon");
  const double tol = ctx.params().real("tolerance");
  const double step = ctx.integrator().step;

  ctx.phase("entry grid");
  const std::vector<Vec> entries = grid.points(plug.height);
  const PlugReport rep = verify_plug_matching(plug, entries, horizon, tol, step, ctx.jobs());
  ctx.check_eq("mismatched_exits", static_cast<double>(rep.mismatched), 0.0);
  ctx.check_eq("undetermined_entries", static_cast<double>(rep.undetermined), 0.0);
  ctx.check_le("max_exit_mismatch", rep.max_mismatch, tol);

  ctx.phase("trapped entry");
  const Vec trapped_entry = plug_trapped_entry(plug);
  const std::vector<Vec> one = {trapped_entry};
  const PlugReport tr = verify_plug_matching(plug, one, horizon, tol, step, 1);
  ctx.check_true("trapped_entry_exists", tr.entries[0].outcome == PlugOutcome::trapped);

  json& res = ctx.results();
  res["entries"] = rep.entries.size();
  res["trapped"] = rep.trapped;
  res["matched"] = rep.matched;
  res["trapped_entry"] = vec_json(trapped_entry);
  if (rep.witness) res["witness"] = vec_json(*rep.witness);

  std::ostringstream csv;
  std::ostringstream dat;
  csv << "entry,r1,r2,outcome,exit_time,mismatch\n";
  dat << "# r1 r2 outcome(0 trapped, 1 matched, 2 mismatched, 3 undetermined)\n";
  for (std::size_t k = 0; k < rep.entries.size(); ++k) {
    const PlugEntry& e = rep.entries[k];
    const double r1 = std::hypot(e.entry(0), e.entry(1));
    const double r2 = std::hypot(e.entry(2), e.entry(3));
    csv << k << ',' << fmt(r1) << ',' << fmt(r2) << ',' << to_string(e.outcome) << ',' << fmt(e.exit_time) << ','
        << fmt(e.mismatch) << '\n';
    dat << fmt(r1) << ' ' << fmt(r2) << ' ' << static_cast<int>(e.outcome) << '\n';
    if (grid.n > 0 && (k + 1) % static_cast<std::size_t>(grid.n) == 0) dat << '\n';
  }
  ctx.write_artifact("plug_entries.csv", "csv", "entry grid outcomes", csv.str());
  ctx.write_artifact("plug_entries.dat", "dat", "entry grid outcomes for a heat map", dat.str());
}

// --- identity-suite ------------------------------------------------------------

struct IdentityCase {
  std::string name;
  ContactModel model;
  ScalarField h;   // positive, analytic gradient
  VectorFieldFn x;  // a contact vector field
  std::vector<Vec> points;
};

Vec vec4(double a, double b, double c, double d) {
  Vec v(4);
  v << a, b, c, d;
  return v;
}

void run_identity_suite(RunContext& ctx) {
  const auto count = static_cast<std::size_t>(ctx.params().integer("points"));
  const auto vol_count = static_cast<std::size_t>(ctx.params().integer("volume_points"));
  const int jobs = ctx.jobs();

  std::vector<IdentityCase> cases;
  {
    const ContactModel m = s3_ellipsoid(0.3);
    const ScalarField h([](const Vec& p) { return 1.5 + p(0) * p(3) + 0.5 * p(1) * p(1); },
                        [](const Vec& p) { return vec4(p(3), p(1), 0.0, p(0)); });
    // Weighted rotations preserve alpha.
    const VectorFieldFn x = [](const Vec& p) { return vec4(-2.0 * p(1), 2.0 * p(0), p(3), -p(2)); };
    cases.push_back({"s3_ellipsoid", m, h, x, random_seeds(m, count, ctx.substream_seed(0))});
  }
  {
    const ContactModel m = r3_standard();
    const ScalarField h(
        [](const Vec& p) { return 1.5 + 0.3 * std::sin(p(0)) * p(1) + 0.2 * std::cos(p(2)) + 0.1 * p(0) * p(2); },
        [](const Vec& p) {
          return vec3(0.3 * std::cos(p(0)) * p(1) + 0.1 * p(2), 0.3 * std::sin(p(0)), -0.2 * std::sin(p(2)) + 0.1 * p(0));
        });
    // X_K for K = 1 + x y / 4, not strict.
    const ScalarField k([](const Vec& p) { return 1.0 + 0.25 * p(0) * p(1); },
                        [](const Vec& p) { return vec3(0.25 * p(1), 0.25 * p(0), 0.0); });
    std::mt19937_64 rng = ctx.rng(1);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<Vec> pts;
    for (std::size_t i = 0; i < count; ++i) pts.push_back(vec3(u(rng), u(rng), u(rng)));
    cases.push_back({"r3_standard", m, h, hamiltonian_vector_field(m, k), pts});
  }
  {
    const ContactModel m = suspension_form(twist_hamiltonian(2.0, 0.5));
    const ScalarField h([](const Vec& p) { return 2.0 + 0.3 * std::sin(p(0)) * p(1) + 0.2 * p(2) * p(2); },
                        [](const Vec& p) { return vec3(0.3 * std::cos(p(0)) * p(1), 0.3 * std::sin(p(0)), 0.4 * p(2)); });
    const VectorFieldFn x = [](const Vec& p) { return vec3(0.0, -p(2), p(1)); };
    cases.push_back({"suspension", m, h, x, random_seeds(m, count, ctx.substream_seed(2))});
  }

  json residuals = json::object();
  for (const IdentityCase& c : cases) {
    ctx.phase(c.name);
    const ContactModel scaled = c.model.rescaled(c.h);
    const ScalarField hx = hamiltonian_of_field(c.model, c.x);
    std::vector<std::array<double, 4>> r(c.points.size());
    parallel_for(c.points.size(), jobs, [&](std::size_t i) {
      const Vec p = c.model.project(c.points[i]);
      const Vec xh = field_of_hamiltonian(c.model, c.h, p).coefficients;
      r[i][0] = std::abs(c.model.alpha(p).dot(xh) - c.h(p));
      r[i][1] = (field_of_hamiltonian(c.model, hx, p).coefficients - c.x(p)).cwiseAbs().maxCoeff();
      r[i][2] = lie_derivative_check(c.model, c.h, p).residual;
      r[i][3] = (reeb_field(scaled, p).coefficients - xh).cwiseAbs().maxCoeff();
    });
    std::array<double, 4> worst{};
    for (const auto& row : r)
      for (int j = 0; j < 4; ++j) worst[j] = std::max(worst[j], row[j]);
    ctx.check_le(c.name + ".round_trip_h", worst[0], 1e-10);
    ctx.check_le(c.name + ".round_trip_x", worst[1], 1e-10);
    ctx.check_le(c.name + ".lie_derivative", worst[2], 1e-4);
    ctx.check_le(c.name + ".rescale", worst[3], 1e-8);
    residuals[c.name] = {{"round_trip_h", worst[0]},
                         {"round_trip_x", worst[1]},
                         {"lie_derivative", worst[2]},
                         {"rescale", worst[3]}};
  }

  ctx.phase("momentum");
  {
    const ContactModel susp = suspension_form(twist_hamiltonian(2.0, 0.5));
    const ContactModel round = sphere_round(1);
    const auto sp = random_seeds(susp, count, ctx.substream_seed(3));
    const auto rp = random_seeds(round, count, ctx.substream_seed(4));
    const VectorFieldFn dtheta = [](const Vec& p) { return vec3(0.0, -p(2), p(1)); };
    const VectorFieldFn rot = [](const Vec& p) { return vec4(-p(1), p(0), -3.0 * p(3), 3.0 * p(2)); };
    ctx.check_le("suspension.momentum_identity",
                 parallel_max(sp.size(), jobs, [&](std::size_t i) { return verify_momentum_identity(susp, dtheta, sp[i]); }),
                 1e-6);
    ctx.check_le("sphere.momentum_identity",
                 parallel_max(rp.size(), jobs, [&](std::size_t i) { return verify_momentum_identity(round, rot, rp[i]); }),
                 1e-6);
  }

  ctx.phase("volume");
  {
    const ContactModel ell = s3_ellipsoid(kGolden);
    const ContactModel susp = suspension_form(twist_hamiltonian(2.0, 0.5));
    const auto ep = random_seeds(ell, vol_count, ctx.substream_seed(5));
    const auto sp = random_seeds(susp, vol_count, ctx.substream_seed(6));
    const VectorFieldFn re = reeb_vector_field(ell);
    const VectorFieldFn rs = reeb_vector_field(susp);
    ctx.check_le("s3_ellipsoid.volume_ratio",
                 parallel_max(ep.size(), jobs,
                              [&](std::size_t i) { return std::abs(contact_volume_ratio(ell, re, ep[i], 1.0, 50) - 1.0); }),
                 1e-6);
    ctx.check_le("suspension.volume_ratio",
                 parallel_max(sp.size(), jobs,
                              [&](std::size_t i) { return std::abs(contact_volume_ratio(susp, rs, sp[i], 1.0, 50) - 1.0); }),
                 1e-6);
  }
  ctx.results()["residuals"] = residuals;
}

// --- registry ------------------------------------------------------------------

std::vector<ScenarioKind> build_kinds() {
  std::vector<ScenarioKind> k;

  k.push_back({"ellipsoid-census",
               "Reeb flow of the S^3 ellipsoid form; counts distinct periodic orbits over random and axis seeds",
               {real_param("eps", kGolden, "ellipsoid parameter; frequencies 1 and 1 + eps", above(-1.0)),
                int_param("seeds", 200, 1, 100000, "random seeds (two axis seeds are always added)")},
               integrator_with(200.0),
               {},
               run_ellipsoid_census});

  k.push_back({"hopf",
               "round S^3: every Reeb orbit is a Hopf fibre of period 2 pi",
               {int_param("seeds", 50, 1, 100000, "random seeds")},
               integrator_with(20.0),
               {},
               run_hopf});

  k.push_back({"boothby-wang",
               "perturbed lifted circle action on S^{2n+1} over CP^n; expects n + 1 periodic orbits",
               {int_param("n", 2, 1, 2, "complex dimension of the base CP^n"), weights_param({1, 2}),
                real_param("eps", 1.0 / std::sqrt(2.0), "Reeb perturbation; irrational in intent", above(0.0)),
                int_param("seeds", 30, 1, 100000, "random census seeds (the fixed points are added)"),
                int_param("samples", 200, 1, 100000, "sample points for the strictness and commutation checks")},
               integrator_with(100.0),
               weights_match_n,
               run_boothby_wang});

  k.push_back({"holonomy",
               "horizontal transport around circle-action orbits compared with 2 pi H",
               {int_param("n", 1, 1, 2, "complex dimension of the base CP^n"), weights_param({1}),
                real_param("offset", 0.0, "constant added to the momentum map"),
                int_param("points", 50, 1, 100000, "random base points"),
                int_param("steps", 2000, 100, 1000000, "transport steps per loop")},
               integrator_with(10.0),
               weights_match_n,
               run_holonomy});

  k.push_back(
      {"suspension-return-map",
       "return maps of suspended twist maps and disc-map approximants on the solid torus",
       {real_param("c", 2.0, "twist Hamiltonian H = c + a r^2: constant term", above(0.0)),
        real_param("a", 0.5, "twist Hamiltonian: r^2 coefficient; the return map rotates by -2 pi a"),
        int_param("points", 100, 1, 100000, "random disc points for the twist"),
        int_param("area_grid", 10, 2, 200, "grid per axis for the twist return-map area check"),
        int_param("stages", 3, 0, 3, "approximant stages 1..stages to suspend"),
        int_param("stage_points", 12, 1, 10000, "random disc points per stage")},
       integrator_with(200.0),
       [](const ParameterSet& p) {
         const double boundary = p.real("c") + p.real("a");
         if (!(boundary >= 0.5)) return std::string("c + a must be at least 1/2 (H > 0 and a nonzero boundary slope)");
         return std::string();
       },
       run_suspension_return_map});

  k.push_back({"pseudorotation-cut",
               "suspended approximant cut onto S^3; section axioms and agreement of the return maps",
               {int_param("stage", 2, 0, 3, "approximant stage"),
                int_param("points", 8, 1, 10000, "random disc points for the return-map comparisons"),
                int_param("seeds", 10, 1, 10000, "seeds for the recurrence axiom")},
               integrator_with(200.0),
               {},
               run_pseudorotation_cut});

  k.push_back({"trap-verify",
               "the shipped trap candidate in R^5: flow-box boundary, rise, trapped certificate and aperiodicity",
               {real_param("slope", 1.0 / std::sqrt(2.0), "slope s of the linear flow on the trapped torus",
                           within(0.3, 1.0)),
                real_param("drive_max", 0.05, "saturation of the drive along the trapped cylinder", above(0.0)),
                real_param("horizon", 1e3, "certificate horizon", above(0.0)),
                real_param("tube", 0.1, "radius of the tube around the torus excluded from the rise check", above(0.0)),
                real_param("min_rise", 0.01, "required lower bound on dz(X) off the tube", above(0.0)),
                int_param("rise_grid", 24, 2, 400, "rise grid points per axis"),
                int_param("seed_grid", 4, 1, 40, "aperiodicity seeds per axis")},
               integrator_with(1e3),
               valid_trap,
               run_trap_verify});

  k.push_back({"plug-verify",
               "doubled trap: every entry orbit is trapped or leaves at its entry position",
               {real_param("slope", 1.0 / std::sqrt(2.0), "slope of the trap", within(0.3, 1.0)),
                real_param("drive_max", 0.05, "drive saturation of the trap", above(0.0)),
                int_param("grid", 20, 1, 1000, "entry grid points per axis"),
                real_param("r_min", 0.1, "smallest entry radius", above(0.0)),
                real_param("r_max", 2.0, "largest entry radius", above(0.0)),
                real_param("horizon", 1e3, "trapping horizon", above(0.0)),
                real_param("tolerance", 1e-6, "exit mismatch tolerance", above(0.0))},
               integrator_with(1e3),
               [](const ParameterSet& p) {
                 if (p.real("r_min") >= p.real("r_max")) return std::string("r_min must be below r_max");
                 return valid_trap(p);
               },
               run_plug_verify});

  k.push_back({"identity-suite",
               "contact-Hamiltonian round trips, Lie derivative, rescaling, momentum and volume identities",
               {int_param("points", 1000, 1, 1000000, "random points per model"),
                int_param("volume_points", 20, 1, 100000, "points for the time-1 volume check")},
               integrator_with(1.0),
               {},
               run_identity_suite});
  return k;
}

}  // namespace

const std::vector<ScenarioKind>& scenario_kinds() {
  static const std::vector<ScenarioKind> kinds = build_kinds();
  return kinds;
}

}  // namespace reeblab::cli
