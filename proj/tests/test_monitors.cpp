#include <catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"

using namespace odstokes;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct Setup {
  TaylorHoodSpace space;
  ConstrainedOperators ops;
  explicit Setup(Mesh m) : space(std::move(m)), ops(apply_noslip(assemble_operators(space), space)) {}
  Vector field(const std::function<Point(double, double)>& f) const {
    return ops.restrict_to_free(interpolate(space, [&](const Point& x, double) { return f(x.x(), x.y()); }));
  }
};

/// Unit square whose four sides are all open sections, so no dof is constrained.
Mesh open_square() {
  Mesh m = build_channel(1, 1, 2, 2);
  for (auto& e : m.boundary_edges)
    if (e.tag.is_wall()) e.tag = BoundaryTag::outlet(m.vertices[e.a].y() < 0.5 ? 3 : 4);
  detail::finalize_normals(m);
  return m;
}

RunConfig run_config(double T, double dt, Signal s1, Signal s2) {
  RunConfig rc;
  rc.T = T;
  rc.dt = dt;
  rc.outlets = {OutletSpec{1, 1.0, 0.1, s1.with_horizon(T)}, OutletSpec{2, 0.5, 0.2, s2.with_horizon(T)}};
  return rc;
}

VectorField vortex(Point c, double amp) {
  return [c, amp](const Point& x, double) {
    const Point d = x - c;
    const double g = amp * std::exp(-d.squaredNorm() / 0.1);
    return Point(-d.y() * g, d.x() * g);
  };
}

std::vector<MonitorRecord> monitored_run(const StokesSolver& solver) {
  const Monitor monitor(solver);
  std::vector<MonitorRecord> out;
  solver.run([&](const SystemState& s) { out.push_back(monitor.record(s)); });
  monitor.fill_residuals(out);
  return out;
}

}  // namespace

TEST_CASE("energy functional") {
  const Setup s(open_square());
  REQUIRE(s.ops.num_free() == s.space.num_velocity_dofs());
  const std::vector<double> zero(4, 0.0), gamma{0.1, 0.2, 0.3, 0.4};
  CHECK(energy(s.ops, Vector::Zero(s.ops.num_free()), gamma) == 0.0);
  const Vector one = s.field([](double, double) { return Point(1, 0); });
  CHECK_THAT(energy(s.ops, one, zero), WithinAbs(0.5, 1e-12));
  const Vector v = s.field([](double x, double y) { return Point(x * y, 1 - x); });
  double trace = 0.0;
  for (int k = 0; k < 4; ++k) trace += 0.5 * gamma[k] * v.dot(s.ops.outlet_mass[k] * v);
  CHECK_THAT(energy(s.ops, v, gamma) - energy(s.ops, v, zero), WithinAbs(trace, 1e-12));
  CHECK_THAT(energy(s.ops, 2.0 * v, gamma), WithinRel(4.0 * energy(s.ops, v, gamma), 1e-14));
}

TEST_CASE("dissipation functional") {
  const Setup s(build_channel(2, 1, 4, 2));
  const std::vector<double> lambda{1.0, 0.5};
  CHECK(dissipation(s.ops, Vector::Zero(s.ops.num_free()), 1.0, lambda) == 0.0);
  const Vector v = s.field([](double x, double y) { return Point(y * (1 - y) * (1 + x), x * y); });
  const double d = dissipation(s.ops, v, 1.0, lambda);
  CHECK(d >= 0.0);
  CHECK_THAT(dissipation(s.ops, 2.0 * v, 1.0, lambda), WithinRel(4.0 * d, 1e-12));
  CHECK(dissipation(s.ops, v, 2.0, {0.0, 0.0}) == 2.0 * dissipation(s.ops, v, 1.0, {0.0, 0.0}));
}

TEST_CASE("flux functional") {
  const Setup s(open_square());
  const Vector tangential = s.field([](double, double y) { return Point(0, 1 + y); });
  CHECK_THAT(flux(s.ops, tangential, 1), WithinAbs(0.0, 1e-12));
  const Vector normal = s.field([](double, double) { return Point(-1, 0); });
  CHECK_THAT(flux(s.ops, normal, 1), WithinAbs(1.0, 1e-12));

  const Setup b(build_bifurcation(BifurcationParams{}));
  const DenseMatrix kernel = divergence_kernel(b.ops);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> dist;
  for (int trial = 0; trial < 10; ++trial) {
    Vector c(kernel.cols());
    for (auto& x : c) x = dist(rng);
    const Vector v = kernel * c;
    const double sum = flux(b.ops, v, 1) + flux(b.ops, v, 2) + flux(b.ops, v, 3);
    CHECK(std::abs(sum) <= 1e-9 * std::max(1.0, v.norm()));
  }
}

TEST_CASE("energy balance of a zero-data run") {
  const Setup s(build_channel(2, 1, 4, 2));
  const StokesSolver solver(s.space, s.ops, run_config(1.0, 0.1, Signal::constant(0), Signal::constant(0)));
  const auto rec = monitored_run(solver);
  const auto rep = energy_balance_report(rec, 0.1);
  for (double r : rep.residual) CHECK(std::abs(r) <= 1e-12);
  CHECK(rep.inequality_holds);
  for (const auto& r : rec) {
    CHECK(r.E == 0.0);
    CHECK(r.D == 0.0);
    CHECK(r.power == 0.0);
  }
}

TEST_CASE("energy balance of a decaying run") {
  const Setup s(build_channel(2, 1, 6, 3));
  RunConfig rc = run_config(3.0, 0.03, Signal::constant(0), Signal::constant(0));
  rc.initial = vortex({1.0, 0.5}, 2.0);
  const StokesSolver solver(s.space, s.ops, rc);
  const auto rec = monitored_run(solver);
  const auto rep = energy_balance_report(rec, rc.dt);
  CHECK(rep.energy_monotone);
  CHECK(rep.inequality_holds);
  for (std::size_t n = 1; n < rec.size(); ++n) CHECK(rec[n].E < rec[n - 1].E);
  CHECK(rep.dissipated <= rec.front().E * (1.0 + 1e-9));
  CHECK(rep.dissipated > 0.5 * rec.front().E);
  for (const auto& r : rec) {
    CHECK(r.E >= 0.0);
    CHECK(r.D >= 0.0);
  }
}

TEST_CASE("energy balance of a forced run") {
  const Setup s(build_channel(2, 1, 4, 2));
  RunConfig rc = run_config(2.0, 0.02, Signal::sinusoid(1.0, 3.0), Signal::smooth_step(0, -1, 0.2, 1.0));
  rc.forcing = [](const Point& x, double t) { return Point(std::cos(t), x.x() * 0.3); };
  rc.initial = vortex({0.6, 0.5}, 1.0);
  const StokesSolver solver(s.space, s.ops, rc);
  const auto rec = monitored_run(solver);
  const auto rep = energy_balance_report(rec, rc.dt);
  CHECK(rep.inequality_holds);
  CHECK(rep.first_violation == -1);
  CHECK(mass_balance_defect(rec) <= 1e-9);
  for (const auto& r : rec)
    for (double x : r.r) CHECK(std::isfinite(x));
}

TEST_CASE("energy balance flags a violation") {
  std::vector<MonitorRecord> rec(3);
  rec[0].E = 1.0;
  rec[1].E = 0.9;
  rec[2].E = 1.2;
  const auto rep = energy_balance_report(rec, 0.1);
  CHECK_FALSE(rep.inequality_holds);
  CHECK_FALSE(rep.energy_monotone);
  CHECK(rep.first_violation == 2);
}

TEST_CASE("uniqueness and cross-path equivalence") {
  const Setup s(build_channel(2, 1, 4, 2));
  RunConfig rc = run_config(0.5, 0.05, Signal::sinusoid(1.0, 2.0, 0.5), Signal::ramp(0.2, -0.4));
  rc.forcing = [](const Point& x, double t) { return Point(1.0 + t, std::sin(x.x())); };
  rc.initial = vortex({1.0, 0.5}, 1.0);
  for (double theta : {1.0, 0.5}) {
    rc.theta = theta;
    const auto v = zero_data_uniqueness_test(s.space, s.ops, rc);
    CHECK(v.solver_zero_exact);
    CHECK(v.galerkin_zero_exact);
    CHECK(v.cross_path_difference <= 1e-7);
    CHECK(v.pass());
  }
}

TEST_CASE("manufactured forcing matches finite differences of the exact fields") {
  ChannelManufactured mf;
  mf.length = 2.0;
  mf.height = 1.0;
  mf.nu = 0.7;
  const ExactSolution ex = mf.solution(2.0);
  const double h = 1e-3;
  for (const Point& x : {Point(0.3, 0.2), Point(1.1, 0.7), Point(1.9, 0.45)})
    for (double t : {0.1, 0.8, 1.7}) {
      const auto vel = [&](Point p, double s) { return ex.velocity(p, s); };
      const Point dx(h, 0), dy(0, h);
      const Point vt = (vel(x, t + h) - vel(x, t - h)) / (2 * h);
      const Point lap = (vel(x + dx, t) + vel(x - dx, t) + vel(x + dy, t) + vel(x - dy, t) - 4.0 * vel(x, t)) / (h * h);
      const Point gp((ex.pressure(x + dx, t) - ex.pressure(x - dx, t)) / (2 * h),
                     (ex.pressure(x + dy, t) - ex.pressure(x - dy, t)) / (2 * h));
      const Point f = vt - ex.nu * lap + gp;
      const Point g = ex.forcing(x, t);
      CHECK_THAT(g.x(), WithinAbs(f.x(), 1e-4 * (1 + std::abs(f.x()))));
      CHECK_THAT(g.y(), WithinAbs(f.y(), 1e-4 * (1 + std::abs(f.y()))));
      const Eigen::Matrix2d j = ex.gradient(x, t);
      const Point jx = (vel(x + dx, t) - vel(x - dx, t)) / (2 * h);
      const Point jy = (vel(x + dy, t) - vel(x - dy, t)) / (2 * h);
      CHECK_THAT(j(0, 0), WithinAbs(jx.x(), 1e-5));
      CHECK_THAT(j(1, 0), WithinAbs(jx.y(), 1e-5));
      CHECK_THAT(j(0, 1), WithinAbs(jy.x(), 1e-5));
      CHECK_THAT(j(1, 1), WithinAbs(jy.y(), 1e-5));
      CHECK_THAT(j.trace(), WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("manufactured solution satisfies the outlet boundary conditions") {
  ChannelManufactured mf;
  mf.length = 2.0;
  const ExactSolution ex = mf.solution(2.0);
  const double h = 1e-5;
  for (int k = 1; k <= 2; ++k) {
    const Point n = k == 1 ? Point(-1, 0) : Point(1, 0);
    const Point tau(-n.y(), n.x());
    const double xb = k == 1 ? 0.0 : mf.length;
    const auto& o = ex.outlets[k - 1];
    for (double y : {0.0, 0.25, 0.5, 0.9})
      for (double t : {0.2, 1.0, 1.5}) {
        const Point x(xb, y);
        const Eigen::Matrix2d j = ex.gradient(x, t);
        const double vn = ex.velocity(x, t).dot(n);
        const double vn_t = (ex.velocity(x, t + h).dot(n) - ex.velocity(x, t - h).dot(n)) / (2 * h);
        const double normal = ex.pressure(x, t) - ex.nu * n.dot(j * n);
        CHECK_THAT(normal, WithinAbs(o.signal.eval(t) + o.lambda * vn + o.gamma * vn_t, 1e-8));
        CHECK_THAT(tau.dot(j * n), WithinAbs(0.0, 1e-12));
      }
  }
}

TEST_CASE("manufactured study rejects a field that is not divergence-free") {
  ChannelManufactured mf;
  ExactSolution ex = mf.solution(0.1);
  ex.velocity = [](const Point& x, double) { return Point(x.x(), 0.0); };
  ex.gradient = [](const Point&, double) {
    Eigen::Matrix2d j = Eigen::Matrix2d::Zero();
    j(0, 0) = 1.0;
    return j;
  };
  CHECK_THROWS_AS(manufactured_solution_study(ex, {{build_channel(1, 1, 2, 2), 0.05}}, 0.1, 1.0, StudyAxis::space),
                  InvalidParameter);
  CHECK_THROWS_AS(manufactured_solution_study(mf.solution(0.1), {}, 0.1, 1.0, StudyAxis::space), InvalidParameter);
}

TEST_CASE("manufactured study tables") {
  ChannelManufactured mf;
  const ExactSolution ex = mf.solution(0.02);
  SECTION("one level reports errors only") {
    const auto t = manufactured_solution_study(ex, {{build_channel(1, 1, 2, 2), 0.01}}, 0.02, 0.5, StudyAxis::space);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0].err_l2 > 0.0);
    CHECK(std::isnan(t.rows[0].order_l2));
    CHECK(std::isnan(t.rows[0].order_h1));
  }
  SECTION("two spatial levels decrease the error") {
    const Mesh base = build_channel(1, 1, 2, 2);
    const auto t = manufactured_solution_study(ex, {{base, 0.005}, {refine_uniform(base), 0.005}}, 0.02, 0.5,
                                               StudyAxis::space);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.monotone());
    CHECK(t.rows[1].order_l2 > 2.0);
    CHECK(t.rows[1].order_h1 > 1.0);
  }
}
