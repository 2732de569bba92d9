#include <catch_amalgamated.hpp>

#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"

using namespace odstokes;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct Fixture {
  TaylorHoodSpace space;
  AssembledOperators ops;
  explicit Fixture(Mesh m) : space(std::move(m)), ops(assemble_operators(space)) {}
  Vector field(const std::function<Point(double, double)>& f) const {
    return interpolate(space, [&](const Point& x, double) { return f(x.x(), x.y()); });
  }
};

Fixture unit_square(int n = 2) { return Fixture(build_channel(1, 1, n, n)); }

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

Mesh all_wall(Mesh m) {
  for (auto& e : m.boundary_edges) e.tag = BoundaryTag::wall();
  m.outlet_normals.clear();
  return m;
}

}  // namespace

TEST_CASE("triangle rules integrate monomials exactly") {
  // reference triangle (0,0),(1,0),(0,1): integral of x^a y^b = a! b! / (a+b+2)!
  for (int a = 0; a <= 5; ++a)
    for (int b = 0; a + b <= 5; ++b) {
      const double exact = factorial(a) * factorial(b) / factorial(a + b + 2);
      double q5 = 0.0;
      for (const auto& q : quadrature::triangle_degree5()) q5 += 0.5 * q.weight * std::pow(q.bary[1], a) * std::pow(q.bary[2], b);
      CHECK_THAT(q5, WithinAbs(exact, 1e-15));
      if (a + b <= 4) {
        double q4 = 0.0;
        for (const auto& q : quadrature::triangle_degree4())
          q4 += 0.5 * q.weight * std::pow(q.bary[1], a) * std::pow(q.bary[2], b);
        CHECK_THAT(q4, WithinAbs(exact, 1e-15));
      }
    }
  for (int p = 0; p <= 5; ++p) {
    double s = 0.0;
    for (const auto& q : quadrature::line_gauss3()) s += q.weight * std::pow(q.s, p);
    CHECK_THAT(s, WithinAbs(1.0 / (p + 1), 1e-15));
  }
}

TEST_CASE("dof counts") {
  for (const Mesh& m : {build_channel(1, 1, 1, 1), build_channel(3, 1, 6, 2), build_bifurcation(BifurcationParams{})}) {
    const TaylorHoodSpace s(m);
    CHECK(s.num_velocity_dofs() == 2 * static_cast<int>(m.vertices.size() + m.num_edges()));
    CHECK(s.num_pressure_dofs() == static_cast<int>(m.vertices.size()));
  }
}

TEST_CASE("mass matrix") {
  const auto f = unit_square();
  const SparseMatrix& M = f.ops.mass;
  const Vector one = f.field([](double, double) { return Point(1, 0); });
  CHECK_THAT(one.dot(M * one), WithinAbs(1.0, 1e-12));
  CHECK(oracle::max_asymmetry(M) == 0.0);
  const Vector x = f.field([](double x, double) { return Point(x, 0); });
  CHECK_THAT(x.dot(M * x), WithinAbs(1.0 / 3.0, 1e-12));
  const Vector xy = f.field([](double x, double y) { return Point(x * y, y * y); });
  // int x^2 y^2 + y^4 over the unit square
  CHECK_THAT(xy.dot(M * xy), WithinAbs(1.0 / 9.0 + 1.0 / 5.0, 1e-12));
}

TEST_CASE("stiffness matrix") {
  const auto f = unit_square();
  const SparseMatrix& K = f.ops.stiffness;
  const Vector c = f.field([](double, double) { return Point(0.3, -2.0); });
  CHECK((K * c).cwiseAbs().maxCoeff() <= 1e-12);
  const Vector y = f.field([](double, double y) { return Point(y, 0); });
  CHECK_THAT(y.dot(K * y), WithinAbs(1.0, 1e-12));
  const Vector q = f.field([](double x, double y) { return Point(x * x, x * y); });
  // |grad|^2 = 4x^2 + y^2 + x^2
  CHECK_THAT(q.dot(K * q), WithinAbs(5.0 / 3.0 + 1.0 / 3.0, 1e-12));
  CHECK(oracle::max_asymmetry(K) == 0.0);
  CHECK(oracle::min_eig(oracle::dense(K)) >= -1e-10);
}

TEST_CASE("divergence coupling") {
  const auto f = unit_square();
  const SparseMatrix& B = f.ops.divergence;
  const Vector sol = f.field([](double x, double y) { return Point(x, -y); });
  CHECK((B * sol).cwiseAbs().maxCoeff() <= 1e-12);
  const Vector x = f.field([](double x, double) { return Point(x, 0); });
  const Vector ones = Vector::Ones(B.rows());
  CHECK_THAT(ones.dot(B * x), WithinAbs(1.0, 1e-12));
  // q = x against v = (x^2, 0): int x * 2x = 2/3
  Vector qx(B.rows());
  for (int i = 0; i < qx.size(); ++i) qx[i] = f.space.mesh().vertices[i].x();
  const Vector x2 = f.field([](double x, double) { return Point(x * x, 0); });
  CHECK_THAT(qx.dot(B * x2), WithinAbs(2.0 / 3.0, 1e-12));
}

TEST_CASE("rank of the constrained divergence operator") {
  SECTION("open sections: full rank") {
    for (const Mesh& m : {build_channel(1, 1, 1, 1), build_channel(1, 1, 2, 2), build_channel(2, 1, 3, 2)}) {
      const TaylorHoodSpace s(m);
      const auto c = apply_noslip(assemble_operators(s), s);
      CHECK(oracle::rank(oracle::dense(c.divergence)) == c.num_pressure());
    }
  }
  SECTION("all-wall boundary: deficiency one") {
    for (const Mesh& m : {build_channel(1, 1, 2, 2), build_channel(2, 1, 3, 2)}) {
      const TaylorHoodSpace s(all_wall(m));
      const auto c = apply_noslip(assemble_operators(s), s);
      CHECK(oracle::rank(oracle::dense(c.divergence)) == c.num_pressure() - 1);
    }
  }
}

TEST_CASE("outlet normal mass") {
  const auto f = unit_square();
  const SparseMatrix& G1 = f.ops.outlet_mass[0];
  const SparseMatrix& G2 = f.ops.outlet_mass[1];
  const Vector normal1 = f.field([](double, double) { return Point(-1, 0); });
  CHECK_THAT(normal1.dot(G1 * normal1), WithinAbs(1.0, 1e-12));
  const Vector tangential = f.field([](double x, double y) { return Point(0, 1 + x + y * y); });
  CHECK((G1 * tangential).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((G2 * tangential).cwiseAbs().maxCoeff() <= 1e-12);
  const Vector arclength = f.field([](double, double y) { return Point(y, 0); });
  CHECK_THAT(arclength.dot(G2 * arclength), WithinAbs(1.0 / 3.0, 1e-12));
  CHECK(oracle::max_asymmetry(G1) == 0.0);
  CHECK(oracle::min_eig(oracle::dense(G2)) >= -1e-12);

  // support only on outlet trace dofs
  std::set<int> trace;
  for (const auto& e : f.space.trace_edges())
    if (e.tag.outlet_index() == 2)
      for (int n : {e.a, e.mid, e.b})
        for (int c = 0; c < 2; ++c) trace.insert(TaylorHoodSpace::velocity_dof(n, c));
  for (int col = 0; col < G2.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(G2, col); it; ++it)
      if (it.value() != 0.0) {
        CHECK(trace.count(static_cast<int>(it.row())) == 1);
        CHECK(trace.count(static_cast<int>(it.col())) == 1);
      }
}

TEST_CASE("outlet flux functional") {
  const auto f = Fixture(build_bifurcation(BifurcationParams{}));
  for (int k = 1; k <= 3; ++k) {
    const Point n = f.space.mesh().outlet_normal(k);
    const Vector& b = f.ops.outlet_source[k - 1];
    const Vector normal = f.field([n](double, double) { return n; });
    CHECK_THAT(b.dot(normal), WithinRel(f.space.mesh().outlet_length(k), 1e-12));
    const Vector tangential = f.field([n](double x, double) { return Point(-n.y(), n.x()) * (1 + x); });
    CHECK_THAT(b.dot(tangential), WithinAbs(0.0, 1e-12));
    CHECK((f.ops.outlet_mass[k - 1] * tangential).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("flux matches an edge-by-edge recomputation for random fields") {
  const auto f = Fixture(refine_uniform(build_bifurcation(BifurcationParams{})));
  std::mt19937_64 rng(7);
  std::normal_distribution<double> dist;
  for (int trial = 0; trial < 5; ++trial) {
    Vector v(f.space.num_velocity_dofs());
    for (auto& x : v) x = dist(rng);
    for (int k = 1; k <= 3; ++k) {
      const double q = f.ops.outlet_source[k - 1].dot(v);
      CHECK_THAT(q, WithinAbs(oracle::simpson_flux(f.space, v, k), 1e-12));
    }
  }
}

TEST_CASE("zero normal-trace energy implies zero flux") {
  const auto f = unit_square(3);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> dist;
  for (int trial = 0; trial < 10; ++trial) {
    Vector v(f.space.num_velocity_dofs());
    for (auto& x : v) x = dist(rng);
    for (const auto& e : f.space.trace_edges())
      if (e.tag.outlet_index() == 1)
        for (int n : {e.a, e.mid, e.b}) v[TaylorHoodSpace::velocity_dof(n, 0)] = 0.0;
    REQUIRE((f.ops.outlet_mass[0] * v).cwiseAbs().maxCoeff() == 0.0);
    CHECK(f.ops.outlet_source[0].dot(v) == 0.0);
  }
}

TEST_CASE("load vector") {
  const auto f = unit_square();
  CHECK(assemble_load(f.space, nullptr, 0.0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(assemble_load(f.space, [](const Point&, double) { return Point(0, 0); }, 0.0).cwiseAbs().maxCoeff() == 0.0);
  const Vector one = f.field([](double, double) { return Point(1, 0); });
  const Vector F1 = assemble_load(f.space, [](const Point&, double) { return Point(1, 0); }, 0.0);
  CHECK_THAT(F1.dot(one), WithinAbs(1.0, 1e-12));
  const Vector Fx = assemble_load(f.space, [](const Point& x, double) { return Point(x.x(), 0); }, 0.0);
  CHECK_THAT(Fx.dot(one), WithinAbs(0.5, 1e-12));
  const Vector y2 = f.field([](double, double y) { return Point(y * y, 0); });
  const Vector Fxx = assemble_load(f.space, [](const Point& x, double t) { return Point(t * x.x() * x.x(), 0); }, 2.0);
  CHECK_THAT(Fxx.dot(y2), WithinAbs(2.0 / 9.0, 1e-12));
}

TEST_CASE("no-slip elimination") {
  for (int nx : {1, 3, 5}) {
    const TaylorHoodSpace s(build_channel(2, 1, nx, 2));
    // walls y = 0 and y = H carry 2(nx+1) vertices and 2nx midpoints
    CHECK(static_cast<int>(s.constrained_dofs().size()) == 2 * (4 * nx + 2));
    const auto c = apply_noslip(assemble_operators(s), s);
    CHECK(oracle::max_asymmetry(c.mass) == 0.0);
    CHECK(oracle::max_asymmetry(c.stiffness) == 0.0);
    CHECK(oracle::max_asymmetry(c.outlet_mass[0]) == 0.0);
    CHECK(oracle::min_eig(oracle::dense(c.mass)) > 0.0);

    RunConfig rc;
    rc.outlets = {OutletSpec{1, 1.0, 0.1, Signal::constant(1.0)}, OutletSpec{2, 1.0, 0.1, Signal::constant(0.0)}};
    rc.forcing = [](const Point& x, double) { return Point(1 + x.y(), x.x()); };
    const StokesSolver solver(s, c, rc);
    const Vector v = c.lift(solver.solve_steady().first);
    for (int dof : s.constrained_dofs()) CHECK(v[dof] == 0.0);
  }
}

TEST_CASE("matrix market export") {
  const auto f = unit_square(1);
  std::ostringstream os;
  write_matrix_market(os, f.ops.mass);
  std::istringstream in(os.str());
  std::string banner;
  std::getline(in, banner);
  CHECK(banner == "%%MatrixMarket matrix coordinate real general");
  long rows = 0, cols = 0, nnz = 0;
  in >> rows >> cols >> nnz;
  CHECK(rows == f.ops.mass.rows());
  CHECK(nnz == f.ops.mass.nonZeros());
  Eigen::MatrixXd back = Eigen::MatrixXd::Zero(rows, cols);
  for (long i = 0; i < nnz; ++i) {
    long r = 0, c = 0;
    double v = 0;
    in >> r >> c >> v;
    back(r - 1, c - 1) = v;
  }
  CHECK((back - oracle::dense(f.ops.mass)).cwiseAbs().maxCoeff() == 0.0);
}
