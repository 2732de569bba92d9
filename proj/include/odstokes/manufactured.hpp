#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "odstokes/errors.hpp"
#include "odstokes/fem.hpp"
#include "odstokes/mesh.hpp"
#include "odstokes/outlets.hpp"
#include "odstokes/quadrature.hpp"
#include "odstokes/solver.hpp"

namespace odstokes {

/// Closed-form velocity/pressure pair together with the data that makes it an exact solution.
struct ExactSolution {
  VectorField velocity;
  std::function<Eigen::Matrix2d(const Point&, double)> gradient;  // J(i,j) = d v_i / d x_j
  std::function<double(const Point&, double)> pressure;
  VectorField forcing;
  double nu = 1.0;
  std::vector<OutletSpec> outlets;
};

/// Stream-function solution on the channel [0,L]x[0,H]:
///   psi = a(t) Phi(y) + b(t) X(x) Y(y),  Phi = H(3 eta^2 - 2 eta^3),  Y = y^2 (H-y)^2,  X = sin(pi x / L),
/// with a = 1 + a1 sin(omega t), b = b0 cos(omega t). The pressure is built so that the outlet law holds
/// exactly at x = 0 and x = L; the tangential condition holds because X'' vanishes there.
struct ChannelManufactured {
  double length = 1.0;
  double height = 1.0;
  double nu = 1.0;
  double lambda1 = 1.0, lambda2 = 0.5;
  double gamma1 = 0.1, gamma2 = 0.2;
  double a1 = 0.5;
  double b0 = 0.5;
  double omega = 3.0;
  Signal s1 = Signal::sinusoid(1.0, 1.0, 0.3);
  Signal s2 = Signal::ramp(-0.5, 0.25);

  double a(double t) const { return 1.0 + a1 * std::sin(omega * t); }
  double da(double t) const { return a1 * omega * std::cos(omega * t); }
  double b(double t) const { return b0 * std::cos(omega * t); }
  double db(double t) const { return -b0 * omega * std::sin(omega * t); }

  // Phi' Phi'' Phi'''
  double phi1(double y) const {
    const double e = y / height;
    return 6.0 * e * (1.0 - e);
  }
  double phi2(double y) const { return 6.0 * (1.0 - 2.0 * y / height) / height; }
  double phi3(double) const { return -12.0 / (height * height); }

  double Y0(double y) const { return y * y * (height - y) * (height - y); }
  double Y1(double y) const { return 2.0 * y * (height - y) * (height - 2.0 * y); }
  double Y2(double y) const { return 2.0 * (height * height - 6.0 * height * y + 6.0 * y * y); }
  double Y3(double y) const { return 24.0 * y - 12.0 * height; }

  double k() const { return std::numbers::pi / length; }
  double X0(double x) const { return std::sin(k() * x); }
  double X1(double x) const { return k() * std::cos(k() * x); }
  double X2(double x) const { return -k() * k() * std::sin(k() * x); }
  double X3(double x) const { return -k() * k() * k() * std::cos(k() * x); }

  Point velocity(const Point& p, double t) const {
    const double x = p.x(), y = p.y();
    return {a(t) * phi1(y) + b(t) * X0(x) * Y1(y), -b(t) * X1(x) * Y0(y)};
  }

  Eigen::Matrix2d gradient(const Point& p, double t) const {
    const double x = p.x(), y = p.y();
    Eigen::Matrix2d j;
    j(0, 0) = b(t) * X1(x) * Y1(y);
    j(0, 1) = a(t) * phi2(y) + b(t) * X0(x) * Y2(y);
    j(1, 0) = -b(t) * X2(x) * Y0(y);
    j(1, 1) = -b(t) * X1(x) * Y1(y);
    return j;
  }

  // outlet pressure profiles g1 = S1 - (lambda1 a + gamma1 a') Phi', g2 = S2 + (lambda2 a + gamma2 a') Phi'
  double c1(double t) const { return lambda1 * a(t) + gamma1 * da(t); }
  double c2(double t) const { return lambda2 * a(t) + gamma2 * da(t); }

  double pressure(const Point& p, double t) const {
    const double x = p.x(), y = p.y();
    const double xi = x / length;
    const double g1 = s1.eval(t) - c1(t) * phi1(y);
    const double g2 = s2.eval(t) + c2(t) * phi1(y);
    return nu * b(t) * X1(x) * Y1(y) + (1.0 - xi) * g1 + xi * g2;
  }

  Point forcing(const Point& p, double t) const {
    const double x = p.x(), y = p.y();
    const double xi = x / length;
    const double g1 = s1.eval(t) - c1(t) * phi1(y);
    const double g2 = s2.eval(t) + c2(t) * phi1(y);
    const double px = nu * b(t) * X2(x) * Y1(y) + (g2 - g1) / length;
    const double py = nu * b(t) * X1(x) * Y2(y) - (1.0 - xi) * c1(t) * phi2(y) + xi * c2(t) * phi2(y);
    const double lap_u = a(t) * phi3(y) + b(t) * (X2(x) * Y1(y) + X0(x) * Y3(y));
    const double lap_w = -b(t) * (X3(x) * Y0(y) + X1(x) * Y2(y));
    const double ut = da(t) * phi1(y) + db(t) * X0(x) * Y1(y);
    const double wt = -db(t) * X1(x) * Y0(y);
    return {ut - nu * lap_u + px, wt - nu * lap_w + py};
  }

  ExactSolution solution(double horizon) const {
    ExactSolution s;
    const ChannelManufactured self = *this;
    s.velocity = [self](const Point& p, double t) { return self.velocity(p, t); };
    s.gradient = [self](const Point& p, double t) { return self.gradient(p, t); };
    s.pressure = [self](const Point& p, double t) { return self.pressure(p, t); };
    s.forcing = [self](const Point& p, double t) { return self.forcing(p, t); };
    s.nu = nu;
    s.outlets = {OutletSpec{1, lambda1, gamma1, s1.with_horizon(horizon)},
                 OutletSpec{2, lambda2, gamma2, s2.with_horizon(horizon)}};
    return s;
  }
};

enum class StudyAxis { space, time };

struct StudyLevel {
  Mesh mesh;
  double dt;
};

struct EOCRow {
  double h = 0.0;
  double dt = 0.0;
  double err_l2 = 0.0;
  double err_h1 = 0.0;
  double err_flux = 0.0;
  double order_l2 = std::numeric_limits<double>::quiet_NaN();
  double order_h1 = std::numeric_limits<double>::quiet_NaN();
  double order_flux = std::numeric_limits<double>::quiet_NaN();
};

struct EOCTable {
  StudyAxis axis = StudyAxis::space;
  double theta = 1.0;
  std::vector<EOCRow> rows;

  bool monotone() const {
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (!(rows[i].err_l2 < rows[i - 1].err_l2) || !(rows[i].err_h1 < rows[i - 1].err_h1)) return false;
    return true;
  }
};

/// L2 and H1-seminorm errors of a discrete velocity against an exact field at time t, 7-point rule.
inline std::pair<double, double> velocity_errors(const TaylorHoodSpace& space, const Vector& v_full,
                                                 const ExactSolution& exact, double t) {
  double l2 = 0.0, h1 = 0.0;
  for (std::size_t e = 0; e < space.num_elements(); ++e) {
    const ElementGeometry geo = space.geometry(e);
    for (const auto& q : quadrature::triangle_degree5()) {
      const Point x = geo.map(q.bary);
      const Point dv = evaluate_velocity(space, v_full, e, q.bary) - exact.velocity(x, t);
      const Eigen::Matrix2d dg = evaluate_gradient(space, v_full, e, q.bary) - exact.gradient(x, t);
      l2 += geo.area * q.weight * dv.squaredNorm();
      h1 += geo.area * q.weight * dg.squaredNorm();
    }
  }
  return {std::sqrt(l2), std::sqrt(h1)};
}

/// Flux of the exact field through outlet k by edge quadrature.
inline double exact_flux(const TaylorHoodSpace& space, const ExactSolution& exact, int k, double t) {
  const Mesh& mesh = space.mesh();
  const Point n = mesh.outlet_normal(k);
  double q = 0.0;
  for (const auto& e : space.trace_edges()) {
    if (e.tag.outlet_index() != k) continue;
    const Point& a = mesh.vertices[e.a];
    const Point& b = mesh.vertices[e.b];
    for (const auto& g : quadrature::line_gauss3())
      q += e.length * g.weight * exact.velocity((1.0 - g.s) * a + g.s * b, t).dot(n);
  }
  return q;
}

namespace detail {

inline void require_divergence_free(const Mesh& mesh, const ExactSolution& exact, double T) {
  const TaylorHoodSpace space(mesh);
  for (double t : {0.0, 0.5 * T, T})
    for (std::size_t e = 0; e < space.num_elements(); ++e) {
      const ElementGeometry geo = space.geometry(e);
      for (const auto& q : quadrature::triangle_degree5()) {
        const Eigen::Matrix2d j = exact.gradient(geo.map(q.bary), t);
        if (std::abs(j.trace()) > 1e-8 * std::max(1.0, j.norm()))
          throw InvalidParameter("exact velocity field is not divergence-free");
      }
    }
}

}  // namespace detail

/// Runs the theta scheme on every level from the interpolated exact initial field and measures the
/// final-time error. Orders compare consecutive levels along the chosen axis.
inline EOCTable manufactured_solution_study(const ExactSolution& exact, const std::vector<StudyLevel>& levels,
                                            double T, double theta, StudyAxis axis) {
  if (levels.empty()) throw InvalidParameter("study needs at least one level");
  detail::require_divergence_free(levels.front().mesh, exact, T);
  EOCTable table;
  table.axis = axis;
  table.theta = theta;
  for (const auto& level : levels) {
    const TaylorHoodSpace space(level.mesh);
    const ConstrainedOperators ops = apply_noslip(assemble_operators(space), space);
    RunConfig cfg;
    cfg.nu = exact.nu;
    cfg.theta = theta;
    cfg.dt = level.dt;
    cfg.T = T;
    cfg.outlets = exact.outlets;
    cfg.forcing = exact.forcing;
    cfg.initial = exact.velocity;
    const StokesSolver solver(space, ops, cfg);
    SystemState state = solver.initial_state();
    for (int i = 1; i <= cfg.num_steps(); ++i) {
      state = solver.step(state);
      state.t = i * cfg.dt;
    }
    const Vector full = ops.lift(state.v);
    EOCRow row;
    row.h = level.mesh.max_edge_length();
    row.dt = level.dt;
    std::tie(row.err_l2, row.err_h1) = velocity_errors(space, full, exact, state.t);
    for (const auto& o : exact.outlets)
      row.err_flux = std::max(row.err_flux, std::abs(outlet_flux(ops, state.v, o.k) - exact_flux(space, exact, o.k, state.t)));
    if (!table.rows.empty()) {
      const EOCRow& prev = table.rows.back();
      const double ratio = axis == StudyAxis::space ? prev.h / row.h : prev.dt / row.dt;
      const double lr = std::log(ratio);
      row.order_l2 = std::log(prev.err_l2 / row.err_l2) / lr;
      row.order_h1 = std::log(prev.err_h1 / row.err_h1) / lr;
      row.order_flux = std::log(prev.err_flux / row.err_flux) / lr;
    }
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace odstokes
