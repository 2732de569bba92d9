#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "odstokes/errors.hpp"
#include "odstokes/fem.hpp"
#include "odstokes/signal.hpp"

namespace odstokes {

/// Open-dissipative section k: traction = (S_k + (lambda_k + gamma_k d/dt)(v.n)) n.
struct OutletSpec {
  int k = 1;
  double lambda = 1.0;  // resistance
  double gamma = 0.1;   // inertance
  Signal signal;        // far-field pressure S_k(t)

  void validate() const {
    if (!(lambda > 0.0)) throw InvalidParameter("outlet " + std::to_string(k) + ": lambda must be > 0");
    if (!(gamma > 0.0)) throw InvalidParameter("outlet " + std::to_string(k) + ": gamma must be > 0");
  }

  bool operator==(const OutletSpec&) const = default;
};

inline std::vector<double> lambdas(const std::vector<OutletSpec>& outlets) {
  std::vector<double> out;
  for (const auto& o : outlets) out.push_back(o.lambda);
  return out;
}

inline std::vector<double> gammas(const std::vector<OutletSpec>& outlets) {
  std::vector<double> out;
  for (const auto& o : outlets) out.push_back(o.gamma);
  return out;
}

/// Velocity/pressure pair at one instant; v on free dofs.
struct Snapshot {
  double t = 0.0;
  Vector v;
  Vector p;
};

/// Per-outlet time series entering the averaged-pressure identity.
struct OutletSeries {
  std::vector<double> t;
  std::vector<double> pbar;    // average pressure on Gamma_k
  std::vector<double> flux;    // Q_k
  std::vector<double> source;  // S_k
};

/// dQ/dt by three-point Lagrange differentiation: centered in the interior, one-sided at the ends.
inline std::vector<double> flux_rate(std::span<const double> t, std::span<const double> q) {
  const std::size_t n = t.size();
  if (n < 3 || q.size() != n) throw InsufficientHistory("flux rate needs at least 3 samples");
  std::vector<double> out(n);
  const auto deriv = [&](std::size_t i0, double at) {
    const double x0 = t[i0], x1 = t[i0 + 1], x2 = t[i0 + 2];
    const double l0 = ((at - x1) + (at - x2)) / ((x0 - x1) * (x0 - x2));
    const double l1 = ((at - x0) + (at - x2)) / ((x1 - x0) * (x1 - x2));
    const double l2 = ((at - x0) + (at - x1)) / ((x2 - x0) * (x2 - x1));
    return l0 * q[i0] + l1 * q[i0 + 1] + l2 * q[i0 + 2];
  };
  out[0] = deriv(0, t[0]);
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = deriv(i - 1, t[i]);
  out[n - 1] = deriv(n - 3, t[n - 1]);
  return out;
}

/// r_k(t) = (pbar_k - S_k) - (lambda_k Q_k + gamma_k dQ_k/dt) / |Gamma_k|.
inline std::vector<double> averaged_pressure_residual(const OutletSeries& series, const OutletSpec& outlet,
                                                      double outlet_length) {
  const std::size_t n = series.t.size();
  if (n < 3) throw InsufficientHistory("averaged-pressure residual needs at least 3 snapshots");
  if (series.pbar.size() != n || series.flux.size() != n || series.source.size() != n)
    throw InvalidParameter("outlet series columns differ in length");
  const auto rate = flux_rate(series.t, series.flux);
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i)
    r[i] = (series.pbar[i] - series.source[i]) -
           (outlet.lambda * series.flux[i] + outlet.gamma * rate[i]) / outlet_length;
  return r;
}

inline double average_pressure(const ConstrainedOperators& ops, const Vector& p, int k) {
  return ops.outlet_pressure.at(static_cast<std::size_t>(k - 1)).dot(p) / ops.outlet_length.at(static_cast<std::size_t>(k - 1));
}

inline double outlet_flux(const ConstrainedOperators& ops, const Vector& v, int k) {
  return ops.outlet_source.at(static_cast<std::size_t>(k - 1)).dot(v);
}

/// Residual of the averaged identity from a snapshot sequence.
inline std::vector<double> averaged_pressure_residual(std::span<const Snapshot> snapshots, const ConstrainedOperators& ops,
                                                      const OutletSpec& outlet) {
  if (snapshots.size() < 3) throw InsufficientHistory("averaged-pressure residual needs at least 3 snapshots");
  OutletSeries series;
  for (const auto& s : snapshots) {
    series.t.push_back(s.t);
    series.pbar.push_back(average_pressure(ops, s.p, outlet.k));
    series.flux.push_back(outlet_flux(ops, s.v, outlet.k));
    series.source.push_back(outlet.signal.eval(s.t));
  }
  return averaged_pressure_residual(series, outlet, ops.outlet_length.at(static_cast<std::size_t>(outlet.k - 1)));
}

/// |integral over Gamma_k of tau.(grad v . n)| together with the trace scale integral of |grad v|.
struct TractionResidual {
  double value = 0.0;
  double scale = 0.0;
};

inline TractionResidual tangential_traction_residual(const TaylorHoodSpace& space, const Vector& v_full, int k) {
  if (k < 1 || k > space.num_outlets()) throw InvalidParameter("no outlet " + std::to_string(k));
  const Mesh& mesh = space.mesh();
  const Point n = mesh.outlet_normal(k);
  const Point tau(-n.y(), n.x());

  std::unordered_map<std::uint64_t, std::size_t> owner;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
    for (int i = 0; i < 3; ++i) owner[detail::edge_key(mesh.triangles[t][i], mesh.triangles[t][(i + 1) % 3])] = t;

  double integral = 0.0;
  double scale = 0.0;
  for (const auto& e : space.trace_edges()) {
    if (e.tag.outlet_index() != k) continue;
    const std::size_t t = owner.at(detail::edge_key(e.a, e.b));
    const auto& tri = mesh.triangles[t];
    int ia = 0, ib = 0;
    for (int i = 0; i < 3; ++i) {
      if (tri[i] == e.a) ia = i;
      if (tri[i] == e.b) ib = i;
    }
    for (const auto& q : quadrature::line_gauss3()) {
      std::array<double, 3> l{0.0, 0.0, 0.0};
      l[ia] = 1.0 - q.s;
      l[ib] = q.s;
      const Eigen::Matrix2d grad = evaluate_gradient(space, v_full, t, l);
      integral += e.length * q.weight * tau.dot(grad * n);
      scale += e.length * q.weight * grad.norm();
    }
  }
  return {std::abs(integral), scale};
}

}  // namespace odstokes
