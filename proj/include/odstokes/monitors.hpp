#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "odstokes/fem.hpp"
#include "odstokes/galerkin.hpp"
#include "odstokes/outlets.hpp"
#include "odstokes/solver.hpp"

namespace odstokes {

/// E = 1/2 v^T M v + sum_k gamma_k/2 v^T G_k v
inline double energy(const ConstrainedOperators& ops, const Vector& v, const std::vector<double>& gamma) {
  double e = 0.5 * v.dot(ops.mass * v);
  for (std::size_t k = 0; k < ops.outlet_mass.size(); ++k) e += 0.5 * gamma.at(k) * v.dot(ops.outlet_mass[k] * v);
  return e;
}

/// D = nu v^T K v + sum_k lambda_k v^T G_k v
inline double dissipation(const ConstrainedOperators& ops, const Vector& v, double nu, const std::vector<double>& lambda) {
  double d = nu * v.dot(ops.stiffness * v);
  for (std::size_t k = 0; k < ops.outlet_mass.size(); ++k) d += lambda.at(k) * v.dot(ops.outlet_mass[k] * v);
  return d;
}

inline double flux(const ConstrainedOperators& ops, const Vector& v, int k) { return outlet_flux(ops, v, k); }

struct MonitorRecord {
  double t = 0.0;
  double E = 0.0;
  double D = 0.0;
  double power = 0.0;  // F^T v - sum_k S_k Q_k
  std::vector<double> Q;
  std::vector<double> pbar;
  std::vector<double> r;  // averaged-pressure residual, filled once the history is complete
};

/// Evaluates the monitor functionals for one state of a run.
class Monitor {
 public:
  explicit Monitor(const StokesSolver& solver)
      : solver_(solver),
        gamma_(gammas(solver.config().outlets)),
        lambda_(lambdas(solver.config().outlets)) {}

  MonitorRecord record(const SystemState& s) const {
    const auto& ops = solver_.operators();
    const auto& outlets = solver_.config().outlets;
    MonitorRecord rec;
    rec.t = s.t;
    rec.E = energy(ops, s.v, gamma_);
    rec.D = dissipation(ops, s.v, solver_.config().nu, lambda_);
    rec.power = solver_.body_load(s.t).dot(s.v);
    for (const auto& o : outlets) {
      const double q = flux(ops, s.v, o.k);
      rec.Q.push_back(q);
      rec.pbar.push_back(average_pressure(ops, s.p, o.k));
      rec.power -= o.signal.eval(s.t) * q;
    }
    rec.r.assign(outlets.size(), std::numeric_limits<double>::quiet_NaN());
    return rec;
  }

  /// Fills r_k on every record from the recorded flux and pressure histories.
  void fill_residuals(std::vector<MonitorRecord>& records) const {
    if (records.size() < 3) return;
    const auto& outlets = solver_.config().outlets;
    for (std::size_t k = 0; k < outlets.size(); ++k) {
      OutletSeries series;
      for (const auto& rec : records) {
        series.t.push_back(rec.t);
        series.pbar.push_back(rec.pbar[k]);
        series.flux.push_back(rec.Q[k]);
        series.source.push_back(outlets[k].signal.eval(rec.t));
      }
      const auto r = averaged_pressure_residual(series, outlets[k], solver_.operators().outlet_length[k]);
      for (std::size_t i = 0; i < records.size(); ++i) records[i].r[k] = r[i];
    }
  }

 private:
  const StokesSolver& solver_;
  std::vector<double> gamma_;
  std::vector<double> lambda_;
};

/// Per-step check of E^{n+1} + dt D^{n+1} <= E^n + dt power^{n+1} + tol (backward Euler).
struct EnergyBalanceReport {
  std::vector<double> residual;  // residual[n-1] for the step n-1 -> n
  double max_residual = -std::numeric_limits<double>::infinity();
  double tolerance = 0.0;
  bool inequality_holds = true;
  bool energy_monotone = true;
  double dissipated = 0.0;  // sum of dt D^n
  int first_violation = -1;
};

inline EnergyBalanceReport energy_balance_report(const std::vector<MonitorRecord>& records, double dt,
                                                 double tolerance_factor = 1e-10) {
  EnergyBalanceReport rep;
  if (records.empty()) return rep;
  rep.tolerance = tolerance_factor * std::max(records.front().E, 1.0);
  for (std::size_t n = 1; n < records.size(); ++n) {
    const auto& prev = records[n - 1];
    const auto& cur = records[n];
    const double res = cur.E + dt * cur.D - prev.E - dt * cur.power;
    rep.residual.push_back(res);
    rep.max_residual = std::max(rep.max_residual, res);
    rep.dissipated += dt * cur.D;
    if (res > rep.tolerance && rep.inequality_holds) {
      rep.inequality_holds = false;
      rep.first_violation = static_cast<int>(n);
    }
    if (cur.E > prev.E) rep.energy_monotone = false;
  }
  return rep;
}

/// Largest |sum_k Q_k| relative to max(1, max_k |Q_k|) over a record history.
inline double mass_balance_defect(const std::vector<MonitorRecord>& records) {
  double worst = 0.0;
  for (const auto& rec : records) {
    double sum = 0.0, scale = 1.0;
    for (double q : rec.Q) {
      sum += q;
      scale = std::max(scale, std::abs(q));
    }
    worst = std::max(worst, std::abs(sum) / scale);
  }
  return worst;
}

struct UniquenessVerdict {
  bool solver_zero_exact = false;
  bool galerkin_zero_exact = false;
  double cross_path_difference = std::numeric_limits<double>::infinity();  // sup_t |v_full - W g|_M / sup_t |v_full|_M
  double tolerance = 1e-7;

  bool pass() const { return solver_zero_exact && galerkin_zero_exact && cross_path_difference <= tolerance; }
};

namespace detail {

inline RunConfig zero_data(const RunConfig& cfg) {
  RunConfig zero = cfg;
  zero.forcing = nullptr;
  zero.initial = nullptr;
  for (auto& o : zero.outlets) o.signal = Signal::constant(0.0).with_horizon(cfg.T);
  return zero;
}

inline double m_norm(const ConstrainedOperators& ops, const Vector& v) { return std::sqrt(v.dot(ops.mass * v)); }

}  // namespace detail

/// Runs the same data through the saddle-point stepper and through the full-kernel Galerkin system,
/// and runs the literal zero-data problem through both.
inline UniquenessVerdict zero_data_uniqueness_test(const TaylorHoodSpace& space, const ConstrainedOperators& ops,
                                                   const RunConfig& cfg, double tolerance = 1e-7) {
  UniquenessVerdict verdict;
  verdict.tolerance = tolerance;
  const auto gamma = gammas(cfg.outlets);
  const DenseMatrix kernel = divergence_kernel(ops);
  const ReducedBasis basis = compute_divfree_basis(ops, gamma, static_cast<int>(kernel.cols()));

  {
    const RunConfig zero = detail::zero_data(cfg);
    StokesSolver solver(space, ops, zero);
    bool exact = true;
    solver.run([&](const SystemState& s) { exact = exact && s.v.cwiseAbs().maxCoeff() == 0.0 && (s.p.size() == 0 || s.p.cwiseAbs().maxCoeff() == 0.0); });
    verdict.solver_zero_exact = exact;

    const ReducedSystem sys = build_reduced_system(basis, space, ops, zero, Vector::Zero(ops.num_free()));
    const auto traj = integrate_reduced(sys, zero.dt, zero.T, zero.theta);
    bool gexact = true;
    for (const auto& g : traj.g) gexact = gexact && (g.size() == 0 || g.cwiseAbs().maxCoeff() == 0.0);
    verdict.galerkin_zero_exact = gexact;
  }

  StokesSolver solver(space, ops, cfg);
  const SystemState init = solver.initial_state();
  std::vector<Vector> full;
  solver.run(init, [&](const SystemState& s) { full.push_back(s.v); });
  const ReducedSystem sys = build_reduced_system(basis, space, ops, cfg, init.v);
  const auto traj = integrate_reduced(sys, cfg.dt, cfg.T, cfg.theta);
  if (traj.g.size() != full.size()) throw DimensionError("trajectory lengths differ between paths");
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < full.size(); ++i) {
    const Vector lifted = basis.columns * traj.g[i];
    diff = std::max(diff, detail::m_norm(ops, full[i] - lifted));
    scale = std::max(scale, detail::m_norm(ops, full[i]));
  }
  verdict.cross_path_difference = scale > 0.0 ? diff / scale : diff;
  return verdict;
}

}  // namespace odstokes
