#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "odstokes/config.hpp"
#include "odstokes/fem.hpp"
#include "odstokes/galerkin.hpp"
#include "odstokes/lumped.hpp"
#include "odstokes/manufactured.hpp"
#include "odstokes/mesh.hpp"
#include "odstokes/monitors.hpp"
#include "odstokes/outlets.hpp"
#include "odstokes/output.hpp"
#include "odstokes/solver.hpp"

namespace odstokes {

struct CommandOptions {
  std::filesystem::path out;  // empty: the configured directory
  std::uint64_t seed = 1;
  bool quiet = false;
};

/// Mesh, space and constrained operators with stable addresses (the solver keeps references).
struct Discretization {
  TaylorHoodSpace space;
  ConstrainedOperators ops;

  explicit Discretization(Mesh mesh) : space(std::move(mesh)), ops(apply_noslip(assemble_operators(space), space)) {}
};

inline Mesh build_mesh(const ScenarioConfig& cfg) {
  Mesh base;
  if (cfg.geometry.type == "bifurcation") {
    base = build_bifurcation(cfg.geometry.bifurcation);
  } else {
    const auto& c = cfg.geometry.channel;
    base = build_channel(c.length, c.height, c.nx, c.ny);
  }
  return refine_uniform(base, cfg.geometry.refine);
}

inline VectorField make_forcing(const ForcingConfig& f) {
  if (f.type == "constant") {
    const Point v(f.value[0], f.value[1]);
    return [v](const Point&, double) { return v; };
  }
  if (f.type == "sinusoid") {
    const Point v(f.value[0], f.value[1]);
    const double w = f.omega, ph = f.phase;
    return [v, w, ph](const Point&, double t) -> Point { return v * std::sin(w * t + ph); };
  }
  return nullptr;
}

inline VectorField make_initial(const ScenarioConfig& cfg) {
  const InitialConfig& ic = cfg.initial;
  const double amp = ic.amplitude;
  if (ic.type == "poiseuille") {
    double lo = 0.0, hi = cfg.geometry.channel.height, x_end = std::numeric_limits<double>::infinity();
    if (cfg.geometry.type == "bifurcation") {
      lo = -0.5 * cfg.geometry.bifurcation.trunk_width;
      hi = -lo;
      x_end = cfg.geometry.bifurcation.trunk_length;
    }
    return [=](const Point& x, double) -> Point {
      if (x.x() > x_end || x.y() < lo || x.y() > hi) return Point::Zero();
      const double s = (x.y() - lo) / (hi - lo);
      return {amp * 4.0 * s * (1.0 - s), 0.0};
    };
  }
  if (ic.type == "vortex") {
    const Point c(ic.center[0], ic.center[1]);
    const double r = ic.radius;
    return [=](const Point& x, double) -> Point {
      const Point d = x - c;
      const double g = std::exp(-d.squaredNorm() / (r * r));
      return Point(-d.y(), d.x()) * (amp * g / r);
    };
  }
  return nullptr;
}

inline RunConfig make_run_config(const ScenarioConfig& cfg) {
  RunConfig rc;
  rc.nu = cfg.nu;
  rc.theta = cfg.time.theta;
  rc.dt = cfg.time.dt;
  rc.T = cfg.time.T;
  rc.outlets = cfg.outlets;
  rc.forcing = make_forcing(cfg.forcing);
  rc.initial = make_initial(cfg);
  return rc;
}

inline LumpedNetwork make_network(const ScenarioConfig& cfg) {
  if (cfg.geometry.type == "bifurcation") return bifurcation_network(cfg.nu, cfg.geometry.bifurcation, cfg.outlets);
  return channel_network(cfg.nu, cfg.geometry.channel.length, cfg.geometry.channel.height, cfg.outlets);
}

inline bool has_format(const ScenarioConfig& cfg, const std::string& f) {
  return std::find(cfg.output.formats.begin(), cfg.output.formats.end(), f) != cfg.output.formats.end();
}

/// Steady averaged-pressure residual pbar_k - S_k - lambda_k Q_k / |Gamma_k|.
inline std::vector<double> steady_pressure_residual(const ConstrainedOperators& ops, const Vector& v, const Vector& p,
                                                    const std::vector<OutletSpec>& outlets, double t) {
  std::vector<double> r;
  for (const auto& o : outlets) {
    const auto k = static_cast<std::size_t>(o.k - 1);
    r.push_back(average_pressure(ops, p, o.k) - o.signal.eval(t) - o.lambda * outlet_flux(ops, v, o.k) / ops.outlet_length[k]);
  }
  return r;
}

/// Largest |S_i(t) - S_j(t)| over the recorded times.
inline double source_spread(const std::vector<OutletSpec>& outlets, const std::vector<double>& times) {
  double spread = 0.0;
  for (double t : times) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& o : outlets) {
      lo = std::min(lo, o.signal.eval(t));
      hi = std::max(hi, o.signal.eval(t));
    }
    if (!outlets.empty()) spread = std::max(spread, hi - lo);
  }
  return spread;
}

namespace detail {

using ojson = nlohmann::ordered_json;

inline std::filesystem::path output_dir(const ScenarioConfig& cfg, const CommandOptions& opt) {
  return opt.out.empty() ? std::filesystem::path(cfg.output.directory) : opt.out;
}

inline ojson manifest_header(const std::string& command, const ScenarioConfig& cfg, const CommandOptions& opt) {
  char hash[20];
  std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
  return {{"tool", "odstokes"},
          {"command", command},
          {"schema_version", cfg.schema_version},
          {"config_hash", hash},
          {"seed", opt.seed},
          {"threads", 1}};
}

inline void write_matrices(const std::filesystem::path& dir, const ConstrainedOperators& ops) {
  const auto put = [&](const std::string& name, const SparseMatrix& m) {
    auto out = io::open(dir / name);
    write_matrix_market(out, m);
  };
  put("M.mtx", ops.mass);
  put("K.mtx", ops.stiffness);
  put("B.mtx", ops.divergence);
  for (int k = 1; k <= ops.num_outlets(); ++k) put("G_" + std::to_string(k) + ".mtx", ops.outlet_mass[k - 1]);
}

/// Smallest eigenvalue of W^T M_gamma W over seeded random admissible bases.
inline double random_basis_min_eigenvalue(const ConstrainedOperators& ops, const DenseMatrix& kernel, const std::vector<double>& gamma,
                            int m, int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = std::numeric_limits<double>::infinity();
  const DenseMatrix reduced = kernel.transpose() * (ops.inertial(gamma) * kernel);
  std::normal_distribution<double> dist;
  for (int i = 0; i < trials; ++i) {
    DenseMatrix r(kernel.cols(), m);
    for (Eigen::Index c = 0; c < r.cols(); ++c)
      for (Eigen::Index row = 0; row < r.rows(); ++row) r(row, c) = dist(rng);
    DenseMatrix mm = r.transpose() * reduced * r;
    worst = std::min(worst, min_eigenvalue(0.5 * (mm + mm.transpose())));
  }
  return worst;
}

inline void say(const CommandOptions& opt, const std::string& line) {
  if (!opt.quiet) std::cout << line << '\n';
}

}  // namespace detail

/// run / reduced: unsteady simulation along the configured path(s). Returns 0 when every verdict holds.
inline int command_run(ScenarioConfig cfg, const CommandOptions& opt, const std::string& command = "run") {
  if (command == "reduced") cfg.solver.path = "reduced";
  const auto dir = detail::output_dir(cfg, opt);
  std::filesystem::create_directories(dir);
  Discretization disc(build_mesh(cfg));
  const auto& space = disc.space;
  const auto& ops = disc.ops;
  const RunConfig rc = make_run_config(cfg);
  const StokesSolver solver(space, ops, rc);

  auto manifest = detail::manifest_header(command, cfg, opt);
  manifest["mesh"] = mesh_statistics(space);
  detail::ojson verdicts;
  bool ok = true;
  const auto verdict = [&](const std::string& name, bool pass) {
    verdicts[name] = pass;
    ok = ok && pass;
  };

  if (has_format(cfg, "mtx")) detail::write_matrices(dir, ops);

  const bool full = cfg.solver.path != "reduced";
  const bool reduced = cfg.solver.path != "full";
  std::vector<Vector> full_states;

  if (full) {
    const Monitor monitor(solver);
    std::vector<MonitorRecord> records;
    double div_max = 0.0;
    int step = 0;
    SystemState last;
    double p_interior = 0.0;
    solver.run([&](const SystemState& s) {
      records.push_back(monitor.record(s));
      if (s.p.size() > 0) p_interior = std::max(p_interior, s.p.cwiseAbs().maxCoeff());
      div_max = std::max(div_max, solver.divergence_norm(s.v));
      if (reduced) full_states.push_back(s.v);
      if (has_format(cfg, "vtk") && cfg.output.vtk_interval > 0 && step % cfg.output.vtk_interval == 0) {
        char name[32];
        std::snprintf(name, sizeof(name), "field_%06d.vtk", step);
        auto out = io::open(dir / name);
        write_vtk(out, space, ops.lift(s.v), s.p, "velocity and pressure at t=" + io::num(s.t));
      }
      ++step;
      last = s;
    });
    monitor.fill_residuals(records);
    {
      auto out = io::open(dir / "monitors.csv");
      write_monitor_csv(out, records, ops.num_outlets());
    }
    const auto energy = energy_balance_report(records, rc.dt, cfg.checks.energy);
    const double mass = mass_balance_defect(records);

    std::vector<double> times;
    double r_max = 0.0, p_scale = 0.0;
    for (const auto& rec : records) {
      times.push_back(rec.t);
      for (std::size_t k = 0; k < rec.r.size(); ++k) {
        if (std::isfinite(rec.r[k])) r_max = std::max(r_max, std::abs(rec.r[k]));
        p_scale = std::max(p_scale, std::abs(rec.pbar[k]));
      }
    }
    p_scale = std::max({p_scale, p_interior, source_spread(rc.outlets, times)});

    detail::ojson traction = detail::ojson::array();
    for (int k = 1; k <= ops.num_outlets(); ++k) {
      const auto tr = tangential_traction_residual(space, ops.lift(last.v), k);
      traction.push_back({{"k", k}, {"value", tr.value}, {"scale", tr.scale}});
    }

    manifest["steps"] = rc.num_steps();
    manifest["dt"] = rc.dt;
    manifest["theta"] = rc.theta;
    manifest["energy"] = {{"initial", records.front().E},
                          {"final", records.back().E},
                          {"dissipated", energy.dissipated},
                          {"max_balance_residual", energy.residual.empty() ? 0.0 : energy.max_residual},
                          {"tolerance", energy.tolerance}};
    manifest["divergence_max"] = div_max;
    manifest["mass_balance_max"] = mass;
    manifest["averaged_pressure"] = {{"max_abs_residual", r_max}, {"pressure_scale", p_scale}};
    manifest["tangential_traction"] = traction;
    verdict("divergence", div_max <= cfg.checks.divergence);
    verdict("mass_balance", mass <= cfg.checks.mass_balance);
    if (rc.theta == 1.0) {
      verdict("energy_inequality", energy.inequality_holds);
    } else {
      verdicts["energy_inequality"] = "not_applicable";
    }
    verdicts["energy_monotone"] = energy.energy_monotone;
    verdict("averaged_pressure", r_max <= cfg.checks.averaged_pressure * std::max(p_scale, 1e-300));
    detail::say(opt, "run: " + std::to_string(rc.num_steps()) + " steps, E(T)=" + io::num(records.back().E) +
                         ", max|Bv|=" + io::num(div_max) + ", mass defect=" + io::num(mass));
  }

  if (reduced) {
    const auto gamma = gammas(rc.outlets);
    const ReducedBasis basis = compute_divfree_basis(ops, gamma, cfg.solver.m);
    const SystemState init = solver.initial_state();
    const ReducedSystem sys = build_reduced_system(basis, space, ops, rc, init.v);
    const auto traj = integrate_reduced(sys, rc.dt, rc.T, rc.theta);
    {
      auto out = io::open(dir / "g.csv");
      write_trajectory_csv(out, traj);
    }
    if (has_format(cfg, "reduced") || cfg.solver.path == "reduced") {
      auto mm = io::open(dir / "Mm.txt");
      write_dense(mm, sys.mass);
      auto am = io::open(dir / "Am.txt");
      write_dense(am, sys.stiffness);
    }
    const DenseMatrix kernel = divergence_kernel(ops);
    const double random_min = detail::random_basis_min_eigenvalue(ops, kernel, gamma, cfg.solver.m, 20, opt.seed);
    const double mm_min = min_eigenvalue(sys.mass);
    manifest["reduced"] = {{"m", basis.size()},
                           {"kernel_dimension", kernel.cols()},
                           {"gram_deviation", gram_deviation(basis.columns, basis.metric)},
                           {"divergence_max", (ops.divergence * basis.columns).cwiseAbs().maxCoeff()},
                           {"Mm_min_eigenvalue", mm_min},
                           {"random_basis_trials", 20},
                           {"random_basis_min_eigenvalue", random_min}};
    verdict("reduced_mass_spd", mm_min > 0.0 && random_min > 0.0);
    if (full) {
      double diff = 0.0, scale = 0.0;
      for (std::size_t i = 0; i < full_states.size() && i < traj.g.size(); ++i) {
        const Vector d = full_states[i] - basis.columns * traj.g[i];
        diff = std::max(diff, std::sqrt(d.dot(ops.mass * d)));
        scale = std::max(scale, std::sqrt(full_states[i].dot(ops.mass * full_states[i])));
      }
      const double rel = scale > 0.0 ? diff / scale : diff;
      manifest["reduced"]["relative_difference_to_full"] = rel;
      if (basis.size() == kernel.cols()) verdict("cross_path_equivalence", rel <= 1e-7);
    }
    detail::say(opt, "reduced: m=" + std::to_string(basis.size()) + " of " + std::to_string(kernel.cols()) +
                         ", min eig(M_m)=" + io::num(mm_min));
  }

  manifest["warnings"] = solver.warnings();
  manifest["verdicts"] = verdicts;
  manifest["status"] = ok ? "pass" : "fail";
  write_json(dir / "manifest.json", manifest);
  return ok ? 0 : 1;
}

/// Steady solve at t = 0 with the averaged-identity and traction diagnostics.
inline int command_steady(const ScenarioConfig& cfg, const CommandOptions& opt) {
  const auto dir = detail::output_dir(cfg, opt);
  std::filesystem::create_directories(dir);
  Discretization disc(build_mesh(cfg));
  const RunConfig rc = make_run_config(cfg);
  const StokesSolver solver(disc.space, disc.ops, rc);
  const auto [v, p] = solver.solve_steady(0.0);
  const auto r = steady_pressure_residual(disc.ops, v, p, rc.outlets, 0.0);
  const double spread = source_spread(rc.outlets, {0.0});

  auto out = io::open(dir / "steady.csv");
  out << "k,S,Q,pbar,r\n";
  double sum_q = 0.0, max_q = 0.0, r_max = 0.0;
  detail::ojson traction = detail::ojson::array();
  for (const auto& o : rc.outlets) {
    const double q = outlet_flux(disc.ops, v, o.k);
    sum_q += q;
    max_q = std::max(max_q, std::abs(q));
    r_max = std::max(r_max, std::abs(r[o.k - 1]));
    out << o.k << ',' << io::num(o.signal.eval(0.0)) << ',' << io::num(q) << ',' << io::num(average_pressure(disc.ops, p, o.k))
        << ',' << io::num(r[o.k - 1]) << '\n';
    const auto tr = tangential_traction_residual(disc.space, disc.ops.lift(v), o.k);
    traction.push_back({{"k", o.k}, {"value", tr.value}, {"scale", tr.scale}});
  }
  if (has_format(cfg, "vtk")) {
    auto vtk = io::open(dir / "steady.vtk");
    write_vtk(vtk, disc.space, disc.ops.lift(v), p, "steady velocity and pressure");
  }
  if (has_format(cfg, "mtx")) detail::write_matrices(dir, disc.ops);

  auto manifest = detail::manifest_header("steady", cfg, opt);
  manifest["mesh"] = mesh_statistics(disc.space);
  const double div = solver.divergence_norm(v);
  const double mass = std::abs(sum_q) / std::max(1.0, max_q);
  const bool div_ok = div <= cfg.checks.divergence;
  const bool mass_ok = mass <= cfg.checks.mass_balance;
  const bool avg_ok = r_max <= cfg.checks.averaged_pressure * std::max(spread, 1e-300);
  manifest["divergence_max"] = div;
  manifest["mass_balance"] = mass;
  manifest["averaged_pressure"] = {{"max_abs_residual", r_max}, {"source_spread", spread}};
  manifest["tangential_traction"] = traction;
  manifest["warnings"] = solver.warnings();
  manifest["verdicts"] = {{"divergence", div_ok}, {"mass_balance", mass_ok}, {"averaged_pressure", avg_ok}};
  const bool ok = div_ok && mass_ok && avg_ok;
  manifest["status"] = ok ? "pass" : "fail";
  write_json(dir / "manifest.json", manifest);
  detail::say(opt, "steady: max|r_k|=" + io::num(r_max) + " (spread " + io::num(spread) + "), mass defect=" + io::num(mass));
  return ok ? 0 : 1;
}

/// Order thresholds for the manufactured-solution study.
struct Expectations {
  int version = 1;
  double spatial_l2 = 2.7;
  double spatial_h1 = 1.8;
  double temporal_theta1 = 0.9;
  double temporal_theta_half = 1.8;
};

inline Expectations load_expectations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open expectations file " + path.string()});
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    Expectations e;
    e.version = j.at("version").get<int>();
    e.spatial_l2 = j.at("spatial").at("l2").get<double>();
    e.spatial_h1 = j.at("spatial").at("h1").get<double>();
    e.temporal_theta1 = j.at("temporal").at("theta_1").get<double>();
    e.temporal_theta_half = j.at("temporal").at("theta_0.5").get<double>();
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError({"malformed expectations file " + path.string() + ": " + ex.what()});
  }
}

struct ConvergenceReport {
  EOCTable spatial;
  EOCTable temporal_theta1;
  EOCTable temporal_theta_half;
};

inline ChannelManufactured manufactured_for(const ScenarioConfig& cfg) {
  if (cfg.geometry.type != "channel") throw InvalidParameter("converge needs a channel geometry");
  ChannelManufactured mf;
  mf.length = cfg.geometry.channel.length;
  mf.height = cfg.geometry.channel.height;
  mf.nu = cfg.nu;
  mf.lambda1 = cfg.outlets[0].lambda;
  mf.lambda2 = cfg.outlets[1].lambda;
  mf.gamma1 = cfg.outlets[0].gamma;
  mf.gamma2 = cfg.outlets[1].gamma;
  mf.s1 = cfg.outlets[0].signal;
  mf.s2 = cfg.outlets[1].signal;
  return mf;
}

inline ConvergenceReport run_convergence(const ScenarioConfig& cfg) {
  const auto& cv = cfg.converge;
  const ChannelManufactured mf = manufactured_for(cfg);
  const double aspect = std::max(1.0, std::round(mf.length / mf.height));
  ConvergenceReport rep;

  const Mesh base = build_channel(mf.length, mf.height, static_cast<int>(aspect) * cv.base_cells, cv.base_cells);
  std::vector<StudyLevel> space_levels;
  for (int l = 0; l < cv.levels; ++l) space_levels.push_back({refine_uniform(base, l), cv.spatial_dt});
  rep.spatial = manufactured_solution_study(mf.solution(cv.spatial_T), space_levels, cv.spatial_T, cv.spatial_theta,
                                            StudyAxis::space);

  const Mesh fine = build_channel(mf.length, mf.height, static_cast<int>(aspect) * cv.temporal_cells, cv.temporal_cells);
  std::vector<StudyLevel> time_levels;
  for (int l = 0; l < cv.levels; ++l) time_levels.push_back({fine, cv.temporal_dt / std::pow(2.0, l)});
  const ExactSolution exact = mf.solution(cv.temporal_T);
  rep.temporal_theta1 = manufactured_solution_study(exact, time_levels, cv.temporal_T, 1.0, StudyAxis::time);
  rep.temporal_theta_half = manufactured_solution_study(exact, time_levels, cv.temporal_T, 0.5, StudyAxis::time);
  return rep;
}

/// Levels (by index) whose observed order falls below the threshold.
inline std::vector<int> offending_levels(const EOCTable& t, double threshold, bool use_h1) {
  std::vector<int> bad;
  if (t.rows.size() < 2) return bad;
  const auto& last = t.rows.back();
  const double order = use_h1 ? last.order_h1 : last.order_l2;
  if (!(order >= threshold)) bad.push_back(static_cast<int>(t.rows.size()) - 1);
  return bad;
}

inline int command_converge(const ScenarioConfig& cfg, const CommandOptions& opt) {
  const auto dir = detail::output_dir(cfg, opt);
  std::filesystem::create_directories(dir);
  Expectations ex;
  if (!cfg.converge.expectations.empty()) ex = load_expectations(cfg.source_dir / cfg.converge.expectations);
  const ConvergenceReport rep = run_convergence(cfg);
  const auto put = [&](const std::string& name, const EOCTable& t) {
    auto out = io::open(dir / name);
    write_eoc_csv(out, t);
  };
  put("eoc_spatial.csv", rep.spatial);
  put("eoc_temporal_theta1.csv", rep.temporal_theta1);
  put("eoc_temporal_theta0.5.csv", rep.temporal_theta_half);

  auto manifest = detail::manifest_header("converge", cfg, opt);
  manifest["expectations_version"] = ex.version;
  detail::ojson checks = detail::ojson::array();
  bool ok = true;
  const auto check = [&](const std::string& name, const EOCTable& t, double threshold, bool h1) {
    if (t.rows.size() < 2) {
      checks.push_back({{"name", name}, {"threshold", threshold}, {"status", "no_orders"}});
      return;
    }
    const auto bad = offending_levels(t, threshold, h1);
    const double order = h1 ? t.rows.back().order_h1 : t.rows.back().order_l2;
    checks.push_back({{"name", name}, {"threshold", threshold}, {"order", order}, {"pass", bad.empty()}, {"offending_levels", bad}});
    if (!bad.empty()) {
      ok = false;
      if (!opt.quiet)
        std::cerr << "converge: " << name << " order " << io::num(order) << " below " << io::num(threshold) << " at level "
                  << bad.front() << '\n';
    }
  };
  check("spatial_l2", rep.spatial, ex.spatial_l2, false);
  check("spatial_h1", rep.spatial, ex.spatial_h1, true);
  check("temporal_theta1", rep.temporal_theta1, ex.temporal_theta1, false);
  check("temporal_theta0.5", rep.temporal_theta_half, ex.temporal_theta_half, false);
  manifest["checks"] = checks;
  manifest["monotone"] = {{"spatial", rep.spatial.monotone()},
                          {"temporal_theta1", rep.temporal_theta1.monotone()},
                          {"temporal_theta0.5", rep.temporal_theta_half.monotone()}};
  manifest["status"] = ok ? "pass" : "fail";
  write_json(dir / "manifest.json", manifest);
  if (!rep.spatial.rows.empty())
    detail::say(opt, "converge: spatial L2 order " + io::num(rep.spatial.rows.back().order_l2) + ", H1 order " +
                         io::num(rep.spatial.rows.back().order_h1));
  return ok ? 0 : 1;
}

inline int command_lumped(const ScenarioConfig& cfg, const CommandOptions& opt) {
  const auto dir = detail::output_dir(cfg, opt);
  std::filesystem::create_directories(dir);
  const LumpedNetwork net = make_network(cfg);
  const auto traj = transient_fluxes(net, cfg.time.dt, cfg.time.T);
  const auto steady = steady_fluxes(net, cfg.time.T);
  auto out = io::open(dir / "lumped.csv");
  out << 't';
  for (std::size_t k = 1; k <= net.terminals.size(); ++k) out << ",Q_" << k;
  for (int n = 0; n < net.num_nodes; ++n) out << ",P_" << n;
  out << '\n';
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    out << io::num(traj.t[i]);
    for (Eigen::Index k = 0; k < traj.states[i].terminal_flux.size(); ++k) out << ',' << io::num(traj.states[i].terminal_flux[k]);
    for (Eigen::Index n = 0; n < traj.states[i].pressure.size(); ++n) out << ',' << io::num(traj.states[i].pressure[n]);
    out << '\n';
  }
  auto manifest = detail::manifest_header("lumped", cfg, opt);
  detail::ojson q = detail::ojson::array();
  for (Eigen::Index k = 0; k < steady.terminal_flux.size(); ++k) q.push_back(steady.terminal_flux[k]);
  manifest["steady_terminal_flux_at_T"] = q;
  manifest["final_terminal_flux"] = [&] {
    detail::ojson f = detail::ojson::array();
    for (Eigen::Index k = 0; k < traj.states.back().terminal_flux.size(); ++k) f.push_back(traj.states.back().terminal_flux[k]);
    return f;
  }();
  manifest["status"] = "pass";
  write_json(dir / "manifest.json", manifest);
  detail::say(opt, "lumped: " + std::to_string(traj.t.size() - 1) + " steps");
  return 0;
}

struct FluxComparison {
  std::vector<double> fem;
  std::vector<double> lumped;
  std::vector<double> relative_deviation;
};

/// Steady FEM outlet fluxes against the lumped network at t = 0.
inline FluxComparison compare_fluxes(const ScenarioConfig& cfg) {
  Discretization disc(build_mesh(cfg));
  const RunConfig rc = make_run_config(cfg);
  const StokesSolver solver(disc.space, disc.ops, rc);
  const auto sol = solver.solve_steady(0.0);
  const auto net = steady_fluxes(make_network(cfg), 0.0);
  FluxComparison c;
  double scale = 0.0;
  for (Eigen::Index k = 0; k < net.terminal_flux.size(); ++k) scale = std::max(scale, std::abs(net.terminal_flux[k]));
  for (const auto& o : rc.outlets) {
    const double qf = outlet_flux(disc.ops, sol.first, o.k);
    const double ql = net.terminal_flux[o.k - 1];
    c.fem.push_back(qf);
    c.lumped.push_back(ql);
    c.relative_deviation.push_back(std::abs(qf - ql) / (std::abs(ql) > 0.0 ? std::abs(ql) : std::max(scale, 1e-300)));
  }
  return c;
}

inline int command_compare(const ScenarioConfig& cfg, const CommandOptions& opt) {
  const auto dir = detail::output_dir(cfg, opt);
  std::filesystem::create_directories(dir);
  const FluxComparison c = compare_fluxes(cfg);
  auto out = io::open(dir / "compare.csv");
  out << "k,Q_fem,Q_lumped,relative_deviation\n";
  double worst = 0.0;
  for (std::size_t k = 0; k < c.fem.size(); ++k) {
    out << k + 1 << ',' << io::num(c.fem[k]) << ',' << io::num(c.lumped[k]) << ',' << io::num(c.relative_deviation[k]) << '\n';
    worst = std::max(worst, c.relative_deviation[k]);
  }
  auto manifest = detail::manifest_header("compare", cfg, opt);
  manifest["max_relative_deviation"] = worst;
  manifest["status"] = "pass";
  write_json(dir / "manifest.json", manifest);
  detail::say(opt, "compare: max relative flux deviation " + io::num(worst));
  return 0;
}

}  // namespace odstokes
