// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "odstokes/odstokes.hpp"

using namespace odstokes;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

char buf[512];

template <class... A>
std::string fmt(const char* f, A... a) {
  std::snprintf(buf, sizeof(buf), f, a...);
  return buf;
}

const fs::path kScenarios = fs::path(ODSTOKES_SOURCE_DIR) / "scenarios";

std::vector<fs::path> shipped_scenarios() {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(kScenarios))
    if (e.path().extension() == ".json") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

bool has_data(const ScenarioConfig& cfg) {
  if (cfg.forcing.type != "zero" && (cfg.forcing.value[0] != 0.0 || cfg.forcing.value[1] != 0.0)) return true;
  for (const auto& o : cfg.outlets)
    if (!(o.signal == Signal::constant(0.0).with_horizon(cfg.time.T))) return true;
  return false;
}

struct ScenarioRun {
  std::string name;
  ScenarioConfig cfg;
  std::vector<MonitorRecord> records;
};

std::vector<ScenarioRun>& scenario_runs() {
  static std::vector<ScenarioRun> runs = [] {
    std::vector<ScenarioRun> out;
    for (const auto& path : shipped_scenarios()) {
      ScenarioRun r{path.stem().string(), load_config(path), {}};
      const Discretization disc(build_mesh(r.cfg));
      const StokesSolver solver(disc.space, disc.ops, make_run_config(r.cfg));
      const Monitor monitor(solver);
      solver.run([&](const SystemState& s) { r.records.push_back(monitor.record(s)); });
      out.push_back(std::move(r));
    }
    return out;
  }();
  return runs;
}

Outcome criterion1() {
  const Discretization d(build_channel(1, 1, 4, 4));
  const DenseMatrix kernel = divergence_kernel(d.ops);
  std::mt19937_64 rng(20240601);
  double worst = std::numeric_limits<double>::infinity();
  int trials = 0;
  for (double g : {0.01, 0.1, 1.0}) {
    const std::vector<double> gamma(2, g);
    for (int i = 0; i < 100; ++i) {
      const int m = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(kernel.cols()));
      const DenseMatrix w = random_admissible_basis(kernel, m, rng);
      worst = std::min(worst, min_eigenvalue(assemble_Mm(w, d.ops, gamma)));
      ++trials;
    }
  }
  return {worst > 0.0, fmt("%d trials, min eig(M_m) = %.3e", trials, worst)};
}

Outcome criterion2() {
  const Discretization d(build_channel(2, 1, 8, 4));
  RunConfig rc;
  rc.T = 50.0;
  rc.dt = 0.25;
  rc.theta = 1.0;
  rc.outlets = {OutletSpec{1, 1.0, 0.1, Signal::constant(0.0).with_horizon(rc.T)},
                OutletSpec{2, 0.5, 0.2, Signal::constant(0.0).with_horizon(rc.T)}};
  rc.initial = [](const Point& x, double) {
    const Point c(1.0, 0.5);
    const Point r = x - c;
    const double g = std::exp(-r.squaredNorm() / 0.09);
    return Point(-r.y() * g, r.x() * g);
  };
  const StokesSolver solver(d.space, d.ops, rc);
  std::vector<double> E;
  solver.run([&](const SystemState& s) { E.push_back(energy(d.ops, s.v, gammas(rc.outlets))); });
  bool monotone = true;
  for (std::size_t n = 1; n < E.size(); ++n) monotone = monotone && E[n] <= E[n - 1];
  const int steps = static_cast<int>(E.size()) - 1;
  const double ratio = E.back() / E.front();
  return {E.front() > 0.0 && monotone && steps >= 200 && ratio <= 1e-6,
          fmt("%d steps to T = %.0f, monotone %s, E(T)/E(0) = %.3e", steps, rc.T, monotone ? "yes" : "no", ratio)};
}

Outcome criterion3() {
  int checked = 0;
  double worst = -std::numeric_limits<double>::infinity();
  std::string failed;
  for (const auto& run : scenario_runs()) {
    if (!has_data(run.cfg)) continue;
    if (run.cfg.time.theta != 1.0) {
      failed += " " + run.name + "(theta!=1)";
      continue;
    }
    const auto rep = energy_balance_report(run.records, run.cfg.time.dt, 1e-10);
    worst = std::max(worst, rep.max_residual - rep.tolerance);
    if (!rep.inequality_holds) failed += " " + run.name;
    ++checked;
  }
  return {checked > 0 && failed.empty(),
          fmt("%d forced scenarios, max(residual - tol) = %.3e", checked, worst) + (failed.empty() ? "" : ", failed:" + failed)};
}

Outcome criterion4() {
  const Discretization d(build_channel(2, 1, 8, 4));
  RunConfig rc;
  rc.T = 1.0;
  rc.dt = 0.02;
  rc.outlets = {OutletSpec{1, 1.0, 0.1, Signal::sinusoid(1.0, 3.0).with_horizon(rc.T)},
                OutletSpec{2, 0.5, 0.2, Signal::ramp(0.0, -0.5).with_horizon(rc.T)}};
  rc.forcing = [](const Point& x, double t) { return Point(std::cos(2.0 * t), 0.5 * x.y()); };
  rc.initial = [](const Point& x, double) {
    const Point r = x - Point(1.0, 0.5);
    const double g = std::exp(-r.squaredNorm() / 0.09);
    return Point(-r.y() * g, r.x() * g);
  };
  const auto v = zero_data_uniqueness_test(d.space, d.ops, rc, 1e-7);
  return {v.pass(), fmt("zero data exact: full %s, reduced %s; relative sup M-norm difference %.3e",
                        v.solver_zero_exact ? "yes" : "no", v.galerkin_zero_exact ? "yes" : "no", v.cross_path_difference)};
}

struct SteadyLevel {
  double flux_deviation;
  double residual;
};

std::vector<SteadyLevel>& steady_levels() {
  static std::vector<SteadyLevel> levels = [] {
    ScenarioConfig cfg = load_config(kScenarios / "steady_channel.json");
    const auto& ch = cfg.geometry.channel;
    const double q = (cfg.outlets[0].signal.eval(0) - cfg.outlets[1].signal.eval(0)) /
                     (12.0 * cfg.nu * ch.length / std::pow(ch.height, 3) + (cfg.outlets[0].lambda + cfg.outlets[1].lambda) / ch.height);
    std::vector<SteadyLevel> out;
    for (int level = 0; level <= 2; ++level) {
      cfg.geometry.refine = level;
      const Discretization d(build_mesh(cfg));
      const RunConfig rc = make_run_config(cfg);
      const StokesSolver solver(d.space, d.ops, rc);
      const auto [v, p] = solver.solve_steady(0.0);
      const auto r = steady_pressure_residual(d.ops, v, p, rc.outlets, 0.0);
      double rmax = 0.0;
      for (double x : r) rmax = std::max(rmax, std::abs(x));
      out.push_back({std::abs(outlet_flux(d.ops, v, 2) - q) / std::abs(q), rmax});
    }
    return out;
  }();
  return levels;
}

Outcome criterion5() {
  const auto& l = steady_levels();
  bool pass = true;
  for (std::size_t i = 0; i < l.size(); ++i) {
    pass = pass && l[i].flux_deviation <= 0.05;
    if (i > 0) pass = pass && l[i].flux_deviation < l[i - 1].flux_deviation;
  }
  return {pass, fmt("L/H = 10, relative flux deviation %.4e, %.4e, %.4e", l[0].flux_deviation, l[1].flux_deviation,
                    l[2].flux_deviation)};
}

Outcome criterion6() {
  const auto& l = steady_levels();
  const ScenarioConfig cfg = load_config(kScenarios / "steady_channel.json");
  const double spread = std::abs(cfg.outlets[0].signal.eval(0) - cfg.outlets[1].signal.eval(0));
  bool pass = l.back().residual <= 0.05 * spread;
  for (std::size_t i = 1; i < l.size(); ++i) pass = pass && l[i - 1].residual >= 1.5 * l[i].residual;
  return {pass, fmt("max|r_k| = %.4e, %.4e, %.4e (|S1-S2| = %g), ratios %.2f, %.2f", l[0].residual, l[1].residual,
                    l[2].residual, spread, l[0].residual / l[1].residual, l[1].residual / l[2].residual)};
}

Outcome criterion7() {
  const ScenarioConfig cfg = load_config(kScenarios / "converge.json");
  const Expectations ex = load_expectations(cfg.source_dir / cfg.converge.expectations);
  const ConvergenceReport rep = run_convergence(cfg);
  const auto last = [](const EOCTable& t) { return t.rows.back(); };
  const bool enough = rep.spatial.rows.size() == 3 && rep.temporal_theta1.rows.size() == 3 && rep.temporal_theta_half.rows.size() == 3;
  const double l2 = last(rep.spatial).order_l2, h1 = last(rep.spatial).order_h1;
  const double t1 = last(rep.temporal_theta1).order_l2, th = last(rep.temporal_theta_half).order_l2;
  const bool pass = enough && l2 >= ex.spatial_l2 && h1 >= ex.spatial_h1 && t1 >= ex.temporal_theta1 && th >= ex.temporal_theta_half;
  return {pass, fmt("L2 %.3f (>= %.1f), H1 %.3f (>= %.1f), theta=1 %.3f (>= %.1f), theta=1/2 %.3f (>= %.1f)", l2, ex.spatial_l2,
                    h1, ex.spatial_h1, t1, ex.temporal_theta1, th, ex.temporal_theta_half)};
}

Outcome criterion8() {
  double worst = 0.0;
  std::size_t rows = 0;
  for (const auto& run : scenario_runs()) {
    worst = std::max(worst, mass_balance_defect(run.records));
    rows += run.records.size();
  }
  return {worst <= 1e-9, fmt("%zu scenarios, %zu states, max |sum Q_k| / max(1, max|Q_k|) = %.3e", scenario_runs().size(), rows, worst)};
}

Outcome criterion9() {
  struct Case {
    std::string label;
    std::function<void(nlohmann::ordered_json&)> edit;
    std::string assumption;
  };
  std::vector<Case> cases;
  for (const char* geometry : {"channel", "bifurcation"}) {
    const int K = std::string(geometry) == "bifurcation" ? 3 : 2;
    for (int k = 0; k < K; ++k)
      for (double bad : {0.0, -1.0}) {
        cases.push_back({fmt("%s lambda_%d = %g", geometry, k + 1, bad),
                         [=](auto& j) { j["physics"]["outlets"][k]["lambda"] = bad; }, "assumption[lambda_k > 0]"});
        cases.push_back({fmt("%s gamma_%d = %g", geometry, k + 1, bad),
                         [=](auto& j) { j["physics"]["outlets"][k]["gamma"] = bad; }, "assumption[gamma_k > 0]"});
      }
    for (double bad : {0.0, -1.0})
      cases.push_back({fmt("%s T = %g", geometry, bad), [=](auto& j) { j["time"]["T"] = bad; }, "assumption[T > 0]"});
  }
  int rejected = 0;
  std::string failed;
  for (const auto& c : cases) {
    const bool bif = c.label.rfind("bifurcation", 0) == 0;
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(bif ? R"({"schema_version": 1, "geometry": {"type": "bifurcation"},
      "physics": {"outlets": [{"k": 1, "lambda": 1, "gamma": 0.1}, {"k": 2, "lambda": 1, "gamma": 0.1},
                              {"k": 3, "lambda": 1, "gamma": 0.1}]}, "time": {"T": 1, "dt": 0.1}})"
                                                            : R"({"schema_version": 1,
      "physics": {"outlets": [{"k": 1, "lambda": 1, "gamma": 0.1}, {"k": 2, "lambda": 1, "gamma": 0.1}]},
      "time": {"T": 1, "dt": 0.1}})");
    parse_config(j);
    c.edit(j);
    try {
      parse_config(j);
      failed += " [" + c.label + ": accepted]";
    } catch (const ConfigError& e) {
      if (e.violations().size() == 1 && e.violations()[0].find(c.assumption) != std::string::npos)
        ++rejected;
      else
        failed += " [" + c.label + ": " + e.violations().front() + "]";
    }
  }
  return {failed.empty(), fmt("%d of %zu single-violation configs rejected with the named assumption", rejected, cases.size()) + failed};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria{
      {"reduced mass matrix SPD over random admissible bases", criterion1},
      {"energy decay with zero data", criterion2},
      {"discrete energy inequality on forced scenarios", criterion3},
      {"cross-path equivalence of full and reduced trajectories", criterion4},
      {"steady channel flux against the lumped law", criterion5},
      {"averaged-pressure identity on the steady channel", criterion6},
      {"manufactured-solution convergence orders", criterion7},
      {"mass conservation across outlets", criterion8},
      {"rejection of configs violating the well-posedness assumptions", criterion9},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("criterion %zu: %s  %s: %s (%.2f s)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
