#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "odstokes/errors.hpp"
#include "odstokes/mesh.hpp"
#include "odstokes/outlets.hpp"
#include "odstokes/signal.hpp"

namespace odstokes {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

struct ChannelGeometry {
  double length = 10.0;
  double height = 1.0;
  int nx = 20;
  int ny = 2;
  bool operator==(const ChannelGeometry&) const = default;
};

struct GeometryConfig {
  std::string type = "channel";  // channel | bifurcation
  ChannelGeometry channel;
  BifurcationParams bifurcation;
  int refine = 0;
  bool operator==(const GeometryConfig&) const = default;
};

/// Body force: zero, constant vector, or vector amplitude times sin(omega t + phase).
struct ForcingConfig {
  std::string type = "zero";  // zero | constant | sinusoid
  std::array<double, 2> value{0.0, 0.0};
  double omega = 1.0;
  double phase = 0.0;
  bool operator==(const ForcingConfig&) const = default;
};

/// Initial velocity before projection onto the discrete kernel.
struct InitialConfig {
  std::string type = "zero";  // zero | poiseuille | vortex
  double amplitude = 1.0;
  std::array<double, 2> center{0.5, 0.5};
  double radius = 0.25;
  bool operator==(const InitialConfig&) const = default;
};

struct TimeConfig {
  double T = 1.0;
  double dt = 0.01;
  double theta = 1.0;
  bool operator==(const TimeConfig&) const = default;
};

struct SolverConfig {
  std::string path = "full";  // full | reduced | both
  int m = 16;
  bool operator==(const SolverConfig&) const = default;
};

struct OutputConfig {
  std::string directory = "out";
  int vtk_interval = 0;  // steps between snapshots, 0 for none
  std::vector<std::string> formats{"csv"};
  bool operator==(const OutputConfig&) const = default;
};

struct CheckConfig {
  double averaged_pressure = 0.05;  // relative to the largest pressure magnitude or source spread
  double mass_balance = 1e-9;
  double energy = 1e-10;
  double divergence = 1e-9;
  bool operator==(const CheckConfig&) const = default;
};

struct ConvergeConfig {
  int levels = 3;
  int base_cells = 2;
  double spatial_dt = 0.0025;
  double spatial_T = 0.05;
  double spatial_theta = 0.5;
  int temporal_cells = 24;
  double temporal_dt = 0.1;
  double temporal_T = 1.0;
  std::string expectations;  // path relative to the config file; empty for built-in thresholds
  bool operator==(const ConvergeConfig&) const = default;
};

struct ScenarioConfig {
  int schema_version = kSchemaVersion;
  GeometryConfig geometry;
  double nu = 1.0;
  std::vector<OutletSpec> outlets;
  ForcingConfig forcing;
  InitialConfig initial;
  TimeConfig time;
  SolverConfig solver;
  OutputConfig output;
  CheckConfig checks;
  ConvergeConfig converge;
  std::filesystem::path source_dir;  // directory of the file it was loaded from

  int expected_outlets() const { return geometry.type == "bifurcation" ? 3 : 2; }

  bool operator==(const ScenarioConfig& o) const {
    return schema_version == o.schema_version && geometry == o.geometry && nu == o.nu && outlets == o.outlets &&
           forcing == o.forcing && initial == o.initial && time == o.time && solver == o.solver && output == o.output &&
           checks == o.checks && converge == o.converge;
  }
};

namespace detail {

class ConfigReader {
 public:
  std::vector<std::string> violations;

  void fail(const std::string& msg) { violations.push_back(msg); }

  /// Rejects keys outside `allowed`.
  void keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
      fail(where + ": expected an object");
      return;
    }
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
      if (!ok.count(k)) fail("unknown key '" + k + "' in " + where);
  }

  void number(const json& j, const char* key, const std::string& where, double& out) {
    if (!j.is_object() || !j.contains(key)) return;
    if (!j[key].is_number()) {
      fail(where + "." + key + ": expected a number");
      return;
    }
    out = j[key].get<double>();
  }

  void integer(const json& j, const char* key, const std::string& where, int& out) {
    if (!j.is_object() || !j.contains(key)) return;
    if (!j[key].is_number_integer()) {
      fail(where + "." + key + ": expected an integer");
      return;
    }
    out = j[key].get<int>();
  }

  void string(const json& j, const char* key, const std::string& where, std::string& out) {
    if (!j.is_object() || !j.contains(key)) return;
    if (!j[key].is_string()) {
      fail(where + "." + key + ": expected a string");
      return;
    }
    out = j[key].get<std::string>();
  }

  void pair(const json& j, const char* key, const std::string& where, std::array<double, 2>& out) {
    if (!j.is_object() || !j.contains(key)) return;
    const json& v = j[key];
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      fail(where + "." + key + ": expected [x, y]");
      return;
    }
    out = {v[0].get<double>(), v[1].get<double>()};
  }

  void choice(const std::string& value, const std::string& where, std::initializer_list<const char*> options) {
    for (const char* o : options)
      if (value == o) return;
    std::string list;
    for (const char* o : options) list += std::string(list.empty() ? "" : ", ") + o;
    fail(where + ": '" + value + "' is not one of " + list);
  }
};

inline Signal read_signal(ConfigReader& r, const json& j, const std::string& where) {
  if (!j.is_object()) {
    r.fail(where + ": expected an object");
    return Signal();
  }
  std::string type = "constant";
  r.string(j, "type", where, type);
  try {
    if (type == "constant") {
      r.keys(j, where, {"type", "value"});
      double v = 0.0;
      r.number(j, "value", where, v);
      return Signal::constant(v);
    }
    if (type == "ramp") {
      r.keys(j, where, {"type", "offset", "slope"});
      double a = 0.0, b = 0.0;
      r.number(j, "offset", where, a);
      r.number(j, "slope", where, b);
      return Signal::ramp(a, b);
    }
    if (type == "sinusoid") {
      r.keys(j, where, {"type", "amplitude", "omega", "phase"});
      double a = 1.0, w = 1.0, p = 0.0;
      r.number(j, "amplitude", where, a);
      r.number(j, "omega", where, w);
      r.number(j, "phase", where, p);
      return Signal::sinusoid(a, w, p);
    }
    if (type == "smooth_step") {
      r.keys(j, where, {"type", "from", "to", "t0", "t1"});
      double a = 0.0, b = 1.0, t0 = 0.0, t1 = 1.0;
      r.number(j, "from", where, a);
      r.number(j, "to", where, b);
      r.number(j, "t0", where, t0);
      r.number(j, "t1", where, t1);
      return Signal::smooth_step(a, b, t0, t1);
    }
    if (type == "sampled") {
      r.keys(j, where, {"type", "knots", "values"});
      std::vector<double> knots, values;
      if (j.contains("knots") && j["knots"].is_array())
        for (const auto& x : j["knots"]) knots.push_back(x.is_number() ? x.get<double>() : NAN);
      if (j.contains("values") && j["values"].is_array())
        for (const auto& x : j["values"]) values.push_back(x.is_number() ? x.get<double>() : NAN);
      return Signal::sampled(knots, values);
    }
  } catch (const Error& e) {
    r.fail(where + ": " + e.what());
    return Signal();
  }
  r.choice(type, where + ".type", {"constant", "ramp", "sinusoid", "smooth_step", "sampled"});
  return Signal();
}

inline json write_signal(const Signal& s) {
  return std::visit(
      [](const auto& k) -> json {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, signals::Constant>) {
          return {{"type", "constant"}, {"value", k.value}};
        } else if constexpr (std::is_same_v<T, signals::Ramp>) {
          return {{"type", "ramp"}, {"offset", k.offset}, {"slope", k.slope}};
        } else if constexpr (std::is_same_v<T, signals::Sinusoid>) {
          return {{"type", "sinusoid"}, {"amplitude", k.amplitude}, {"omega", k.omega}, {"phase", k.phase}};
        } else if constexpr (std::is_same_v<T, signals::SmoothStep>) {
          return {{"type", "smooth_step"}, {"from", k.from}, {"to", k.to}, {"t0", k.t0}, {"t1", k.t1}};
        } else {
          return {{"type", "sampled"}, {"knots", k.knots}, {"values", k.values}};
        }
      },
      s.kind());
}

}  // namespace detail

/// Parses and validates a scenario; every violation found is reported together in one ConfigError.
inline ScenarioConfig parse_config(const json& root, const std::filesystem::path& source_dir = {}) {
  detail::ConfigReader r;
  ScenarioConfig c;
  c.source_dir = source_dir;
  r.keys(root, "config", {"schema_version", "geometry", "physics", "forcing", "initial", "time", "solver", "output",
                          "checks", "converge"});
  if (!root.is_object()) throw ConfigError(r.violations);

  if (!root.contains("schema_version")) {
    r.fail("schema_version is required");
  } else {
    r.integer(root, "schema_version", "config", c.schema_version);
    if (c.schema_version != kSchemaVersion)
      r.fail("unsupported schema_version " + std::to_string(c.schema_version) + " (expected " +
             std::to_string(kSchemaVersion) + ")");
  }

  if (root.contains("geometry")) {
    const json& g = root["geometry"];
    r.string(g, "type", "geometry", c.geometry.type);
    r.integer(g, "refine", "geometry", c.geometry.refine);
    if (c.geometry.type == "channel") {
      r.keys(g, "geometry", {"type", "refine", "length", "height", "nx", "ny"});
      r.number(g, "length", "geometry", c.geometry.channel.length);
      r.number(g, "height", "geometry", c.geometry.channel.height);
      r.integer(g, "nx", "geometry", c.geometry.channel.nx);
      r.integer(g, "ny", "geometry", c.geometry.channel.ny);
      if (!(c.geometry.channel.length > 0.0) || !(c.geometry.channel.height > 0.0))
        r.fail("geometry: length and height must be > 0");
      if (c.geometry.channel.nx < 1 || c.geometry.channel.ny < 1) r.fail("geometry: nx and ny must be >= 1");
    } else if (c.geometry.type == "bifurcation") {
      r.keys(g, "geometry", {"type", "refine", "trunk_length", "trunk_width", "branch_length", "branch_width",
                             "half_angle_deg", "resolution"});
      auto& b = c.geometry.bifurcation;
      r.number(g, "trunk_length", "geometry", b.trunk_length);
      r.number(g, "trunk_width", "geometry", b.trunk_width);
      r.number(g, "branch_length", "geometry", b.branch_length);
      r.number(g, "branch_width", "geometry", b.branch_width);
      r.number(g, "half_angle_deg", "geometry", b.half_angle_deg);
      r.integer(g, "resolution", "geometry", b.resolution);
      if (!(b.trunk_length > 0.0) || !(b.trunk_width > 0.0) || !(b.branch_length > 0.0) || !(b.branch_width > 0.0))
        r.fail("geometry: bifurcation dimensions must be > 0");
      if (!(b.half_angle_deg > 0.0 && b.half_angle_deg < 90.0)) r.fail("geometry: half_angle_deg must lie in (0, 90)");
      if (b.resolution < 1) r.fail("geometry: resolution must be >= 1");
    } else {
      r.choice(c.geometry.type, "geometry.type", {"channel", "bifurcation"});
    }
    if (c.geometry.refine < 0) r.fail("geometry: refine must be >= 0");
  }

  if (root.contains("time")) {
    const json& t = root["time"];
    r.keys(t, "time", {"T", "dt", "theta"});
    r.number(t, "T", "time", c.time.T);
    r.number(t, "dt", "time", c.time.dt);
    r.number(t, "theta", "time", c.time.theta);
  }
  if (!(c.time.T > 0.0)) r.fail("assumption[T > 0] violated: T = " + std::to_string(c.time.T));
  if (!(c.time.dt > 0.0)) {
    r.fail("time.dt must be > 0");
  } else if (c.time.T > 0.0 && std::abs(std::round(c.time.T / c.time.dt) * c.time.dt - c.time.T) > 1e-9 * c.time.T) {
    r.fail("time.T must be a whole number of steps dt");
  }
  if (!(c.time.theta >= 0.5 && c.time.theta <= 1.0)) r.fail("time.theta must lie in [0.5, 1]");

  if (root.contains("physics")) {
    const json& p = root["physics"];
    r.keys(p, "physics", {"nu", "outlets"});
    r.number(p, "nu", "physics", c.nu);
    if (p.is_object() && p.contains("outlets")) {
      if (!p["outlets"].is_array()) {
        r.fail("physics.outlets: expected an array");
      } else {
        int index = 0;
        for (const auto& o : p["outlets"]) {
          ++index;
          const std::string where = "physics.outlets[" + std::to_string(index) + "]";
          r.keys(o, where, {"k", "lambda", "gamma", "signal"});
          OutletSpec spec;
          spec.k = index;
          r.integer(o, "k", where, spec.k);
          r.number(o, "lambda", where, spec.lambda);
          r.number(o, "gamma", where, spec.gamma);
          if (o.is_object() && o.contains("signal")) spec.signal = detail::read_signal(r, o["signal"], where + ".signal");
          if (spec.k != index) r.fail(where + ": outlets must be listed in order k = 1..K");
          if (!(spec.lambda > 0.0))
            r.fail("assumption[lambda_k > 0] violated: outlet " + std::to_string(spec.k) +
                   " lambda = " + std::to_string(spec.lambda));
          if (!(spec.gamma > 0.0))
            r.fail("assumption[gamma_k > 0] violated: outlet " + std::to_string(spec.k) +
                   " gamma = " + std::to_string(spec.gamma));
          c.outlets.push_back(spec);
        }
      }
    }
  }
  if (!(c.nu > 0.0)) r.fail("assumption[nu > 0] violated: nu = " + std::to_string(c.nu));
  if (c.outlets.empty()) {
    for (int k = 1; k <= c.expected_outlets(); ++k) c.outlets.push_back(OutletSpec{k, 1.0, 0.1, Signal::constant(0.0)});
  } else if (static_cast<int>(c.outlets.size()) != c.expected_outlets()) {
    r.fail("physics.outlets: " + c.geometry.type + " geometry has " + std::to_string(c.expected_outlets()) +
           " outlets, config lists " + std::to_string(c.outlets.size()));
  }
  if (c.time.T > 0.0)
    for (auto& o : c.outlets) o.signal = o.signal.with_horizon(c.time.T);

  if (root.contains("forcing")) {
    const json& f = root["forcing"];
    r.keys(f, "forcing", {"type", "value", "omega", "phase"});
    r.string(f, "type", "forcing", c.forcing.type);
    r.choice(c.forcing.type, "forcing.type", {"zero", "constant", "sinusoid"});
    r.pair(f, "value", "forcing", c.forcing.value);
    r.number(f, "omega", "forcing", c.forcing.omega);
    r.number(f, "phase", "forcing", c.forcing.phase);
  }

  if (root.contains("initial")) {
    const json& i = root["initial"];
    r.keys(i, "initial", {"type", "amplitude", "center", "radius"});
    r.string(i, "type", "initial", c.initial.type);
    r.choice(c.initial.type, "initial.type", {"zero", "poiseuille", "vortex"});
    r.number(i, "amplitude", "initial", c.initial.amplitude);
    r.pair(i, "center", "initial", c.initial.center);
    r.number(i, "radius", "initial", c.initial.radius);
    if (!(c.initial.radius > 0.0)) r.fail("initial.radius must be > 0");
  }

  if (root.contains("solver")) {
    const json& s = root["solver"];
    r.keys(s, "solver", {"path", "m"});
    r.string(s, "path", "solver", c.solver.path);
    r.choice(c.solver.path, "solver.path", {"full", "reduced", "both"});
    r.integer(s, "m", "solver", c.solver.m);
    if (c.solver.m < 1) r.fail("solver.m must be >= 1");
  }

  if (root.contains("output")) {
    const json& o = root["output"];
    r.keys(o, "output", {"directory", "vtk_interval", "formats"});
    r.string(o, "directory", "output", c.output.directory);
    r.integer(o, "vtk_interval", "output", c.output.vtk_interval);
    if (c.output.vtk_interval < 0) r.fail("output.vtk_interval must be >= 0");
    if (o.is_object() && o.contains("formats")) {
      c.output.formats.clear();
      if (!o["formats"].is_array()) {
        r.fail("output.formats: expected an array");
      } else {
        for (const auto& f : o["formats"]) {
          if (!f.is_string()) {
            r.fail("output.formats: expected strings");
            continue;
          }
          c.output.formats.push_back(f.get<std::string>());
          r.choice(c.output.formats.back(), "output.formats", {"csv", "vtk", "mtx", "reduced"});
        }
      }
    }
  }

  if (root.contains("checks")) {
    const json& k = root["checks"];
    r.keys(k, "checks", {"averaged_pressure", "mass_balance", "energy", "divergence"});
    r.number(k, "averaged_pressure", "checks", c.checks.averaged_pressure);
    r.number(k, "mass_balance", "checks", c.checks.mass_balance);
    r.number(k, "energy", "checks", c.checks.energy);
    r.number(k, "divergence", "checks", c.checks.divergence);
  }

  if (root.contains("converge")) {
    const json& v = root["converge"];
    auto& cv = c.converge;
    r.keys(v, "converge", {"levels", "base_cells", "spatial_dt", "spatial_T", "spatial_theta", "temporal_cells",
                           "temporal_dt", "temporal_T", "expectations"});
    r.integer(v, "levels", "converge", cv.levels);
    r.integer(v, "base_cells", "converge", cv.base_cells);
    r.number(v, "spatial_dt", "converge", cv.spatial_dt);
    r.number(v, "spatial_T", "converge", cv.spatial_T);
    r.number(v, "spatial_theta", "converge", cv.spatial_theta);
    r.integer(v, "temporal_cells", "converge", cv.temporal_cells);
    r.number(v, "temporal_dt", "converge", cv.temporal_dt);
    r.number(v, "temporal_T", "converge", cv.temporal_T);
    r.string(v, "expectations", "converge", cv.expectations);
    if (cv.levels < 1) r.fail("converge.levels must be >= 1");
    if (cv.base_cells < 1 || cv.temporal_cells < 1) r.fail("converge: cell counts must be >= 1");
    if (!(cv.spatial_dt > 0.0) || !(cv.temporal_dt > 0.0)) r.fail("converge: time steps must be > 0");
    if (!(cv.spatial_T > 0.0) || !(cv.temporal_T > 0.0))
      r.fail("assumption[T > 0] violated: converge horizons must be > 0");
  }

  if (!r.violations.empty()) throw ConfigError(r.violations);
  return c;
}

inline ScenarioConfig parse_config_text(const std::string& text, const std::filesystem::path& source_dir = {}) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("malformed configuration: ") + e.what()});
  }
  return parse_config(root, source_dir);
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open configuration " + path.string()});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.parent_path());
}

/// Canonical form with every default written out.
inline json to_json(const ScenarioConfig& c) {
  json geometry = {{"type", c.geometry.type}, {"refine", c.geometry.refine}};
  if (c.geometry.type == "bifurcation") {
    const auto& b = c.geometry.bifurcation;
    geometry["trunk_length"] = b.trunk_length;
    geometry["trunk_width"] = b.trunk_width;
    geometry["branch_length"] = b.branch_length;
    geometry["branch_width"] = b.branch_width;
    geometry["half_angle_deg"] = b.half_angle_deg;
    geometry["resolution"] = b.resolution;
  } else {
    geometry["length"] = c.geometry.channel.length;
    geometry["height"] = c.geometry.channel.height;
    geometry["nx"] = c.geometry.channel.nx;
    geometry["ny"] = c.geometry.channel.ny;
  }
  json outlets = json::array();
  for (const auto& o : c.outlets)
    outlets.push_back({{"k", o.k}, {"lambda", o.lambda}, {"gamma", o.gamma}, {"signal", detail::write_signal(o.signal)}});
  json j;
  j["schema_version"] = c.schema_version;
  j["geometry"] = geometry;
  j["physics"] = {{"nu", c.nu}, {"outlets", outlets}};
  j["forcing"] = {{"type", c.forcing.type}, {"value", c.forcing.value}, {"omega", c.forcing.omega}, {"phase", c.forcing.phase}};
  j["initial"] = {{"type", c.initial.type},
                  {"amplitude", c.initial.amplitude},
                  {"center", c.initial.center},
                  {"radius", c.initial.radius}};
  j["time"] = {{"T", c.time.T}, {"dt", c.time.dt}, {"theta", c.time.theta}};
  j["solver"] = {{"path", c.solver.path}, {"m", c.solver.m}};
  j["output"] = {{"directory", c.output.directory}, {"vtk_interval", c.output.vtk_interval}, {"formats", c.output.formats}};
  j["checks"] = {{"averaged_pressure", c.checks.averaged_pressure},
                 {"mass_balance", c.checks.mass_balance},
                 {"energy", c.checks.energy},
                 {"divergence", c.checks.divergence}};
  const auto& cv = c.converge;
  j["converge"] = {{"levels", cv.levels},
                   {"base_cells", cv.base_cells},
                   {"spatial_dt", cv.spatial_dt},
                   {"spatial_T", cv.spatial_T},
                   {"spatial_theta", cv.spatial_theta},
                   {"temporal_cells", cv.temporal_cells},
                   {"temporal_dt", cv.temporal_dt},
                   {"temporal_T", cv.temporal_T},
                   {"expectations", cv.expectations}};
  return j;
}

inline std::string serialize_config(const ScenarioConfig& c) { return to_json(c).dump(2) + "\n"; }

/// FNV-1a 64 of the canonical serialization.
inline std::uint64_t config_hash(const ScenarioConfig& c) {
  const std::string text = to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace odstokes
