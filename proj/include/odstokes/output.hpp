#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "odstokes/errors.hpp"
#include "odstokes/fem.hpp"
#include "odstokes/galerkin.hpp"
#include "odstokes/manufactured.hpp"
#include "odstokes/monitors.hpp"

namespace odstokes {

namespace io {

inline std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::ofstream open(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace io

/// t,E,D,power,Q_1..Q_K,pbar_1..pbar_K,r_1..r_K
inline void write_monitor_csv(std::ostream& os, const std::vector<MonitorRecord>& records, int num_outlets) {
  os << "t,E,D,power";
  for (const char* name : {"Q_", "pbar_", "r_"})
    for (int k = 1; k <= num_outlets; ++k) os << ',' << name << k;
  os << '\n';
  for (const auto& rec : records) {
    os << io::num(rec.t) << ',' << io::num(rec.E) << ',' << io::num(rec.D) << ',' << io::num(rec.power);
    for (const auto* col : {&rec.Q, &rec.pbar, &rec.r})
      for (int k = 0; k < num_outlets; ++k) os << ',' << io::num(col->at(static_cast<std::size_t>(k)));
    os << '\n';
  }
}

/// Legacy VTK, ASCII unstructured grid of quadratic triangles. Pressure is linear, so midpoints take the edge mean.
inline void write_vtk(std::ostream& os, const TaylorHoodSpace& space, const Vector& v_full, const Vector& p,
                      const std::string& title) {
  const int nn = space.num_nodes();
  const std::size_t ne = space.num_elements();
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << nn << " double\n";
  for (int n = 0; n < nn; ++n) {
    const Point x = space.node_position(n);
    os << io::num(x.x()) << ' ' << io::num(x.y()) << " 0\n";
  }
  os << "CELLS " << ne << ' ' << ne * 7 << '\n';
  for (std::size_t e = 0; e < ne; ++e) {
    os << 6;
    for (int id : space.element_nodes(e)) os << ' ' << id;
    os << '\n';
  }
  os << "CELL_TYPES " << ne << '\n';
  for (std::size_t e = 0; e < ne; ++e) os << "22\n";

  std::vector<double> pressure(static_cast<std::size_t>(nn), 0.0);
  for (int i = 0; i < space.num_vertices(); ++i) pressure[i] = p[i];
  for (std::size_t e = 0; e < ne; ++e) {
    const auto& nodes = space.element_nodes(e);
    for (int i = 0; i < 3; ++i) pressure[nodes[3 + i]] = 0.5 * (p[nodes[i]] + p[nodes[(i + 1) % 3]]);
  }
  os << "POINT_DATA " << nn << '\n';
  os << "VECTORS velocity double\n";
  for (int n = 0; n < nn; ++n)
    os << io::num(v_full[TaylorHoodSpace::velocity_dof(n, 0)]) << ' ' << io::num(v_full[TaylorHoodSpace::velocity_dof(n, 1)])
       << " 0\n";
  os << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (int n = 0; n < nn; ++n) os << io::num(pressure[static_cast<std::size_t>(n)]) << '\n';
}

/// Dense matrix as whitespace-separated rows preceded by "rows cols".
inline void write_dense(std::ostream& os, const DenseMatrix& m) {
  os << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << io::num(m(i, j));
    os << '\n';
  }
}

inline DenseMatrix read_dense(std::istream& is) {
  Eigen::Index rows = 0, cols = 0;
  if (!(is >> rows >> cols) || rows < 0 || cols < 0) throw Error("malformed dense matrix header");
  DenseMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      if (!(is >> m(i, j))) throw Error("truncated dense matrix");
  return m;
}

/// t,g_1..g_m
inline void write_trajectory_csv(std::ostream& os, const ReducedTrajectory& traj) {
  const Eigen::Index m = traj.g.empty() ? 0 : traj.g.front().size();
  os << 't';
  for (Eigen::Index i = 1; i <= m; ++i) os << ",g_" << i;
  os << '\n';
  for (std::size_t n = 0; n < traj.t.size(); ++n) {
    os << io::num(traj.t[n]);
    for (Eigen::Index i = 0; i < m; ++i) os << ',' << io::num(traj.g[n][i]);
    os << '\n';
  }
}

inline void write_eoc_csv(std::ostream& os, const EOCTable& table) {
  os << "level,h,dt,err_l2,err_h1,err_flux,order_l2,order_h1,order_flux\n";
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    os << i << ',' << io::num(r.h) << ',' << io::num(r.dt) << ',' << io::num(r.err_l2) << ',' << io::num(r.err_h1) << ','
       << io::num(r.err_flux);
    if (i == 0)
      os << ",,,";
    else
      os << ',' << io::num(r.order_l2) << ',' << io::num(r.order_h1) << ',' << io::num(r.order_flux);
    os << '\n';
  }
}

inline nlohmann::ordered_json mesh_statistics(const TaylorHoodSpace& space) {
  const Mesh& m = space.mesh();
  nlohmann::ordered_json outlets = nlohmann::ordered_json::array();
  for (int k = 1; k <= m.num_outlets(); ++k)
    outlets.push_back({{"k", k}, {"length", m.outlet_length(k)}, {"normal", {m.outlet_normal(k).x(), m.outlet_normal(k).y()}}});
  return {{"vertices", m.vertices.size()},
          {"triangles", m.triangles.size()},
          {"edges", m.num_edges()},
          {"boundary_edges", m.boundary_edges.size()},
          {"area", m.total_area()},
          {"h_max", m.max_edge_length()},
          {"wall_length", m.wall_length()},
          {"outlets", outlets},
          {"velocity_dofs", space.num_velocity_dofs()},
          {"free_velocity_dofs", space.num_free_dofs()},
          {"pressure_dofs", space.num_pressure_dofs()}};
}

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  auto out = io::open(path);
  out << j.dump(2) << '\n';
}

}  // namespace odstokes
