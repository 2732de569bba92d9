#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "odstokes/errors.hpp"
#include "odstokes/mesh.hpp"

namespace odstokes {

namespace detail {

/// Shortest decimal text that parses back to the identical double.
inline std::string exact_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw InvalidParameter("cannot format number");
  return std::string(buf, ptr);
}

inline double parse_double(const std::string& token) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size())
    throw InvalidParameter("malformed number '" + token + "'");
  return v;
}

inline int parse_int(const std::string& token) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size())
    throw InvalidParameter("malformed integer '" + token + "'");
  return v;
}

}  // namespace detail

/// Plain-text mesh format:
///   mesh2d <nv> <nt> <nb>
///   x y            (nv lines)
///   i j k          (nt lines, 0-based, counter-clockwise)
///   i j TAG        (nb lines, TAG = wall | outlet:<k>)
inline void write_mesh(std::ostream& os, const Mesh& mesh) {
  os << "mesh2d " << mesh.vertices.size() << ' ' << mesh.triangles.size() << ' ' << mesh.boundary_edges.size()
     << '\n';
  for (const auto& p : mesh.vertices) os << detail::exact_double(p.x()) << ' ' << detail::exact_double(p.y()) << '\n';
  for (const auto& t : mesh.triangles) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (const auto& e : mesh.boundary_edges) {
    os << e.a << ' ' << e.b << ' ';
    if (e.tag.is_wall())
      os << "wall";
    else
      os << "outlet:" << e.tag.outlet_index();
    os << '\n';
  }
}

inline Mesh read_mesh(std::istream& is) {
  std::string magic;
  std::string snv, snt, snb;
  if (!(is >> magic >> snv >> snt >> snb) || magic != "mesh2d") throw InvalidParameter("missing 'mesh2d' header");
  const int nv = detail::parse_int(snv);
  const int nt = detail::parse_int(snt);
  const int nb = detail::parse_int(snb);
  if (nv < 0 || nt < 0 || nb < 0) throw InvalidParameter("negative counts in mesh header");

  Mesh mesh;
  mesh.vertices.reserve(static_cast<std::size_t>(nv));
  for (int i = 0; i < nv; ++i) {
    std::string x, y;
    if (!(is >> x >> y)) throw InvalidParameter("truncated vertex block");
    mesh.vertices.emplace_back(detail::parse_double(x), detail::parse_double(y));
  }
  for (int i = 0; i < nt; ++i) {
    std::string a, b, c;
    if (!(is >> a >> b >> c)) throw InvalidParameter("truncated triangle block");
    mesh.triangles.push_back({detail::parse_int(a), detail::parse_int(b), detail::parse_int(c)});
  }
  for (int i = 0; i < nb; ++i) {
    std::string a, b, tag;
    if (!(is >> a >> b >> tag)) throw InvalidParameter("truncated boundary block");
    BoundaryTag t;
    if (tag == "wall") {
      t = BoundaryTag::wall();
    } else if (tag.starts_with("outlet:")) {
      const int k = detail::parse_int(tag.substr(7));
      if (k < 1) throw InvalidParameter("outlet index must be >= 1");
      t = BoundaryTag::outlet(k);
    } else {
      throw InvalidParameter("unknown boundary tag '" + tag + "'");
    }
    mesh.boundary_edges.push_back({detail::parse_int(a), detail::parse_int(b), t});
  }
  detail::finalize_normals(mesh);
  validate(mesh);
  return mesh;
}

inline void save_mesh(const std::string& path, const Mesh& mesh) {
  std::ofstream os(path);
  if (!os) throw InvalidParameter("cannot open '" + path + "' for writing");
  write_mesh(os, mesh);
}

inline Mesh load_mesh(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InvalidParameter("cannot open '" + path + "'");
  return read_mesh(is);
}

inline std::string mesh_to_string(const Mesh& mesh) {
  std::ostringstream os;
  write_mesh(os, mesh);
  return os.str();
}

}  // namespace odstokes
