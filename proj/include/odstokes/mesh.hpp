#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "odstokes/errors.hpp"

namespace odstokes {

using Point = Eigen::Vector2d;

/// Boundary classification: the rigid wall, or one of the numbered open sections (1-based).
class BoundaryTag {
 public:
  constexpr BoundaryTag() = default;

  static constexpr BoundaryTag wall() { return BoundaryTag{}; }
  static constexpr BoundaryTag outlet(int k) { return BoundaryTag{k}; }

  constexpr bool is_wall() const { return outlet_ == 0; }
  constexpr bool is_outlet() const { return outlet_ > 0; }
  /// 1-based outlet index; 0 for walls.
  constexpr int outlet_index() const { return outlet_; }

  constexpr bool operator==(const BoundaryTag&) const = default;

 private:
  constexpr explicit BoundaryTag(int k) : outlet_(k) {}
  int outlet_ = 0;
};

/// Oriented boundary edge: the domain lies to the left of a -> b.
struct BoundaryEdge {
  int a = 0;
  int b = 0;
  BoundaryTag tag;

  bool operator==(const BoundaryEdge&) const = default;
};

struct Mesh {
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> triangles;  // counter-clockwise
  std::vector<BoundaryEdge> boundary_edges;
  std::vector<Point> outlet_normals;  // outward unit normal of outlet k at index k-1

  int num_outlets() const { return static_cast<int>(outlet_normals.size()); }

  const Point& outlet_normal(int k) const { return outlet_normals.at(static_cast<std::size_t>(k - 1)); }

  double signed_area(std::size_t t) const {
    const auto& tri = triangles[t];
    const Point e1 = vertices[tri[1]] - vertices[tri[0]];
    const Point e2 = vertices[tri[2]] - vertices[tri[0]];
    return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
  }

  double total_area() const {
    double sum = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) sum += signed_area(t);
    return sum;
  }

  double edge_length(const BoundaryEdge& e) const { return (vertices[e.b] - vertices[e.a]).norm(); }

  /// |Gamma_k|, sum of outlet-k edge lengths.
  double outlet_length(int k) const {
    double sum = 0.0;
    for (const auto& e : boundary_edges)
      if (e.tag.outlet_index() == k) sum += edge_length(e);
    return sum;
  }

  double wall_length() const {
    double sum = 0.0;
    for (const auto& e : boundary_edges)
      if (e.tag.is_wall()) sum += edge_length(e);
    return sum;
  }

  /// Largest triangle edge length.
  double max_edge_length() const {
    double h = 0.0;
    for (const auto& tri : triangles)
      for (int i = 0; i < 3; ++i) h = std::max(h, (vertices[tri[(i + 1) % 3]] - vertices[tri[i]]).norm());
    return h;
  }

  /// Number of distinct (undirected) edges.
  std::size_t num_edges() const;

  bool operator==(const Mesh&) const = default;
};

namespace detail {

inline std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (lo << 32) | hi;
}

inline Point outward_normal(const Point& a, const Point& b) {
  const Point d = b - a;
  return Point(d.y(), -d.x()) / d.norm();
}

/// Outward normal of outlet k from the two extreme points of its segment. Builders, refinement and
/// the reader all go through this, so the stored normal is a pure function of the segment ends.
inline Point outlet_normal_from_edges(const Mesh& mesh, int k) {
  const BoundaryEdge* first = nullptr;
  for (const auto& e : mesh.boundary_edges)
    if (e.tag.outlet_index() == k) {
      first = &e;
      break;
    }
  if (!first) throw GeometryError("outlet " + std::to_string(k) + " has no edges");
  const Point dir = mesh.vertices[first->b] - mesh.vertices[first->a];
  int lo = first->a;
  int hi = first->b;
  for (const auto& e : mesh.boundary_edges) {
    if (e.tag.outlet_index() != k) continue;
    for (int v : {e.a, e.b}) {
      if (mesh.vertices[v].dot(dir) < mesh.vertices[lo].dot(dir)) lo = v;
      if (mesh.vertices[v].dot(dir) > mesh.vertices[hi].dot(dir)) hi = v;
    }
  }
  if (!((mesh.vertices[hi] - mesh.vertices[lo]).norm() > 0.0))
    throw GeometryError("outlet " + std::to_string(k) + " has zero length");
  return outward_normal(mesh.vertices[lo], mesh.vertices[hi]);
}

inline void finalize_normals(Mesh& mesh) {
  int max_k = 0;
  for (const auto& e : mesh.boundary_edges) max_k = std::max(max_k, e.tag.outlet_index());
  mesh.outlet_normals.clear();
  for (int k = 1; k <= max_k; ++k) mesh.outlet_normals.push_back(outlet_normal_from_edges(mesh, k));
}

/// Boundary edges of a triangulation, oriented as in their owning triangle, in triangle order.
inline std::vector<std::pair<int, int>> topological_boundary(const std::vector<std::array<int, 3>>& tris) {
  std::unordered_map<std::uint64_t, int> count;
  count.reserve(tris.size() * 3);
  for (const auto& t : tris)
    for (int i = 0; i < 3; ++i) ++count[edge_key(t[i], t[(i + 1) % 3])];
  std::vector<std::pair<int, int>> out;
  for (const auto& t : tris)
    for (int i = 0; i < 3; ++i) {
      const int a = t[i];
      const int b = t[(i + 1) % 3];
      if (count[edge_key(a, b)] == 1) out.emplace_back(a, b);
    }
  return out;
}

}  // namespace detail

inline std::size_t Mesh::num_edges() const {
  std::unordered_map<std::uint64_t, int> seen;
  for (const auto& t : triangles)
    for (int i = 0; i < 3; ++i) seen.emplace(detail::edge_key(t[i], t[(i + 1) % 3]), 0);
  return seen.size();
}

/// Checks every structural invariant; throws GeometryError naming the first violation.
inline void validate(const Mesh& mesh) {
  const auto nv = static_cast<int>(mesh.vertices.size());
  if (mesh.triangles.empty()) throw GeometryError("mesh has no triangles");
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int v : tri)
      if (v < 0 || v >= nv) throw GeometryError("triangle " + std::to_string(t) + " references a missing vertex");
    double h = 0.0;
    for (int i = 0; i < 3; ++i)
      h = std::max(h, (mesh.vertices[tri[(i + 1) % 3]] - mesh.vertices[tri[i]]).norm());
    if (!(mesh.signed_area(t) > 1e-12 * h * h))
      throw GeometryError("triangle " + std::to_string(t) + " has non-positive signed area");
  }

  std::unordered_map<std::uint64_t, int> count;
  for (const auto& tri : mesh.triangles)
    for (int i = 0; i < 3; ++i) ++count[detail::edge_key(tri[i], tri[(i + 1) % 3])];
  for (const auto& [key, c] : count)
    if (c > 2) throw GeometryError("edge shared by more than two triangles");

  std::unordered_map<std::uint64_t, int> tagged;
  for (const auto& e : mesh.boundary_edges) {
    auto it = count.find(detail::edge_key(e.a, e.b));
    if (it == count.end() || it->second != 1)
      throw GeometryError("tagged boundary edge " + std::to_string(e.a) + "-" + std::to_string(e.b) +
                          " does not border exactly one triangle");
    if (++tagged[detail::edge_key(e.a, e.b)] > 1) throw GeometryError("boundary edge tagged twice");
  }
  for (const auto& [key, c] : count)
    if (c == 1 && !tagged.contains(key)) throw GeometryError("untagged boundary edge");

  for (int k = 1; k <= mesh.num_outlets(); ++k) {
    const double len = mesh.outlet_length(k);
    if (!(len > 0.0)) throw GeometryError("outlet " + std::to_string(k) + " has zero length");
    const Point& n = mesh.outlet_normal(k);
    const BoundaryEdge* first = nullptr;
    for (const auto& e : mesh.boundary_edges) {
      if (e.tag.outlet_index() != k) continue;
      if (!first) first = &e;
      const Point& origin = mesh.vertices[first->a];
      for (int v : {e.a, e.b})
        if (std::abs((mesh.vertices[v] - origin).dot(n)) > 1e-12 * len)
          throw GeometryError("outlet " + std::to_string(k) + " is not flat");
      if ((detail::outward_normal(mesh.vertices[e.a], mesh.vertices[e.b]) - n).norm() > 1e-12)
        throw GeometryError("outlet " + std::to_string(k) + " edge normal disagrees with outlet normal");
    }
  }
  for (const auto& e : mesh.boundary_edges)
    if (e.tag.outlet_index() > mesh.num_outlets()) throw GeometryError("boundary tag refers to an unknown outlet");
}

/// Straight open section used to classify boundary edges.
struct OutletSegment {
  Point from;
  Point to;
};

namespace detail {

inline bool on_segment(const Point& p, const OutletSegment& s, double tol) {
  const Point d = s.to - s.from;
  const double len = d.norm();
  const Point r = p - s.from;
  const double along = r.dot(d) / len;
  const double across = std::abs(r.x() * d.y() - r.y() * d.x()) / len;
  return across <= tol && along >= -tol && along <= len + tol;
}

/// Tags the topological boundary: edges lying on segment k become OUTLET(k+1), the rest WALL.
inline std::vector<BoundaryEdge> classify_boundary(const std::vector<Point>& vertices,
                                                   const std::vector<std::array<int, 3>>& tris,
                                                   const std::vector<OutletSegment>& outlets) {
  std::vector<BoundaryEdge> out;
  for (const auto& [a, b] : topological_boundary(tris)) {
    BoundaryTag tag = BoundaryTag::wall();
    for (std::size_t k = 0; k < outlets.size(); ++k) {
      const double tol = 1e-10 * (outlets[k].to - outlets[k].from).norm();
      if (on_segment(vertices[a], outlets[k], tol) && on_segment(vertices[b], outlets[k], tol)) {
        tag = BoundaryTag::outlet(static_cast<int>(k) + 1);
        break;
      }
    }
    out.push_back({a, b, tag});
  }
  return out;
}

/// Two triangles per cell, diagonal direction alternating in a checkerboard.
inline void append_cell(std::vector<std::array<int, 3>>& tris, int v00, int v10, int v11, int v01, bool flip) {
  if (!flip) {
    tris.push_back({v00, v10, v11});
    tris.push_back({v00, v11, v01});
  } else {
    tris.push_back({v00, v10, v01});
    tris.push_back({v10, v11, v01});
  }
}

}  // namespace detail

/// Rectangle [0,L]x[0,H]: outlet 1 at x=0, outlet 2 at x=L, walls at y=0 and y=H.
inline Mesh build_channel(double length, double height, int nx, int ny) {
  if (!(length > 0.0) || !(height > 0.0)) throw InvalidParameter("channel dimensions must be positive");
  if (nx < 1 || ny < 1) throw InvalidParameter("channel cell counts must be at least 1");
  Mesh mesh;
  const auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  mesh.vertices.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      // end points are set exactly so that outlets stay on x=0 and x=L
      const double x = i == nx ? length : length * i / nx;
      const double y = j == ny ? height : height * j / ny;
      mesh.vertices.emplace_back(x, y);
    }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      detail::append_cell(mesh.triangles, id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1), (i + j) % 2 == 1);

  for (int i = 0; i < nx; ++i) mesh.boundary_edges.push_back({id(i, 0), id(i + 1, 0), BoundaryTag::wall()});
  for (int j = 0; j < ny; ++j) mesh.boundary_edges.push_back({id(nx, j), id(nx, j + 1), BoundaryTag::outlet(2)});
  for (int i = nx; i > 0; --i) mesh.boundary_edges.push_back({id(i, ny), id(i - 1, ny), BoundaryTag::wall()});
  for (int j = ny; j > 0; --j) mesh.boundary_edges.push_back({id(0, j), id(0, j - 1), BoundaryTag::outlet(1)});
  detail::finalize_normals(mesh);
  validate(mesh);
  return mesh;
}

struct BifurcationParams {
  double trunk_length = 3.0;
  double trunk_width = 1.0;
  double branch_length = 3.0;
  double branch_width = 0.7;
  double half_angle_deg = 30.0;
  int resolution = 2;  // cells across one branch; the trunk gets twice as many

  bool operator==(const BifurcationParams&) const = default;
};

namespace detail {

/// Vertex pool that merges coincident points created by neighbouring patches.
class VertexPool {
 public:
  explicit VertexPool(double tol) : tol_(tol) {}

  int insert(const Point& p) {
    const auto kx = static_cast<std::int64_t>(std::floor(p.x() / cell()));
    const auto ky = static_cast<std::int64_t>(std::floor(p.y() / cell()));
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = buckets_.find({kx + dx, ky + dy});
        if (it == buckets_.end()) continue;
        for (int idx : it->second)
          if ((points_[idx] - p).norm() <= tol_) return idx;
      }
    const int idx = static_cast<int>(points_.size());
    points_.push_back(p);
    buckets_[{kx, ky}].push_back(idx);
    return idx;
  }

  std::vector<Point> take() { return std::move(points_); }

 private:
  double cell() const { return 4.0 * tol_; }

  double tol_;
  std::vector<Point> points_;
  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<int>> buckets_;
};

/// Bilinear quadrilateral patch c0..c3 (counter-clockwise), nu cells along c0->c1, nv along c1->c2.
inline void mesh_patch(VertexPool& pool, std::vector<std::array<int, 3>>& tris, const std::array<Point, 4>& c,
                       int nu, int nv) {
  std::vector<int> ids(static_cast<std::size_t>((nu + 1) * (nv + 1)));
  for (int j = 0; j <= nv; ++j)
    for (int i = 0; i <= nu; ++i) {
      const double s = static_cast<double>(i) / nu;
      const double t = static_cast<double>(j) / nv;
      const Point p = (1 - s) * (1 - t) * c[0] + s * (1 - t) * c[1] + s * t * c[2] + (1 - s) * t * c[3];
      ids[static_cast<std::size_t>(j * (nu + 1) + i)] = pool.insert(p);
    }
  const auto id = [&](int i, int j) { return ids[static_cast<std::size_t>(j * (nu + 1) + i)]; };
  for (int j = 0; j < nv; ++j)
    for (int i = 0; i < nu; ++i) append_cell(tris, id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1), (i + j) % 2 == 1);
}

inline double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

inline bool convex_ccw(const std::array<Point, 4>& c) {
  for (int i = 0; i < 4; ++i) {
    const Point e1 = c[(i + 1) % 4] - c[i];
    const Point e2 = c[(i + 2) % 4] - c[(i + 1) % 4];
    if (!(cross(e1, e2) > 0.0)) return false;
  }
  return true;
}

inline bool segments_cross(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  const double d1 = cross(p2 - p1, q1 - p1);
  const double d2 = cross(p2 - p1, q2 - p1);
  const double d3 = cross(q2 - q1, p1 - q1);
  const double d4 = cross(q2 - q1, p2 - q1);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

}  // namespace detail

/// One bifurcation level: trunk along +x with outlet 1 at x=0, two branches at +-half_angle
/// ending in outlets 2 (upper) and 3 (lower). Built from mapped quadrilateral patches.
inline Mesh build_bifurcation(const BifurcationParams& prm) {
  if (!(prm.trunk_length > 0.0) || !(prm.trunk_width > 0.0) || !(prm.branch_length > 0.0) ||
      !(prm.branch_width > 0.0))
    throw InvalidParameter("bifurcation dimensions must be positive");
  if (!(prm.half_angle_deg > 0.0 && prm.half_angle_deg < 90.0))
    throw InvalidParameter("bifurcation half-angle must lie in (0, 90) degrees");
  if (prm.resolution < 1) throw InvalidParameter("bifurcation resolution must be at least 1");

  const double alpha = prm.half_angle_deg * std::numbers::pi / 180.0;
  const double lt = prm.trunk_length;
  const double wt = prm.trunk_width;
  const double lb = prm.branch_length;
  const double wb = prm.branch_width;
  const int r = prm.resolution;

  const Point up_dir(std::cos(alpha), std::sin(alpha));
  const Point lo_dir(std::cos(alpha), -std::sin(alpha));
  const Point up_perp(-std::sin(alpha), std::cos(alpha));
  const Point lo_perp(std::sin(alpha), std::cos(alpha));

  // carina on the axis, offset so both branch bases start right of the trunk end
  const double offset = wb * std::sin(alpha) + 0.5 * wb;
  const Point a(lt, -0.5 * wt);
  const Point b(lt, 0.5 * wt);
  const Point m(lt, 0.0);
  const Point carina(lt + offset, 0.0);
  const Point q_up = carina + wb * up_perp;
  const Point q_lo = carina - wb * lo_perp;

  const std::array<Point, 4> trunk{Point(0.0, -0.5 * wt), a, b, Point(0.0, 0.5 * wt)};
  const std::array<Point, 4> junction_up{m, carina, q_up, b};
  const std::array<Point, 4> junction_lo{a, q_lo, carina, m};
  const std::array<Point, 4> branch_up{carina, carina + lb * up_dir, q_up + lb * up_dir, q_up};
  const std::array<Point, 4> branch_lo{q_lo, q_lo + lb * lo_dir, carina + lb * lo_dir, carina};

  for (const auto* quad : {&junction_up, &junction_lo})
    if (!detail::convex_ccw(*quad))
      throw GeometryError("bifurcation junction is self-intersecting for these widths and angle");

  const double h_trunk = wt / (2.0 * r);
  const double h_branch = wb / r;
  const int n_trunk = std::max(1, static_cast<int>(std::lround(lt / h_trunk)));
  const int n_branch = std::max(1, static_cast<int>(std::lround(lb / h_branch)));
  const int n_junction = std::max(1, static_cast<int>(std::lround(offset / h_trunk)));

  detail::VertexPool pool(1e-9 * std::max({lt, wt, lb, wb}));
  std::vector<std::array<int, 3>> tris;
  detail::mesh_patch(pool, tris, trunk, n_trunk, 2 * r);
  detail::mesh_patch(pool, tris, junction_up, n_junction, r);
  detail::mesh_patch(pool, tris, junction_lo, n_junction, r);
  detail::mesh_patch(pool, tris, branch_up, n_branch, r);
  detail::mesh_patch(pool, tris, branch_lo, n_branch, r);

  Mesh mesh;
  mesh.vertices = pool.take();
  mesh.triangles = std::move(tris);
  const std::vector<OutletSegment> outlets{
      {trunk[3], trunk[0]},
      {branch_up[1], branch_up[2]},
      {branch_lo[1], branch_lo[2]},
  };
  mesh.boundary_edges = detail::classify_boundary(mesh.vertices, mesh.triangles, outlets);

  // boundary must be a simple polygon
  const auto& be = mesh.boundary_edges;
  for (std::size_t i = 0; i < be.size(); ++i)
    for (std::size_t j = i + 1; j < be.size(); ++j)
      if (detail::segments_cross(mesh.vertices[be[i].a], mesh.vertices[be[i].b], mesh.vertices[be[j].a],
                                 mesh.vertices[be[j].b]))
        throw GeometryError("bifurcation boundary self-intersects");

  detail::finalize_normals(mesh);
  if (mesh.num_outlets() != 3) throw GeometryError("bifurcation must expose exactly three outlets");
  validate(mesh);
  return mesh;
}

/// Splits every triangle into four through its edge midpoints; boundary tags are inherited.
inline Mesh refine_uniform(const Mesh& mesh) {
  validate(mesh);
  Mesh out;
  out.vertices = mesh.vertices;
  std::unordered_map<std::uint64_t, int> midpoint;
  const auto mid = [&](int a, int b) {
    const auto key = detail::edge_key(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const int idx = static_cast<int>(out.vertices.size());
    out.vertices.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
    midpoint.emplace(key, idx);
    return idx;
  };
  out.triangles.reserve(mesh.triangles.size() * 4);
  for (const auto& t : mesh.triangles) {
    const int m01 = mid(t[0], t[1]);
    const int m12 = mid(t[1], t[2]);
    const int m20 = mid(t[2], t[0]);
    out.triangles.push_back({t[0], m01, m20});
    out.triangles.push_back({m01, t[1], m12});
    out.triangles.push_back({m20, m12, t[2]});
    out.triangles.push_back({m01, m12, m20});
  }
  for (const auto& e : mesh.boundary_edges) {
    const int m = mid(e.a, e.b);
    out.boundary_edges.push_back({e.a, m, e.tag});
    out.boundary_edges.push_back({m, e.b, e.tag});
  }
  // segment end points survive refinement, so the normals are reproduced bit for bit
  detail::finalize_normals(out);
  validate(out);
  return out;
}

inline Mesh refine_uniform(const Mesh& mesh, int levels) {
  Mesh out = mesh;
  for (int i = 0; i < levels; ++i) out = refine_uniform(out);
  return out;
}

}  // namespace odstokes
