#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "odstokes/errors.hpp"
#include "odstokes/mesh.hpp"
#include "odstokes/quadrature.hpp"

namespace odstokes {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Space-time vector field, e.g. a body force f(x, t).
using VectorField = std::function<Point(const Point&, double)>;

/// P2 shape functions on a triangle in barycentric coordinates.
/// Local node order: v0, v1, v2, m01, m12, m20.
namespace p2 {

inline std::array<double, 6> values(const std::array<double, 3>& l) {
  return {l[0] * (2 * l[0] - 1), l[1] * (2 * l[1] - 1), l[2] * (2 * l[2] - 1),
          4 * l[0] * l[1],       4 * l[1] * l[2],       4 * l[2] * l[0]};
}

/// Gradients given the (constant) barycentric gradients of the triangle.
inline std::array<Point, 6> gradients(const std::array<double, 3>& l, const std::array<Point, 3>& dl) {
  return {(4 * l[0] - 1) * dl[0],
          (4 * l[1] - 1) * dl[1],
          (4 * l[2] - 1) * dl[2],
          4 * (l[1] * dl[0] + l[0] * dl[1]),
          4 * (l[2] * dl[1] + l[1] * dl[2]),
          4 * (l[0] * dl[2] + l[2] * dl[0])};
}

/// 1D quadratic trace basis on an edge a -> mid -> b, parameter s in [0,1].
inline std::array<double, 3> edge_values(double s) {
  return {(1 - s) * (1 - 2 * s), 4 * s * (1 - s), s * (2 * s - 1)};
}

}  // namespace p2

struct ElementGeometry {
  double area;
  std::array<Point, 3> grad_bary;
  std::array<Point, 3> corners;

  Point map(const std::array<double, 3>& l) const { return l[0] * corners[0] + l[1] * corners[1] + l[2] * corners[2]; }
};

/// Taylor-Hood P2/P1 space with no-slip constraints on the wall.
class TaylorHoodSpace {
 public:
  /// Boundary edge as a P2 trace: end vertices, midpoint node, length.
  struct TraceEdge {
    int a;
    int mid;
    int b;
    double length;
    BoundaryTag tag;
  };

  explicit TaylorHoodSpace(Mesh mesh) : mesh_(std::move(mesh)) {
    validate(mesh_);
    const int nv = static_cast<int>(mesh_.vertices.size());
    std::unordered_map<std::uint64_t, int> edge_id;
    element_nodes_.reserve(mesh_.triangles.size());
    for (const auto& t : mesh_.triangles) {
      std::array<int, 6> nodes{t[0], t[1], t[2], 0, 0, 0};
      for (int i = 0; i < 3; ++i) {
        const int a = t[i];
        const int b = t[(i + 1) % 3];
        auto [it, inserted] = edge_id.try_emplace(detail::edge_key(a, b), static_cast<int>(edge_id.size()));
        if (inserted) edges_.push_back({std::min(a, b), std::max(a, b)});
        nodes[3 + i] = nv + it->second;
      }
      element_nodes_.push_back(nodes);
    }
    num_nodes_ = nv + static_cast<int>(edges_.size());

    for (const auto& e : mesh_.boundary_edges) {
      const int mid = nv + edge_id.at(detail::edge_key(e.a, e.b));
      trace_edges_.push_back({e.a, mid, e.b, mesh_.edge_length(e), e.tag});
    }

    std::vector<char> wall_node(static_cast<std::size_t>(num_nodes_), 0);
    for (const auto& e : trace_edges_)
      if (e.tag.is_wall()) wall_node[e.a] = wall_node[e.mid] = wall_node[e.b] = 1;
    free_index_.assign(static_cast<std::size_t>(num_velocity_dofs()), -1);
    for (int node = 0; node < num_nodes_; ++node)
      for (int c = 0; c < 2; ++c) {
        const int dof = velocity_dof(node, c);
        if (wall_node[node]) {
          constrained_.push_back(dof);
        } else {
          free_index_[dof] = static_cast<int>(free_.size());
          free_.push_back(dof);
        }
      }
  }

  const Mesh& mesh() const { return mesh_; }
  int num_vertices() const { return static_cast<int>(mesh_.vertices.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  int num_nodes() const { return num_nodes_; }
  int num_velocity_dofs() const { return 2 * num_nodes_; }
  int num_pressure_dofs() const { return num_vertices(); }
  int num_free_dofs() const { return static_cast<int>(free_.size()); }
  int num_outlets() const { return mesh_.num_outlets(); }

  static int velocity_dof(int node, int component) { return 2 * node + component; }

  Point node_position(int node) const {
    const int nv = num_vertices();
    if (node < nv) return mesh_.vertices[node];
    const auto& e = edges_[static_cast<std::size_t>(node - nv)];
    return 0.5 * (mesh_.vertices[e[0]] + mesh_.vertices[e[1]]);
  }

  const std::array<int, 6>& element_nodes(std::size_t t) const { return element_nodes_[t]; }
  std::size_t num_elements() const { return element_nodes_.size(); }

  ElementGeometry geometry(std::size_t t) const {
    const auto& tri = mesh_.triangles[t];
    const Point& p0 = mesh_.vertices[tri[0]];
    const Point& p1 = mesh_.vertices[tri[1]];
    const Point& p2 = mesh_.vertices[tri[2]];
    const double twice = (p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x();
    return {0.5 * twice,
            {Point(p1.y() - p2.y(), p2.x() - p1.x()) / twice, Point(p2.y() - p0.y(), p0.x() - p2.x()) / twice,
             Point(p0.y() - p1.y(), p1.x() - p0.x()) / twice},
            {p0, p1, p2}};
  }

  const std::vector<TraceEdge>& trace_edges() const { return trace_edges_; }
  const std::vector<int>& constrained_dofs() const { return constrained_; }
  const std::vector<int>& free_dofs() const { return free_; }
  /// Position of a velocity dof among the free dofs, or -1 when it is constrained.
  int free_index(int dof) const { return free_index_[static_cast<std::size_t>(dof)]; }

 private:
  Mesh mesh_;
  std::vector<std::array<int, 2>> edges_;
  std::vector<std::array<int, 6>> element_nodes_;
  std::vector<TraceEdge> trace_edges_;
  std::vector<int> constrained_;
  std::vector<int> free_;
  std::vector<int> free_index_;
  int num_nodes_ = 0;
};

namespace detail {

inline SparseMatrix from_triplets(int rows, int cols, const std::vector<Triplet>& triplets) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

/// Scalar P2 element matrix sum_q w f(N_a, N_b) scaled by the area, for both velocity components.
template <typename Kernel>
SparseMatrix assemble_vector_p2(const TaylorHoodSpace& space, Kernel kernel) {
  std::vector<Triplet> triplets;
  triplets.reserve(space.num_elements() * 72);
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    const ElementGeometry geo = space.geometry(t);
    std::array<std::array<double, 6>, 6> local{};
    for (const auto& q : quadrature::triangle_degree4()) {
      const auto n = p2::values(q.bary);
      const auto g = p2::gradients(q.bary, geo.grad_bary);
      for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) local[a][b] += q.weight * kernel(n, g, a, b);
    }
    const auto& nodes = space.element_nodes(t);
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b)
        for (int c = 0; c < 2; ++c)
          triplets.emplace_back(TaylorHoodSpace::velocity_dof(nodes[a], c), TaylorHoodSpace::velocity_dof(nodes[b], c),
                                geo.area * local[a][b]);
  }
  return from_triplets(space.num_velocity_dofs(), space.num_velocity_dofs(), triplets);
}

}  // namespace detail

/// Velocity mass matrix, (v, w).
inline SparseMatrix assemble_mass(const TaylorHoodSpace& space) {
  return detail::assemble_vector_p2(space, [](const auto& n, const auto&, int a, int b) { return n[a] * n[b]; });
}

/// Gradient-gradient stiffness, (grad v, grad w). The viscosity is applied by the caller.
inline SparseMatrix assemble_stiffness(const TaylorHoodSpace& space) {
  return detail::assemble_vector_p2(space, [](const auto&, const auto& g, int a, int b) { return g[a].dot(g[b]); });
}

/// Divergence coupling B with (B v)_i = (q_i, div v); rows are P1 pressure dofs.
inline SparseMatrix assemble_divergence(const TaylorHoodSpace& space) {
  std::vector<Triplet> triplets;
  triplets.reserve(space.num_elements() * 36);
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    const ElementGeometry geo = space.geometry(t);
    std::array<std::array<Point, 6>, 3> local;
    for (auto& row : local) row.fill(Point::Zero());
    for (const auto& q : quadrature::triangle_degree4()) {
      const auto g = p2::gradients(q.bary, geo.grad_bary);
      for (int i = 0; i < 3; ++i)
        for (int a = 0; a < 6; ++a) local[i][a] += q.weight * q.bary[i] * g[a];
    }
    const auto& tri = space.mesh().triangles[t];
    const auto& nodes = space.element_nodes(t);
    for (int i = 0; i < 3; ++i)
      for (int a = 0; a < 6; ++a)
        for (int c = 0; c < 2; ++c)
          triplets.emplace_back(tri[i], TaylorHoodSpace::velocity_dof(nodes[a], c), geo.area * local[i][a][c]);
  }
  return detail::from_triplets(space.num_pressure_dofs(), space.num_velocity_dofs(), triplets);
}

/// Normal-trace mass on outlet k, (v.n_k, w.n_k) over Gamma_k.
inline SparseMatrix assemble_outlet_normal_mass(const TaylorHoodSpace& space, int k) {
  if (k < 1 || k > space.num_outlets()) throw InvalidParameter("no outlet " + std::to_string(k));
  const Point n = space.mesh().outlet_normal(k);
  std::array<std::array<double, 3>, 3> ref{};
  for (const auto& q : quadrature::line_gauss3()) {
    const auto phi = p2::edge_values(q.s);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) ref[i][j] += q.weight * phi[i] * phi[j];
  }
  std::vector<Triplet> triplets;
  for (const auto& e : space.trace_edges()) {
    if (e.tag.outlet_index() != k) continue;
    const std::array<int, 3> nodes{e.a, e.mid, e.b};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int c = 0; c < 2; ++c)
          for (int d = 0; d < 2; ++d)
            triplets.emplace_back(TaylorHoodSpace::velocity_dof(nodes[i], c), TaylorHoodSpace::velocity_dof(nodes[j], d),
                                  e.length * ref[i][j] * n[c] * n[d]);
  }
  return detail::from_triplets(space.num_velocity_dofs(), space.num_velocity_dofs(), triplets);
}

/// Flux functional of outlet k: b_k^T v = integral of v.n_k over Gamma_k.
inline Vector assemble_outlet_source(const TaylorHoodSpace& space, int k) {
  if (k < 1 || k > space.num_outlets()) throw InvalidParameter("no outlet " + std::to_string(k));
  const Point n = space.mesh().outlet_normal(k);
  std::array<double, 3> ref{};
  for (const auto& q : quadrature::line_gauss3()) {
    const auto phi = p2::edge_values(q.s);
    for (int i = 0; i < 3; ++i) ref[i] += q.weight * phi[i];
  }
  Vector b = Vector::Zero(space.num_velocity_dofs());
  for (const auto& e : space.trace_edges()) {
    if (e.tag.outlet_index() != k) continue;
    const std::array<int, 3> nodes{e.a, e.mid, e.b};
    for (int i = 0; i < 3; ++i)
      for (int c = 0; c < 2; ++c) b[TaylorHoodSpace::velocity_dof(nodes[i], c)] += e.length * ref[i] * n[c];
  }
  return b;
}

/// P1 weights with c_k^T p = integral of p over Gamma_k.
inline Vector assemble_outlet_pressure_weights(const TaylorHoodSpace& space, int k) {
  Vector c = Vector::Zero(space.num_pressure_dofs());
  for (const auto& e : space.trace_edges()) {
    if (e.tag.outlet_index() != k) continue;
    c[e.a] += 0.5 * e.length;
    c[e.b] += 0.5 * e.length;
  }
  return c;
}

/// Load vector (f(., t), w).
inline Vector assemble_load(const TaylorHoodSpace& space, const VectorField& f, double t) {
  Vector out = Vector::Zero(space.num_velocity_dofs());
  if (!f) return out;
  for (std::size_t e = 0; e < space.num_elements(); ++e) {
    const ElementGeometry geo = space.geometry(e);
    const auto& nodes = space.element_nodes(e);
    for (const auto& q : quadrature::triangle_degree4()) {
      const Point fx = f(geo.map(q.bary), t);
      const auto n = p2::values(q.bary);
      for (int a = 0; a < 6; ++a)
        for (int c = 0; c < 2; ++c)
          out[TaylorHoodSpace::velocity_dof(nodes[a], c)] += geo.area * q.weight * n[a] * fx[c];
    }
  }
  return out;
}

/// Every matrix and vector of the weak form on the full (unconstrained) velocity dofs.
struct AssembledOperators {
  SparseMatrix mass;
  SparseMatrix stiffness;
  SparseMatrix divergence;
  std::vector<SparseMatrix> outlet_mass;  // G_k at index k-1
  std::vector<Vector> outlet_source;      // b_k at index k-1
  std::vector<Vector> outlet_pressure;    // c_k at index k-1
};

inline AssembledOperators assemble_operators(const TaylorHoodSpace& space) {
  AssembledOperators ops{assemble_mass(space), assemble_stiffness(space), assemble_divergence(space), {}, {}, {}};
  for (int k = 1; k <= space.num_outlets(); ++k) {
    ops.outlet_mass.push_back(assemble_outlet_normal_mass(space, k));
    ops.outlet_source.push_back(assemble_outlet_source(space, k));
    ops.outlet_pressure.push_back(assemble_outlet_pressure_weights(space, k));
  }
  return ops;
}

/// Operators restricted to the free velocity dofs (wall dofs eliminated symmetrically).
struct ConstrainedOperators {
  SparseMatrix prolongation;  // full x free, injects free values and zeros on the wall
  SparseMatrix mass;
  SparseMatrix stiffness;
  SparseMatrix divergence;  // pressure x free
  std::vector<SparseMatrix> outlet_mass;
  std::vector<Vector> outlet_source;
  std::vector<Vector> outlet_pressure;
  std::vector<double> outlet_length;

  int num_free() const { return static_cast<int>(prolongation.cols()); }
  int num_pressure() const { return static_cast<int>(divergence.rows()); }
  int num_outlets() const { return static_cast<int>(outlet_mass.size()); }

  Vector lift(const Vector& free) const { return prolongation * free; }
  Vector restrict_to_free(const Vector& full) const { return prolongation.transpose() * full; }

  /// M + sum_k gamma_k G_k.
  SparseMatrix inertial(const std::vector<double>& gamma) const {
    SparseMatrix out = mass;
    for (std::size_t k = 0; k < outlet_mass.size(); ++k) out += gamma.at(k) * outlet_mass[k];
    return out;
  }

  /// nu K + sum_k lambda_k G_k.
  SparseMatrix dissipative(double nu, const std::vector<double>& lambda) const {
    SparseMatrix out = nu * stiffness;
    for (std::size_t k = 0; k < outlet_mass.size(); ++k) out += lambda.at(k) * outlet_mass[k];
    return out;
  }
};

inline ConstrainedOperators apply_noslip(const AssembledOperators& ops, const TaylorHoodSpace& space) {
  std::vector<Triplet> triplets;
  triplets.reserve(space.free_dofs().size());
  for (std::size_t i = 0; i < space.free_dofs().size(); ++i)
    triplets.emplace_back(space.free_dofs()[i], static_cast<int>(i), 1.0);
  SparseMatrix p = detail::from_triplets(space.num_velocity_dofs(), space.num_free_dofs(), triplets);
  const SparseMatrix pt = p.transpose();
  const auto reduce = [&](const SparseMatrix& a) {
    SparseMatrix r = pt * a * p;
    r.makeCompressed();
    return r;
  };
  ConstrainedOperators out;
  out.mass = reduce(ops.mass);
  out.stiffness = reduce(ops.stiffness);
  out.divergence = ops.divergence * p;
  out.divergence.makeCompressed();
  for (int k = 1; k <= space.num_outlets(); ++k) {
    out.outlet_mass.push_back(reduce(ops.outlet_mass[k - 1]));
    out.outlet_source.push_back(pt * ops.outlet_source[k - 1]);
    out.outlet_pressure.push_back(ops.outlet_pressure[k - 1]);
    out.outlet_length.push_back(space.mesh().outlet_length(k));
  }
  out.prolongation = std::move(p);
  return out;
}

/// Nodal P2 interpolation of a vector field at time t into a full velocity coefficient vector.
inline Vector interpolate(const TaylorHoodSpace& space, const VectorField& field, double t = 0.0) {
  Vector v = Vector::Zero(space.num_velocity_dofs());
  for (int node = 0; node < space.num_nodes(); ++node) {
    const Point val = field(space.node_position(node), t);
    v[TaylorHoodSpace::velocity_dof(node, 0)] = val.x();
    v[TaylorHoodSpace::velocity_dof(node, 1)] = val.y();
  }
  return v;
}

/// Velocity of a full coefficient vector inside element t at barycentric point l.
inline Point evaluate_velocity(const TaylorHoodSpace& space, const Vector& v, std::size_t t,
                               const std::array<double, 3>& l) {
  const auto n = p2::values(l);
  const auto& nodes = space.element_nodes(t);
  Point out = Point::Zero();
  for (int a = 0; a < 6; ++a)
    out += n[a] * Point(v[TaylorHoodSpace::velocity_dof(nodes[a], 0)], v[TaylorHoodSpace::velocity_dof(nodes[a], 1)]);
  return out;
}

/// Velocity gradient J(i,j) = d v_i / d x_j inside element t.
inline Eigen::Matrix2d evaluate_gradient(const TaylorHoodSpace& space, const Vector& v, std::size_t t,
                                         const std::array<double, 3>& l) {
  const ElementGeometry geo = space.geometry(t);
  const auto g = p2::gradients(l, geo.grad_bary);
  const auto& nodes = space.element_nodes(t);
  Eigen::Matrix2d out = Eigen::Matrix2d::Zero();
  for (int a = 0; a < 6; ++a)
    for (int c = 0; c < 2; ++c) out.row(c) += v[TaylorHoodSpace::velocity_dof(nodes[a], c)] * g[a].transpose();
  return out;
}

/// Matrix Market coordinate format (1-based), full precision.
inline void write_matrix_market(std::ostream& os, const SparseMatrix& m) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  char buf[64];
  for (int col = 0; col < m.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(m, col); it; ++it) {
      std::snprintf(buf, sizeof(buf), "%.17g", it.value());
      os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << buf << '\n';
    }
}

}  // namespace odstokes
