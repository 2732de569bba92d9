#pragma once

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "odstokes/errors.hpp"
#include "odstokes/mesh.hpp"
#include "odstokes/outlets.hpp"
#include "odstokes/signal.hpp"

namespace odstokes {

/// 0D resistor-inertance network. Edge flux runs from -> to; terminal flux leaves the network.
struct LumpedNetwork {
  struct Edge {
    int from;
    int to;
    double resistance;
    double inertance;
  };
  struct Terminal {
    int node;
    double resistance;
    double inertance;
    Signal source;
  };

  int num_nodes = 0;
  std::vector<Edge> edges;
  std::vector<Terminal> terminals;

  /// Plane Poiseuille segment of length L and width H, unit density.
  static Edge channel_edge(int from, int to, double nu, double length, double width) {
    return {from, to, 12.0 * nu * length / (width * width * width), length / width};
  }

  /// Terminal carrying the averaged outlet law: resistance lambda/|Gamma|, inertance gamma/|Gamma|.
  static Terminal outlet_terminal(int node, const OutletSpec& o, double section) {
    return {node, o.lambda / section, o.gamma / section, o.signal};
  }

  void validate() const {
    if (num_nodes < 1) throw InvalidParameter("lumped network has no nodes");
    if (terminals.empty()) throw InvalidParameter("lumped network needs at least one terminal");
    const auto check_node = [&](int n) {
      if (n < 0 || n >= num_nodes) throw InvalidParameter("lumped node index " + std::to_string(n) + " out of range");
    };
    for (const auto& e : edges) {
      check_node(e.from);
      check_node(e.to);
      if (!(e.resistance > 0.0)) throw InvalidParameter("edge resistance must be > 0");
      if (!(e.inertance >= 0.0)) throw InvalidParameter("edge inertance must be >= 0");
    }
    for (const auto& t : terminals) {
      check_node(t.node);
      if (!(t.resistance > 0.0)) throw InvalidParameter("terminal resistance must be > 0");
      if (!(t.inertance >= 0.0)) throw InvalidParameter("terminal inertance must be >= 0");
    }
    std::vector<int> parent(static_cast<std::size_t>(num_nodes));
    std::iota(parent.begin(), parent.end(), 0);
    const auto find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto& e : edges) parent[find(e.from)] = find(e.to);
    for (int n = 1; n < num_nodes; ++n)
      if (find(n) != find(0)) throw GeometryError("lumped network is disconnected");
  }
};

struct LumpedState {
  Eigen::VectorXd pressure;       // per node
  Eigen::VectorXd edge_flux;      // per edge
  Eigen::VectorXd terminal_flux;  // per terminal, outward
};

struct LumpedTrajectory {
  std::vector<double> t;
  std::vector<LumpedState> states;
};

namespace detail {

/// Unknowns (P, Q_edge, Q_terminal). With inertial weight w the branch laws read
/// dP = (R + w I) Q - w I Q_old, which is backward Euler for w = 1/dt and the steady law for w = 0.
inline LumpedState solve_lumped(const LumpedNetwork& net, double t, double w, const LumpedState* previous) {
  const int nn = net.num_nodes;
  const int ne = static_cast<int>(net.edges.size());
  const int nt = static_cast<int>(net.terminals.size());
  const int n = nn + ne + nt;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (int e = 0; e < ne; ++e) {
    const auto& ed = net.edges[e];
    const int row = nn + e;
    a(row, ed.from) += 1.0;
    a(row, ed.to) -= 1.0;
    a(row, nn + e) = -(ed.resistance + w * ed.inertance);
    if (previous) rhs[row] = -w * ed.inertance * previous->edge_flux[e];
    a(ed.from, nn + e) += 1.0;
    a(ed.to, nn + e) -= 1.0;
  }
  for (int k = 0; k < nt; ++k) {
    const auto& term = net.terminals[k];
    const int row = nn + ne + k;
    a(row, term.node) = 1.0;
    a(row, row) = -(term.resistance + w * term.inertance);
    rhs[row] = term.source.eval(t);
    if (previous) rhs[row] -= w * term.inertance * previous->terminal_flux[k];
    a(term.node, row) += 1.0;
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const Eigen::VectorXd x = lu.solve(rhs);
  if (!x.allFinite()) throw SingularSystem("lumped network system is singular");
  return {x.head(nn), x.segment(nn, ne), x.tail(nt)};
}

}  // namespace detail

/// Steady fluxes at time t (inertances inactive).
inline LumpedState steady_fluxes(const LumpedNetwork& net, double t = 0.0) {
  net.validate();
  return detail::solve_lumped(net, t, 0.0, nullptr);
}

/// Backward Euler from rest.
inline LumpedTrajectory transient_fluxes(const LumpedNetwork& net, double dt, double T) {
  net.validate();
  if (!(dt > 0.0)) throw InvalidParameter("dt must be > 0");
  if (!(T > 0.0)) throw InvalidParameter("T must be > 0");
  const int steps = static_cast<int>(std::llround(T / dt));
  LumpedTrajectory out;
  LumpedState rest{Eigen::VectorXd::Zero(net.num_nodes), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.edges.size())),
                   Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.terminals.size()))};
  out.t.push_back(0.0);
  out.states.push_back(rest);
  for (int i = 1; i <= steps; ++i) {
    const double t = i * dt;
    out.t.push_back(t);
    out.states.push_back(detail::solve_lumped(net, t, 1.0 / dt, &out.states.back()));
  }
  return out;
}

/// Straight channel: node 0 at outlet 1 (x = 0), node 1 at outlet 2 (x = L).
inline LumpedNetwork channel_network(double nu, double length, double height, const std::vector<OutletSpec>& outlets) {
  if (outlets.size() != 2) throw InvalidParameter("channel network needs exactly 2 outlet specs");
  LumpedNetwork net;
  net.num_nodes = 2;
  net.edges.push_back(LumpedNetwork::channel_edge(0, 1, nu, length, height));
  net.terminals.push_back(LumpedNetwork::outlet_terminal(0, outlets[0], height));
  net.terminals.push_back(LumpedNetwork::outlet_terminal(1, outlets[1], height));
  return net;
}

/// One bifurcation: trunk 0 -> 1, branches 1 -> 2 (outlet 2) and 1 -> 3 (outlet 3).
inline LumpedNetwork bifurcation_network(double nu, const BifurcationParams& prm, const std::vector<OutletSpec>& outlets) {
  if (outlets.size() != 3) throw InvalidParameter("bifurcation network needs exactly 3 outlet specs");
  LumpedNetwork net;
  net.num_nodes = 4;
  net.edges.push_back(LumpedNetwork::channel_edge(0, 1, nu, prm.trunk_length, prm.trunk_width));
  net.edges.push_back(LumpedNetwork::channel_edge(1, 2, nu, prm.branch_length, prm.branch_width));
  net.edges.push_back(LumpedNetwork::channel_edge(1, 3, nu, prm.branch_length, prm.branch_width));
  net.terminals.push_back(LumpedNetwork::outlet_terminal(0, outlets[0], prm.trunk_width));
  net.terminals.push_back(LumpedNetwork::outlet_terminal(2, outlets[1], prm.branch_width));
  net.terminals.push_back(LumpedNetwork::outlet_terminal(3, outlets[2], prm.branch_width));
  return net;
}

}  // namespace odstokes
