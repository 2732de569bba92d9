#include <catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace odstokes;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<OutletSpec> pair(Signal s1, Signal s2, double l1 = 1.0, double l2 = 0.5, double g1 = 0.1, double g2 = 0.2) {
  return {OutletSpec{1, l1, g1, s1}, OutletSpec{2, l2, g2, s2}};
}

}  // namespace

TEST_CASE("channel network reproduces the closed-form flux") {
  for (double nu : {0.5, 1.0, 3.0})
    for (double L : {1.0, 10.0}) {
      const auto net = channel_network(nu, L, 0.8, pair(Signal::constant(1.0), Signal::constant(-0.5), 1.3, 0.4));
      const auto st = steady_fluxes(net);
      const double q = oracle::channel_flux(1.0, -0.5, nu, L, 0.8, 1.3, 0.4);
      CHECK_THAT(st.edge_flux[0], WithinRel(q, 1e-12));
      CHECK_THAT(st.terminal_flux[0], WithinRel(-q, 1e-12));
      CHECK_THAT(st.terminal_flux[1], WithinRel(q, 1e-12));
    }
}

TEST_CASE("equal sources drive no flux") {
  const auto st = steady_fluxes(channel_network(1.0, 5.0, 1.0, pair(Signal::constant(2.0), Signal::constant(2.0))));
  CHECK_THAT(st.edge_flux[0], WithinAbs(0.0, 1e-14));
  CHECK_THAT(st.pressure[0], WithinAbs(2.0, 1e-13));
  CHECK_THAT(st.pressure[1], WithinAbs(2.0, 1e-13));
}

TEST_CASE("symmetric bifurcation splits the trunk flux evenly") {
  const BifurcationParams prm;
  const std::vector<OutletSpec> outlets{OutletSpec{1, 1.0, 0.1, Signal::constant(1.0)},
                                        OutletSpec{2, 0.5, 0.2, Signal::constant(0.0)},
                                        OutletSpec{3, 0.5, 0.2, Signal::constant(0.0)}};
  const auto st = steady_fluxes(bifurcation_network(1.0, prm, outlets));
  CHECK_THAT(st.terminal_flux[1], WithinRel(st.terminal_flux[2], 1e-12));
  CHECK_THAT(st.edge_flux[0], WithinRel(st.edge_flux[1] + st.edge_flux[2], 1e-12));
  CHECK(st.edge_flux[0] > 0.0);
  CHECK_THAT(st.terminal_flux.sum(), WithinAbs(0.0, 1e-13));
}

TEST_CASE("zero sources keep the network at rest") {
  const auto net = channel_network(1.0, 2.0, 1.0, pair(Signal::constant(0.0).with_horizon(1), Signal::constant(0.0).with_horizon(1)));
  const auto tr = transient_fluxes(net, 0.01, 1.0);
  REQUIRE(tr.states.size() == 101);
  for (const auto& s : tr.states) CHECK(s.edge_flux.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("step response follows a single exponential") {
  const double nu = 1.0, L = 2.0, H = 1.0;
  const auto outlets = pair(Signal::constant(1.0), Signal::constant(0.0));
  const auto net0 = channel_network(nu, L, H, outlets);
  const double R = 12.0 * nu * L / (H * H * H) + (outlets[0].lambda + outlets[1].lambda) / H;
  const double I = L / H + (outlets[0].gamma + outlets[1].gamma) / H;
  const double tau = I / R;
  const double T = 25.0 * tau;
  const double dt = T / 2500.0;
  auto with_t = outlets;
  for (auto& o : with_t) o.signal = o.signal.with_horizon(T);
  const auto tr = transient_fluxes(channel_network(nu, L, H, with_t), dt, T);
  const double qinf = steady_fluxes(net0).edge_flux[0];
  std::size_t probe = 0;
  while (tr.t[probe] < tau) ++probe;
  const double fitted = -tr.t[probe] / std::log(1.0 - tr.states[probe].edge_flux[0] / qinf);
  CHECK_THAT(fitted, WithinRel(tau, 0.02));
  CHECK_THAT(tr.states.back().edge_flux[0], WithinRel(qinf, 1e-8));
  for (std::size_t n = 1; n < tr.states.size(); ++n) CHECK(tr.states[n].edge_flux[0] >= tr.states[n - 1].edge_flux[0]);
}

TEST_CASE("transient fluxes conserve mass at every node") {
  const BifurcationParams prm;
  const double T = 2.0;
  const std::vector<OutletSpec> outlets{OutletSpec{1, 1.0, 0.1, Signal::sinusoid(1.0, 2.0).with_horizon(T)},
                                        OutletSpec{2, 0.4, 0.3, Signal::ramp(0.0, 0.5).with_horizon(T)},
                                        OutletSpec{3, 0.7, 0.2, Signal::constant(-0.2).with_horizon(T)}};
  const auto net = bifurcation_network(0.8, prm, outlets);
  const auto tr = transient_fluxes(net, 0.01, T);
  for (const auto& s : tr.states) {
    CHECK_THAT(s.terminal_flux.sum(), WithinAbs(0.0, 1e-12));
    CHECK_THAT(s.edge_flux[0] + s.terminal_flux[0], WithinAbs(0.0, 1e-12));
    CHECK_THAT(s.edge_flux[0] - s.edge_flux[1] - s.edge_flux[2], WithinAbs(0.0, 1e-12));
  }
}

TEST_CASE("network response is linear in the sources") {
  const double T = 1.0;
  const Signal a = Signal::sinusoid(1.0, 4.0).with_horizon(T), b = Signal::ramp(0.3, -1.0).with_horizon(T);
  const auto ta = transient_fluxes(channel_network(1.0, 3.0, 1.0, pair(a, Signal::constant(0).with_horizon(T))), 0.02, T);
  const auto tb = transient_fluxes(channel_network(1.0, 3.0, 1.0, pair(Signal::constant(0).with_horizon(T), b)), 0.02, T);
  const auto tab = transient_fluxes(channel_network(1.0, 3.0, 1.0, pair(a, b)), 0.02, T);
  for (std::size_t n = 0; n < tab.states.size(); ++n)
    CHECK_THAT(tab.states[n].edge_flux[0], WithinAbs(ta.states[n].edge_flux[0] + tb.states[n].edge_flux[0], 1e-13));
}

TEST_CASE("malformed networks are rejected") {
  LumpedNetwork net = channel_network(1.0, 1.0, 1.0, pair(Signal::constant(1), Signal::constant(0)));
  net.num_nodes = 3;
  net.terminals.push_back(LumpedNetwork::outlet_terminal(2, OutletSpec{3, 1.0, 0.1, Signal::constant(0)}, 1.0));
  CHECK_THROWS_AS(steady_fluxes(net), GeometryError);
  LumpedNetwork bad = channel_network(1.0, 1.0, 1.0, pair(Signal::constant(1), Signal::constant(0)));
  bad.edges[0].to = 7;
  CHECK_THROWS_AS(steady_fluxes(bad), InvalidParameter);
  CHECK_THROWS_AS(channel_network(1.0, 1.0, 1.0, {OutletSpec{1, 1.0, 0.1, {}}}), InvalidParameter);
  CHECK_THROWS_AS(transient_fluxes(channel_network(1.0, 1.0, 1.0, pair(Signal::constant(1), Signal::constant(0))), 0.0, 1.0),
                  InvalidParameter);
}
