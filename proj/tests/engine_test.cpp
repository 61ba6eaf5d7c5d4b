#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "liveclock/engine.hpp"

namespace lc = liveclock;

namespace {

lc::Scenario hexagon(double period, std::int64_t hops, std::int64_t duration = 2000) {
  lc::Scenario s;
  s.geometry = lc::RingGeometry{6, 1.0, 0.0, 1.0};
  s.nodes = lc::uniform_nodes(6, period);
  s.channels = lc::as_specs(lc::forward_ring_channels(6, hops));
  s.reference = lc::default_reference(s.channels, 0.05, 50);
  s.duration = duration;
  return s;
}

lc::Scenario pair(double rate_offset, lc::Mode mode, std::int64_t duration) {
  lc::Scenario s;
  s.nodes = lc::uniform_nodes(2, 0.25);
  s.nodes[1].clock.rate_correction = rate_offset;
  s.delays.forward = 1.0;
  s.delays.backward = 1.0;
  s.channels = {{lc::RepeatingChannel{lc::node(0), lc::node(1), 0, 4, 1, 1, 0.0, 0.0}, {}}};
  s.reference = lc::default_reference(s.channels, 0.05, 50);
  s.duration = duration;
  s.mode = mode;
  return s;
}

std::string csv(const lc::Trace& t) {
  std::ostringstream out;
  lc::write_trace_csv(out, t);
  return out.str();
}

}  // namespace

TEST(Engine, StaticHexagonZeroPhase) {
  const auto trace = lc::run_scenario(hexagon(0.25, 4));
  EXPECT_EQ(trace.drops, 0);
  ASSERT_EQ(trace.receptions.size(), 6u);
  for (const auto& series : trace.receptions) {
    ASSERT_EQ(series.size(), 2000u);
    for (const auto& r : series) {
      EXPECT_LE(std::abs(r.reading.phase), 1e-9);
      EXPECT_EQ(r.reading.cycle, r.seq + 4);
    }
  }
}

// With p = 0.26 a hop of T+ = 1 spans 1/0.26 = 3.846 cycles. Every character
// leaves on a tick, so each lands at phase 1/0.26 - 4, the same for every hop.
TEST(Engine, OffPeriodGivesConstantPhaseOffset) {
  const double expected = 1.0 / 0.26 - 4.0;
  const auto trace = lc::run_scenario(hexagon(0.26, 4, 300));
  EXPECT_EQ(trace.drops, 0);
  for (const auto& series : trace.receptions) {
    for (const auto& r : series) {
      EXPECT_NEAR(r.reading.phase, expected, 1e-9);
      EXPECT_EQ(r.reading.cycle, r.seq + 4);
    }
  }

  auto narrow = hexagon(0.26, 4, 300);
  for (auto& n : narrow.nodes) n.clock.eta = 0.75;  // band |phase| < 0.125
  const auto dropped = lc::run_scenario(narrow);
  EXPECT_EQ(dropped.drops, 6 * 300);
  for (const auto& series : dropped.receptions) {
    for (const auto& r : series) EXPECT_TRUE(r.dropped);
  }
}

TEST(Engine, CausalityAndOrdering) {
  auto s = hexagon(0.25, 4, 200);
  s.geometry->omega = 0.05;
  s.probes = {{lc::node(0), lc::ProbeRoute::echo, lc::node(1), 0, 7}};
  const auto trace = lc::run_scenario(s);
  std::map<std::int64_t, double> last_tx;
  double prev = -1e300;
  for (const auto& e : trace.events) {
    EXPECT_GE(e.time, prev);
    prev = e.time;
    if (e.kind == lc::EventKind::transmit) {
      last_tx[e.signal] = e.time;
    } else if (e.kind == lc::EventKind::receive || e.kind == lc::EventKind::echo_return) {
      ASSERT_TRUE(last_tx.count(e.signal));
      EXPECT_GT(e.time, last_tx[e.signal]);
    }
  }
}

TEST(Engine, DeterministicTraces) {
  auto s = pair(1e-4, lc::Mode::steered, 3000);
  s.nodes[0].drift = {lc::DriftKind::random_walk, 0.0, 1e-7, 5};
  s.delays.jitter_sigma = 1e-4;
  s.seed = 21;
  s.probes = {{lc::node(0), lc::ProbeRoute::echo, lc::node(1), 3, 100}};
  s.trace.record_ticks = true;
  EXPECT_EQ(csv(lc::run_scenario(s)), csv(lc::run_scenario(s)));
  auto other = s;
  other.seed = 22;
  EXPECT_NE(csv(lc::run_scenario(s)), csv(lc::run_scenario(other)));
}

TEST(Engine, EchoCountOnStaticHexagon) {
  auto s = hexagon(0.25, 4, 1000);
  s.probes = {{lc::node(0), lc::ProbeRoute::echo, lc::node(1), 100, 100}};
  const auto trace = lc::run_scenario(s);
  const auto echoes = lc::measure_echoes(trace, lc::node(0));
  ASSERT_EQ(echoes.size(), 9u);  // probes leave at cycles 100..900
  EXPECT_EQ(echoes.front().tx, (lc::ClockReading{100, 0.0}));
  for (const auto& e : echoes) {
    EXPECT_NEAR(lc::echo_count(e), 9.0, 1e-9);
    EXPECT_NEAR(e.turnaround, 1.0, 1e-9);
    EXPECT_EQ(e.hops, 2);
    EXPECT_EQ(e.peer, lc::node(1));
  }
  EXPECT_EQ(trace.echoes[0].size(), echoes.size());
}

TEST(Engine, MeasureEchoesEmptyWithoutProbes) {
  const auto trace = lc::run_scenario(hexagon(0.25, 4, 50));
  EXPECT_TRUE(lc::measure_echoes(trace, lc::node(0)).empty());
}

TEST(Engine, EchoLostToDropIsOmitted) {
  // Node 1 runs slow, so by cycle 3000 arrivals there sit outside the
  // writing phase and the second probe is never relayed.
  auto s = pair(1e-4, lc::Mode::open_loop, 3100);
  s.probes = {{lc::node(0), lc::ProbeRoute::echo, lc::node(1), 0, 3000}};
  const auto trace = lc::run_scenario(s);
  const auto echoes = lc::measure_echoes(trace, lc::node(0));
  ASSERT_EQ(echoes.size(), 1u);
  EXPECT_EQ(echoes[0].tx.cycle, 0);
  bool probe_dropped = false;
  for (const auto& e : trace.events) {
    if (e.role == lc::SignalRole::probe && e.dropped) probe_dropped = true;
  }
  EXPECT_TRUE(probe_dropped);
}

TEST(Engine, SteeringConvergesFromRateOffset) {
  const auto trace = lc::run_scenario(pair(1e-4, lc::Mode::steered, 10500));
  EXPECT_EQ(trace.drops, 0);
  EXPECT_EQ(trace.revisions, 0);
  const auto& rx = trace.receptions[0];
  ASSERT_EQ(rx.size(), 10500u);
  for (const auto& r : rx) EXPECT_LT(std::abs(r.error), 1e-3);
  EXPECT_LT(std::abs(rx.back().error), 1e-9);
  // Each node starts with its initial rate; only the receiver changes it.
  EXPECT_GT(trace.rates[1].size(), 1u);
  EXPECT_EQ(trace.rates[0].size(), 1u);
}

TEST(Engine, OpenLoopRateOffsetWalksOut) {
  const auto trace = lc::run_scenario(pair(1e-4, lc::Mode::open_loop, 10000));
  EXPECT_GT(trace.drops, 0);
  for (const auto& r : trace.rates) EXPECT_EQ(r.size(), 1u);
}

TEST(Engine, OpenLoopRandomWalkLeavesBand) {
  auto s = pair(0.0, lc::Mode::open_loop, 1'000'000);
  s.nodes[1].drift = {lc::DriftKind::random_walk, 0.0, 1e-6, 0};
  s.seed = 2024;
  s.trace.record_events = false;
  const auto trace = lc::run_scenario(s);
  const double band = (1.0 - s.nodes[1].clock.eta) / 2.0;
  bool left = false;
  for (const auto& r : trace.receptions[0]) {
    if (std::abs(r.error) >= band) {
      left = true;
      break;
    }
  }
  EXPECT_TRUE(left);
  EXPECT_GT(trace.drops, 0);
  EXPECT_TRUE(trace.events.empty());
}

TEST(Engine, SteeringOutrunBySlewRequestsRevision) {
  // The offset is larger than the slew limit can correct, so the error
  // grows through the tolerance while receptions still land.
  auto s = pair(2e-3, lc::Mode::steered, 2000);
  s.slew_limit = 1.5e-3;
  s.probes = {{lc::node(0), lc::ProbeRoute::echo, lc::node(1), 0, 10}};
  const auto trace = lc::run_scenario(s);
  EXPECT_GT(trace.revisions, 0);
  std::int64_t revision_events = 0;
  for (const auto& e : trace.events) {
    if (e.kind == lc::EventKind::revision) ++revision_events;
  }
  EXPECT_EQ(revision_events, trace.revisions);
}

TEST(Engine, RejectsInvalidScenario) {
  auto s = hexagon(0.25, 4);
  s.duration = 0;
  EXPECT_THROW(lc::run_scenario(s), lc::ScenarioError);
}

TEST(Engine, RunawayDriftIsFatal) {
  auto s = pair(0.0, lc::Mode::open_loop, 1000);
  s.nodes[1].drift = {lc::DriftKind::constant_offset, -1.5, 0.0, 0};
  EXPECT_THROW(lc::run_scenario(s), lc::SimulationError);
}

TEST(Engine, TraceCsvRoundTrip) {
  auto s = hexagon(0.26, 4, 20);
  for (auto& n : s.nodes) n.clock.eta = 0.75;
  s.trace.record_ticks = true;
  const auto trace = lc::run_scenario(s);
  std::stringstream ss(csv(trace));
  const auto events = lc::read_trace_csv(ss);
  ASSERT_EQ(events.size(), trace.events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    EXPECT_EQ(events[i].kind, trace.events[i].kind);
    EXPECT_EQ(events[i].node, trace.events[i].node);
    EXPECT_EQ(events[i].dropped, trace.events[i].dropped);
    EXPECT_EQ(events[i].payload.has_value(), trace.events[i].payload.has_value());
    EXPECT_NEAR(events[i].time, trace.events[i].time, 1e-9);
  }
  std::stringstream bad("t,node\n");
  EXPECT_THROW(lc::read_trace_csv(bad), std::runtime_error);
}

namespace {

lc::Scenario sagnac(double omega) {
  lc::Scenario s;
  s.geometry = lc::RingGeometry{6, 1.0, omega, 1.0};
  s.nodes = lc::uniform_nodes(6, lc::solve_forward_time(*s.geometry) / 6.0);
  s.probes = {{lc::node(0), lc::ProbeRoute::forward_circuit, {}, 0, 50},
              {lc::node(0), lc::ProbeRoute::backward_circuit, {}, 0, 50}};
  s.duration = 100;
  return s;
}

double estimate_from(const lc::Scenario& s) {
  const auto trace = lc::run_scenario(s);
  const auto echoes = lc::measure_echoes(trace, lc::node(0));
  std::optional<lc::CircuitEcho> fwd, bwd;
  for (const auto& e : echoes) {
    if (e.hops != 6) continue;
    if (e.peer == lc::node(1) && !fwd) fwd = lc::CircuitEcho{lc::echo_count(e), e.turnaround};
    if (e.peer == lc::node(5) && !bwd) bwd = lc::CircuitEcho{lc::echo_count(e), e.turnaround};
  }
  EXPECT_TRUE(fwd && bwd);
  return lc::estimate_omega(*fwd, *bwd, s.nodes[0].clock.effective_period(), 6, 1.0, 1.0);
}

}  // namespace

TEST(Estimate, RotatingHexagon) {
  EXPECT_NEAR(estimate_from(sagnac(0.1)), 0.1, 1e-7);
}

TEST(Estimate, StaticHexagon) { EXPECT_LE(std::abs(estimate_from(sagnac(0.0))), 1e-12); }

TEST(Estimate, CorruptedBackwardEchoFails) {
  const auto sol = lc::solve_propagation({6, 1.0, 0.1, 1.0});
  const double p = sol.forward / 6.0;
  const lc::CircuitEcho fwd{6.0 * sol.forward / p, 0.0};
  const lc::CircuitEcho bwd{1.1 * 6.0 * sol.backward / p, 0.0};
  try {
    lc::estimate_omega(fwd, bwd, p, 6, 1.0, 1.0);
    FAIL() << "expected EstimationFailed";
  } catch (const lc::EstimationFailed& e) {
    EXPECT_NEAR(e.from_forward, 0.1, 1e-12);
    EXPECT_NEAR(e.from_backward, lc::omega_from_backward_time(6, 1, 1, 1.1 * sol.backward),
                1e-12);
  }
}

TEST(Estimate, SharedTurnaroundOverload) {
  const auto sol = lc::solve_propagation({6, 1.0, 0.1, 1.0});
  const double p = 0.05;
  const double w = lc::estimate_omega(6.0 * sol.forward / p + 5.0, 6.0 * sol.backward / p + 5.0,
                                      p, 6, 1.0, 1.0, 5.0);
  EXPECT_NEAR(w, 0.1, 1e-12);
  EXPECT_THROW(lc::estimate_omega(1.0, 1.0, -1.0, 6, 1.0, 1.0, 0.0), std::invalid_argument);
}
