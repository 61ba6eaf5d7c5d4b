#include "liveclock/scenario.hpp"

#include <fmt/format.h>

#include <cmath>

namespace liveclock {

namespace {

enum class Direction { forward, backward, none };

Direction direction_of(std::size_t count, std::uint32_t from, std::uint32_t to) {
  if (count < 2 || from >= count || to >= count || from == to) return Direction::none;
  if (count == 2) return from < to ? Direction::forward : Direction::backward;
  if (to == (from + 1) % count) return Direction::forward;
  if (from == (to + 1) % count) return Direction::backward;
  return Direction::none;
}

}  // namespace

double hop_delay(const Scenario& s, NodeId from, NodeId to) {
  const Direction dir = direction_of(s.nodes.size(), index_of(from), index_of(to));
  if (dir == Direction::none) {
    throw ScenarioError(fmt::format("hop {} -> {} is not between ring neighbours", index_of(from),
                                    index_of(to)));
  }
  std::optional<PropagationSolution> sol;
  auto solved = [&]() -> const PropagationSolution& {
    if (!sol) {
      if (!s.geometry) {
        throw ScenarioError(fmt::format("hop {} -> {} has no delay: set delays or geometry",
                                        index_of(from), index_of(to)));
      }
      sol = solve_propagation(*s.geometry);
    }
    return *sol;
  };
  if (dir == Direction::forward) {
    return s.delays.forward_scale * (s.delays.forward ? *s.delays.forward : solved().forward);
  }
  return s.delays.backward_scale * (s.delays.backward ? *s.delays.backward : solved().backward);
}

void validate(const Scenario& s) {
  if (s.nodes.empty()) throw ScenarioError("scenario has no nodes");
  if (s.duration < 1) throw ScenarioError("duration must be at least one cycle");
  if (s.geometry) {
    try {
      validate(*s.geometry);
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(e.what());
    }
  }
  double min_eta = 1.0;
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    const auto& clock = s.nodes[i].clock;
    if (index_of(clock.id) != i) {
      throw ScenarioError(fmt::format("node {} carries id {}", i, index_of(clock.id)));
    }
    try {
      validate(clock);
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(e.what());
    }
    const auto& drift = s.nodes[i].drift;
    if (!std::isfinite(drift.fractional_offset) || !(drift.step_sigma >= 0.0)) {
      throw ScenarioError(fmt::format("node {}: invalid drift parameters", i));
    }
    min_eta = std::min(min_eta, clock.eta);
  }
  for (std::size_t c = 0; c < s.channels.size(); ++c) {
    const auto& spec = s.channels[c];
    const auto& ch = spec.channel;
    if (index_of(ch.from) >= s.nodes.size() || index_of(ch.to) >= s.nodes.size()) {
      throw ScenarioError(fmt::format("channel {} names a node that does not exist", c));
    }
    if (ch.from == ch.to) throw ScenarioError(fmt::format("channel {} loops to itself", c));
    try {
      validate(ch);
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(fmt::format("channel {}: {}", c, e.what()));
    }
    if (ch.phi_tx != 0.0) {
      throw ScenarioError(fmt::format("channel {}: transmissions happen on ticks, phi_tx must be 0", c));
    }
    if (spec.delay) {
      if (!(*spec.delay > 0.0) || !std::isfinite(*spec.delay)) {
        throw ScenarioError(fmt::format("channel {}: delay must be positive", c));
      }
    } else {
      const double d = hop_delay(s, ch.from, ch.to);
      if (!(d > 0.0) || !std::isfinite(d)) {
        throw ScenarioError(fmt::format("channel {}: delay must be positive", c));
      }
    }
  }
  for (std::size_t p = 0; p < s.probes.size(); ++p) {
    const auto& probe = s.probes[p];
    if (index_of(probe.origin) >= s.nodes.size()) {
      throw ScenarioError(fmt::format("probe {} origin does not exist", p));
    }
    if (probe.every < 1 || probe.start < 0) {
      throw ScenarioError(fmt::format("probe {}: start must be >= 0 and every >= 1", p));
    }
    if (probe.route == ProbeRoute::echo && (index_of(probe.peer) >= s.nodes.size() ||
                                            probe.peer == probe.origin)) {
      throw ScenarioError(fmt::format("probe {} peer is invalid", p));
    }
    if (probe.route != ProbeRoute::echo && s.nodes.size() < 3) {
      throw ScenarioError(fmt::format("probe {}: ring circuits need at least three nodes", p));
    }
    const auto route = probe_route(probe, s.nodes.size());
    for (std::size_t h = 0; h + 1 < route.size(); ++h) hop_delay(s, route[h], route[h + 1]);
  }
  if (!(s.delays.jitter_sigma >= 0.0)) throw ScenarioError("jitter_sigma must be >= 0");
  if (!(s.slew_limit >= 0.0) || !(s.integral_clamp >= 0.0) || !(s.gains.proportional >= 0.0) ||
      !(s.gains.integral >= 0.0)) {
    throw ScenarioError("steering gains and limits must be non-negative");
  }
  try {
    validate(s.reference, min_eta);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(e.what());
  }
}

ReferencePattern default_reference(const std::vector<ChannelSpec>& channels, double tolerance,
                                   int revision_window) {
  ReferencePattern pattern;
  pattern.tolerance = tolerance;
  pattern.revision_window = revision_window;
  for (const auto& spec : channels) {
    const auto& ch = spec.channel;
    pattern.targets.push_back(
        {ch.from, ch.to, ch.phi_rx, static_cast<double>(ch.n - ch.m) + ch.phi_rx - ch.phi_tx});
  }
  return pattern;
}

std::vector<NodeSpec> uniform_nodes(int count, double period, double eta) {
  std::vector<NodeSpec> nodes;
  for (int i = 0; i < count; ++i) {
    NodeSpec spec;
    spec.clock.id = node(static_cast<std::uint32_t>(i));
    spec.clock.base_period = period;
    spec.clock.eta = eta;
    nodes.push_back(spec);
  }
  return nodes;
}

std::vector<ChannelSpec> as_specs(const std::vector<RepeatingChannel>& channels) {
  std::vector<ChannelSpec> specs;
  specs.reserve(channels.size());
  for (const auto& ch : channels) specs.push_back({ch, std::nullopt});
  return specs;
}

std::vector<NodeId> probe_route(const ProbeSpec& probe, std::size_t node_count) {
  std::vector<NodeId> route{probe.origin};
  const auto n = static_cast<std::uint32_t>(node_count);
  const std::uint32_t origin = index_of(probe.origin);
  switch (probe.route) {
    case ProbeRoute::echo:
      route.push_back(probe.peer);
      break;
    case ProbeRoute::forward_circuit:
      for (std::uint32_t h = 1; h < n; ++h) route.push_back(node((origin + h) % n));
      break;
    case ProbeRoute::backward_circuit:
      for (std::uint32_t h = 1; h < n; ++h) route.push_back(node((origin + n - h) % n));
      break;
  }
  route.push_back(probe.origin);
  return route;
}

}  // namespace liveclock
