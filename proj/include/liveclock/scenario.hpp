#pragma once

// Declarative simulation input.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "liveclock/channel.hpp"
#include "liveclock/clock.hpp"
#include "liveclock/ring.hpp"
#include "liveclock/steering.hpp"

namespace liveclock {

enum class Mode { open_loop, steered };

enum class ProbeRoute {
  echo,              // origin -> peer -> origin
  forward_circuit,   // once round the ring with the rotation
  backward_circuit,  // once round the ring against it
};

struct ProbeSpec {
  NodeId origin{};
  ProbeRoute route = ProbeRoute::echo;
  NodeId peer{};  // echo only
  std::int64_t start = 0;
  std::int64_t every = 1;
};

struct NodeSpec {
  LiveClockState clock;
  DriftModel drift;
};

struct ChannelSpec {
  RepeatingChannel channel;
  std::optional<double> delay;  // s; overrides the ring delays
};

// Hop delays. Node i -> i+1 (mod node count) is a forward hop, i -> i-1 a
// backward hop; with two nodes 0 -> 1 is forward and 1 -> 0 backward. Unset
// values come from the ring geometry.
struct LinkDelays {
  std::optional<double> forward;
  std::optional<double> backward;
  double forward_scale = 1.0;
  double backward_scale = 1.0;
  double jitter_sigma = 0.0;  // s, per-hop Gaussian perturbation; off by default
};

struct TraceOptions {
  bool record_ticks = false;
  bool record_events = true;
};

struct Scenario {
  std::optional<RingGeometry> geometry;
  LinkDelays delays;
  std::vector<NodeSpec> nodes;
  std::vector<ChannelSpec> channels;
  std::vector<ProbeSpec> probes;
  ReferencePattern reference;
  ServoGains gains;
  double slew_limit = 1e-3;
  double integral_clamp = 10.0;
  std::int64_t duration = 1;  // cycles
  std::uint64_t seed = 0;
  Mode mode = Mode::open_loop;
  TraceOptions trace;
};

class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws ScenarioError when the scenario is inconsistent: dangling channel
/// endpoints, hops without a delay, channels transmitting off the tick, etc.
void validate(const Scenario& s);

/// Delay of the hop a -> b, before jitter and excluding per-channel overrides.
/// Throws ScenarioError when the hop is not a ring neighbour or no delay is
/// known for its direction.
double hop_delay(const Scenario& s, NodeId from, NodeId to);

/// Zero-phase targets for every channel, stride n - m in receiver cycles.
ReferencePattern default_reference(const std::vector<ChannelSpec>& channels, double tolerance,
                                   int revision_window);

/// `count` clocks sharing one period and guard interval, no drift.
std::vector<NodeSpec> uniform_nodes(int count, double period, double eta = kDefaultEta);

std::vector<ChannelSpec> as_specs(const std::vector<RepeatingChannel>& channels);

/// The route a probe takes, starting and ending at its origin.
std::vector<NodeId> probe_route(const ProbeSpec& probe, std::size_t node_count);

}  // namespace liveclock
