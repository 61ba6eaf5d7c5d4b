#pragma once

// Deterministic discrete-event simulation of a live-clock network.
//
// Events run in coordinate-time order with ties broken by (node id, kind
// rank, insertion order), where receptions rank before ticks and ticks before
// transmissions. A reception landing exactly on a tick therefore sees the
// pre-tick phase. Nodes transmit only on ticks; characters arriving outside
// the receiver's writing phase are recorded as dropped and never
// retransmitted. In steered mode each node feeds the errors it observed
// during a cycle into its servo and the resulting rate command takes effect
// at its next tick.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "liveclock/channel.hpp"
#include "liveclock/scenario.hpp"

namespace liveclock {

enum class EventKind { tick, transmit, receive, echo_return, rate_change, revision };

std::string_view to_string(EventKind kind);

enum class SignalRole { none, data, probe };

struct Event {
  double time = 0.0;
  NodeId node{};
  EventKind kind = EventKind::tick;
  ClockReading local;
  std::optional<ClockReading> payload;
  NodeId peer{};
  std::int64_t signal = -1;  // id shared by every hop of one character
  SignalRole role = SignalRole::none;
  std::int32_t channel = -1;  // data channel or probe index
  double relay_wait = 0.0;    // echo_return: accumulated relay wait, cycles
  bool dropped = false;
};

struct ReceptionSample {
  double time = 0.0;
  std::int64_t seq = 0;  // character index l on its channel
  ClockReading reading;
  double error = 0.0;  // wrapped against the channel's reference target
  bool dropped = false;
};

struct RateSample {
  double time = 0.0;
  std::int64_t cycle = 0;
  double rate_correction = 0.0;
};

struct Trace {
  std::vector<Event> events;
  std::vector<std::vector<ReceptionSample>> receptions;  // per data channel
  std::vector<std::vector<RateSample>> rates;            // per node
  std::vector<std::vector<EchoRecord>> echoes;           // per origin node
  ReferencePattern final_reference;
  std::int64_t drops = 0;
  std::int64_t revisions = 0;
};

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs the scenario. Identical scenarios produce bit-identical traces.
/// Throws ScenarioError for invalid input and SimulationError when event
/// times stop being finite.
Trace run_scenario(const Scenario& s);

/// Echo records for probes originated by `origin`, matched from the trace's
/// events; probes whose echo never came back are omitted.
std::vector<EchoRecord> measure_echoes(const Trace& trace, NodeId origin);

struct TraceSummary {
  double max_phase = 0.0;    // max |reception phase| over data channels
  double final_phase = 0.0;  // max over channels of the last |reception phase|
  std::int64_t receptions = 0;
  std::int64_t drops = 0;
  std::int64_t revisions = 0;
};

TraceSummary summarize(const Trace& trace);

/// Ring-circuit echo in the prober's cycles and the relay wait it includes.
struct CircuitEcho {
  double echo_count = 0.0;
  double relay_wait = 0.0;
};

class EstimationFailed : public std::runtime_error {
 public:
  EstimationFailed(const std::string& what, double from_forward, double from_backward)
      : std::runtime_error(what), from_forward(from_forward), from_backward(from_backward) {}
  double from_forward;
  double from_backward;
};

/// Rotation rate from counter-propagating ring circuits, as a Sagnac
/// interferometer measures it. Each circuit gives a per-hop time
/// (echo - relay wait) * period / n, which is inverted for omega; the two
/// inversions must agree to within tolerance * c / r and are averaged.
/// Throws EstimationFailed (carrying both candidates) otherwise.
double estimate_omega(const CircuitEcho& forward, const CircuitEcho& backward, double period,
                      int n, double r, double c, double tolerance = 1e-6);

/// Same with one relay wait shared by both circuits.
double estimate_omega(double forward_echo, double backward_echo, double period, int n, double r,
                      double c, double turnaround, double tolerance = 1e-6);

/// Trace CSV: header "t,node,kind,cycle,phase,payload", times and phases with
/// 12 significant digits, payload as "cycle:phase" or empty. Dropped
/// receptions carry the kind suffix "_dropped".
void write_trace_csv(std::ostream& out, const Trace& trace);

/// Parses the CSV back into events; fields not in the format stay default.
std::vector<Event> read_trace_csv(std::istream& in);

}  // namespace liveclock
