#pragma once

// Per-node phase steering: a proportional-integral servo on the wrapped
// reception-phase error, plus revision of the reference pattern from echo
// counts when steering keeps failing.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "liveclock/channel.hpp"
#include "liveclock/clock.hpp"

namespace liveclock {

struct ChannelTarget {
  NodeId from{};
  NodeId to{};
  double target_phase = 0.0;    // desired reception phase
  double one_way_cycles = 0.0;  // expected reception stride, receiver cycles

  std::int64_t stride() const;

  friend bool operator==(const ChannelTarget&, const ChannelTarget&) = default;
};

struct ReferencePattern {
  std::vector<ChannelTarget> targets;
  double tolerance = 0.05;    // phase units
  int revision_window = 50;   // consecutive violating cycles before revision
  int generation = 0;         // bumped on every revision

  const ChannelTarget* find(NodeId from, NodeId to) const;

  friend bool operator==(const ReferencePattern&, const ReferencePattern&) = default;
};

/// Throws std::invalid_argument unless every |target| < 1/2, the window is
/// positive, and 0 < tolerance < (1 - eta)/2.
void validate(const ReferencePattern& pattern, double eta);

/// observed.phase - target_phase wrapped to (-1/2, 1/2]; an exact half cycle
/// maps to +1/2.
double phase_error(const ClockReading& observed, double target_phase);

struct ServoGains {
  double proportional = 0.1;  // per cycle
  double integral = 0.01;     // per cycle
  friend bool operator==(const ServoGains&, const ServoGains&) = default;
};

struct ServoLimits {
  double slew_limit = 1e-3;
  double integral_clamp = 10.0;
  double tolerance = 0.05;
  int revision_window = 50;
};

struct ServoState {
  ServoGains gains;
  double integral_accumulator = 0.0;
  int consecutive_violations = 0;

  friend bool operator==(const ServoState&, const ServoState&) = default;
};

enum class DecisionKind { rate_command, hold, request_revision };

// delta is a fractional frequency correction relative to the node's nominal
// rate: positive means tick faster.
struct SteeringDecision {
  DecisionKind kind = DecisionKind::hold;
  double delta = 0.0;

  friend bool operator==(const SteeringDecision&, const SteeringDecision&) = default;
};

struct ServoStep {
  ServoState state;
  SteeringDecision decision;
};

/// One controller update:
///   acc'  = clamp(acc + error, +-integral_clamp)
///   delta = -(kp * error + ki * acc'), clamped to +-slew_limit
/// The violation counter counts consecutive |error| > tolerance; reaching
/// revision_window emits request_revision and restarts the count. A zero
/// delta is reported as hold.
ServoStep servo_step(const ServoState& state, double error, const ServoLimits& limits);

/// Re-estimates one-way hop counts from plain (two-hop) echoes. For each
/// probed pair the round trip minus the relay turnaround is split between the
/// two directions in proportion to the current pattern (halves when the
/// pattern is symmetric or lacks the reverse channel), using the median of
/// the most recent revision_window echoes. Returns `old` unchanged when every
/// estimate agrees with it within tolerance; otherwise a pattern with updated
/// strides and generation + 1. Targets stay at their current phase.
///
/// Throws std::invalid_argument for an empty echo list.
ReferencePattern revise_reference(std::span<const EchoRecord> echoes, const ReferencePattern& old);

}  // namespace liveclock
