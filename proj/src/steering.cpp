#include "liveclock/steering.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

namespace liveclock {

std::int64_t ChannelTarget::stride() const { return std::llround(one_way_cycles); }

const ChannelTarget* ReferencePattern::find(NodeId from, NodeId to) const {
  for (const auto& t : targets) {
    if (t.from == from && t.to == to) return &t;
  }
  return nullptr;
}

void validate(const ReferencePattern& pattern, double eta) {
  if (!(pattern.tolerance > 0.0 && pattern.tolerance < (1.0 - eta) / 2.0)) {
    throw std::invalid_argument("reference tolerance must lie in (0, (1 - eta)/2)");
  }
  if (pattern.revision_window < 1) {
    throw std::invalid_argument("revision window must be positive");
  }
  for (const auto& t : pattern.targets) {
    if (!(std::abs(t.target_phase) < 0.5)) {
      throw std::invalid_argument("reference target phases must satisfy |phase| < 1/2");
    }
  }
}

double phase_error(const ClockReading& observed, double target_phase) {
  return normalize(observed.phase - target_phase).phase;
}

ServoStep servo_step(const ServoState& state, double error, const ServoLimits& limits) {
  ServoStep out{state, {}};
  out.state.integral_accumulator = std::clamp(state.integral_accumulator + error,
                                              -limits.integral_clamp, limits.integral_clamp);
  if (std::abs(error) > limits.tolerance) {
    ++out.state.consecutive_violations;
  } else {
    out.state.consecutive_violations = 0;
  }

  if (out.state.consecutive_violations >= limits.revision_window) {
    out.state.consecutive_violations = 0;
    out.decision = {DecisionKind::request_revision, 0.0};
    return out;
  }

  double delta = -(state.gains.proportional * error +
                   state.gains.integral * out.state.integral_accumulator);
  delta = std::clamp(delta, -limits.slew_limit, limits.slew_limit);
  if (delta == 0.0) {
    out.decision = {DecisionKind::hold, 0.0};
  } else {
    out.decision = {DecisionKind::rate_command, delta};
  }
  return out;
}

namespace {

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace

ReferencePattern revise_reference(std::span<const EchoRecord> echoes, const ReferencePattern& old) {
  if (echoes.empty()) {
    throw std::invalid_argument("revise_reference: no echoes to estimate from");
  }

  // Round-trip hop totals per probed pair, oldest first.
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<double>> round_trips;
  for (const auto& e : echoes) {
    if (e.hops != 2) continue;
    round_trips[{index_of(e.origin), index_of(e.peer)}].push_back(echo_count(e) - e.turnaround);
  }

  ReferencePattern revised = old;
  bool changed = false;
  const auto window = static_cast<std::size_t>(std::max(old.revision_window, 1));
  for (auto& [key, samples] : round_trips) {
    if (samples.size() > window) {
      samples.erase(samples.begin(), samples.end() - static_cast<std::ptrdiff_t>(window));
    }
    const double round_trip = median(samples);
    const NodeId a = node(key.first);
    const NodeId b = node(key.second);
    const ChannelTarget* out = old.find(a, b);
    const ChannelTarget* back = old.find(b, a);

    double share = 0.5;
    if (out != nullptr && back != nullptr) {
      const double sum = out->one_way_cycles + back->one_way_cycles;
      if (sum > 0.0) share = out->one_way_cycles / sum;
    }

    for (auto& t : revised.targets) {
      double estimate = 0.0;
      if (t.from == a && t.to == b) {
        estimate = share * round_trip;
      } else if (t.from == b && t.to == a) {
        estimate = (1.0 - share) * round_trip;
      } else {
        continue;
      }
      if (std::abs(estimate - t.one_way_cycles) > old.tolerance) {
        t.one_way_cycles = estimate;
        changed = true;
      }
    }
  }

  if (!changed) return old;
  ++revised.generation;
  return revised;
}

}  // namespace liveclock
