#include "liveclock/engine.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <random>
#include <tuple>
#include <unordered_map>

namespace liveclock {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::tick: return "tick";
    case EventKind::transmit: return "transmit";
    case EventKind::receive: return "receive";
    case EventKind::echo_return: return "echo_return";
    case EventKind::rate_change: return "rate_change";
    case EventKind::revision: return "revision";
  }
  return "unknown";
}

namespace {

// Receptions this close below a tick count as landing on it, so a relay
// still waits for the following tick.
constexpr double kTickEpsilon = 1e-9;

enum Rank : int { kReceiveRank = 0, kTickRank = 1 };

struct QueueEntry {
  double time;
  std::uint32_t node;
  int rank;
  std::uint64_t order;
  std::int64_t value;  // tick: cycle, arrival: signal id
};

struct Later {
  bool operator()(const QueueEntry& a, const QueueEntry& b) const {
    return std::tie(a.time, a.node, a.rank, a.order) > std::tie(b.time, b.node, b.rank, b.order);
  }
};

struct Signal {
  SignalRole role = SignalRole::data;
  std::int32_t channel = -1;  // data channel or probe index
  std::int64_t seq = 0;
  std::size_t hop = 0;  // index of the hop in flight along a probe route
  NodeId from{};
  NodeId to{};
  ClockReading payload;
  ClockReading origin_tx;
  double relay_wait = 0.0;
};

struct NodeRuntime {
  LiveClockState clock;
  double nominal_correction;
  DriftProcess drift;
  TickingClock ticker;
  ServoState servo;
  std::int64_t last_tick = -1;
  std::vector<double> cycle_errors;
  std::map<std::int64_t, std::vector<std::int64_t>> relays;  // cycle -> signal ids
};

class Simulator {
 public:
  explicit Simulator(const Scenario& s) : s_(s), reference_(s.reference) {
    validate(s_);
    std::seed_seq jitter_seed{static_cast<std::uint32_t>(s.seed),
                              static_cast<std::uint32_t>(s.seed >> 32), 0x6a17u};
    jitter_rng_.seed(jitter_seed);

    const std::size_t n = s_.nodes.size();
    trace_.receptions.resize(s_.channels.size());
    trace_.rates.resize(n);
    trace_.echoes.resize(n);

    double min_period = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& spec = s_.nodes[i];
      const std::uint64_t stream = (s_.seed << 16) + i;
      DriftProcess drift(spec.drift, stream);
      const double first = spec.clock.effective_period() * (1.0 + drift.next());
      check_period(first, i);
      nodes_.push_back(NodeRuntime{spec.clock, spec.clock.rate_correction, drift,
                                   TickingClock(spec.clock.epoch_offset, first),
                                   ServoState{s_.gains, 0.0, 0}, -1, {}, {}});
      min_period = std::min(min_period, spec.clock.effective_period());
    }

    double max_delay = 0.0;
    std::size_t max_hops = 2;
    channel_delay_.reserve(s_.channels.size());
    for (const auto& spec : s_.channels) {
      const double d = spec.delay ? *spec.delay : hop_delay(s_, spec.channel.from, spec.channel.to);
      channel_delay_.push_back(d);
      max_delay = std::max(max_delay, d);
      const ChannelTarget* t = reference_.find(spec.channel.from, spec.channel.to);
      channel_target_.push_back(t ? static_cast<std::int64_t>(t - reference_.targets.data()) : -1);
    }
    for (const auto& probe : s_.probes) {
      routes_.push_back(probe_route(probe, n));
      const auto& route = routes_.back();
      max_hops = std::max(max_hops, route.size() - 1);
      std::vector<double> delays;
      for (std::size_t h = 0; h + 1 < route.size(); ++h) {
        delays.push_back(hop_delay(s_, route[h], route[h + 1]));
        max_delay = std::max(max_delay, delays.back());
      }
      route_delays_.push_back(std::move(delays));
    }
    // Nodes keep ticking past the last transmission so that characters and
    // probe relays still in flight find live receivers.
    const double in_flight = max_delay * static_cast<double>(max_hops) / min_period;
    horizon_ = s_.duration + static_cast<std::int64_t>(std::ceil(1.5 * in_flight)) +
               static_cast<std::int64_t>(max_hops) + 2;

    limits_.slew_limit = s_.slew_limit;
    limits_.integral_clamp = s_.integral_clamp;
    limits_.tolerance = reference_.tolerance;
    limits_.revision_window = reference_.revision_window;
  }

  Trace run() {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      push(nodes_[i].ticker.tick_time(), static_cast<std::uint32_t>(i), kTickRank, 0);
      trace_.rates[i].push_back(
          {nodes_[i].ticker.tick_time(), 0, nodes_[i].clock.rate_correction});
    }
    while (!queue_.empty()) {
      const QueueEntry e = queue_.top();
      queue_.pop();
      if (!std::isfinite(e.time)) {
        throw SimulationError("event time is not finite; scenario cannot be ordered");
      }
      if (e.rank == kTickRank) {
        on_tick(e.node, e.value, e.time);
      } else {
        on_arrival(e.node, e.value, e.time);
      }
    }
    trace_.final_reference = reference_;
    return std::move(trace_);
  }

 private:
  static void check_period(double period, std::size_t node_index) {
    if (!(period > 0.0) || !std::isfinite(period)) {
      throw SimulationError(fmt::format("node {} period became non-positive", node_index));
    }
  }

  void push(double time, std::uint32_t node_index, int rank, std::int64_t value) {
    if (!std::isfinite(time)) {
      throw SimulationError("event time is not finite; scenario cannot be ordered");
    }
    queue_.push({time, node_index, rank, order_++, value});
  }

  static Event simple_event(double time, std::uint32_t i, EventKind kind, ClockReading local) {
    Event e;
    e.time = time;
    e.node = node(i);
    e.kind = kind;
    e.local = local;
    return e;
  }

  void record(Event e) {
    if (s_.trace.record_events) trace_.events.push_back(std::move(e));
  }

  double perturbed(double delay) {
    if (s_.delays.jitter_sigma == 0.0) return delay;
    return std::max(0.0, delay + s_.delays.jitter_sigma * standard_normal(jitter_rng_));
  }

  void on_tick(std::uint32_t i, std::int64_t cycle, double time) {
    NodeRuntime& nd = nodes_[i];
    if (cycle > 0) {
      if (s_.mode == Mode::steered && !nd.cycle_errors.empty()) steer(i, cycle, time);
      const double period = nd.clock.effective_period() * (1.0 + nd.drift.next());
      check_period(period, i);
      nd.ticker.advance(period);
    }
    nd.last_tick = cycle;
    const ClockReading local{cycle, 0.0};
    if (s_.trace.record_ticks) record(simple_event(time, i, EventKind::tick, local));

    if (cycle < s_.duration) {
      for (std::size_t c = 0; c < s_.channels.size(); ++c) {
        const auto& ch = s_.channels[c].channel;
        if (index_of(ch.from) != i || cycle < ch.m || (cycle - ch.m) % ch.j != 0) continue;
        Signal sig;
        sig.role = SignalRole::data;
        sig.channel = static_cast<std::int32_t>(c);
        sig.seq = (cycle - ch.m) / ch.j;
        sig.from = ch.from;
        sig.to = ch.to;
        sig.payload = local;
        sig.origin_tx = local;
        transmit(std::move(sig), time, local, channel_delay_[c]);
      }
      for (std::size_t p = 0; p < s_.probes.size(); ++p) {
        const auto& probe = s_.probes[p];
        if (index_of(probe.origin) != i || cycle < probe.start ||
            (cycle - probe.start) % probe.every != 0) {
          continue;
        }
        Signal sig;
        sig.role = SignalRole::probe;
        sig.channel = static_cast<std::int32_t>(p);
        sig.seq = (cycle - probe.start) / probe.every;
        sig.from = probe.origin;
        sig.to = routes_[p][1];
        sig.payload = local;
        sig.origin_tx = local;
        transmit(std::move(sig), time, local, route_delays_[p][0]);
      }
    }

    if (auto it = nd.relays.find(cycle); it != nd.relays.end()) {
      const std::vector<std::int64_t> pending = std::move(it->second);
      nd.relays.erase(it);
      for (const std::int64_t id : pending) {
        Signal& sig = signals_[static_cast<std::size_t>(id)];
        ++sig.hop;
        const auto& route = routes_[static_cast<std::size_t>(sig.channel)];
        sig.from = node(i);
        sig.to = route[sig.hop + 1];
        emit_transmit(id, time, local,
                      route_delays_[static_cast<std::size_t>(sig.channel)][sig.hop]);
      }
    }

    if (cycle + 1 <= horizon_) push(nd.ticker.next_tick_time(), i, kTickRank, cycle + 1);
  }

  void steer(std::uint32_t i, std::int64_t cycle, double time) {
    NodeRuntime& nd = nodes_[i];
    double error = 0.0;
    for (const double e : nd.cycle_errors) error += e;
    error /= static_cast<double>(nd.cycle_errors.size());
    nd.cycle_errors.clear();

    const ServoStep step = servo_step(nd.servo, error, limits_);
    nd.servo = step.state;
    const ClockReading local{cycle, 0.0};
    switch (step.decision.kind) {
      case DecisionKind::hold:
        break;
      case DecisionKind::rate_command: {
        // The servo speaks frequency, the clock state speaks period.
        const double target = nd.nominal_correction - step.decision.delta;
        try {
          nd.clock = apply_rate_command(nd.clock, target - nd.clock.rate_correction);
        } catch (const std::range_error& e) {
          throw SimulationError(fmt::format("node {}: {}", i, e.what()));
        }
        trace_.rates[i].push_back({time, cycle, nd.clock.rate_correction});
        record(simple_event(time, i, EventKind::rate_change, local));
        break;
      }
      case DecisionKind::request_revision: {
        ++trace_.revisions;
        record(simple_event(time, i, EventKind::revision, local));
        const auto& echoes = trace_.echoes[i];
        if (!echoes.empty()) reference_ = revise_reference(echoes, reference_);
        break;
      }
    }
  }

  void transmit(Signal sig, double time, const ClockReading& local, double delay) {
    const auto id = static_cast<std::int64_t>(signals_.size());
    signals_.push_back(std::move(sig));
    emit_transmit(id, time, local, delay);
  }

  void emit_transmit(std::int64_t id, double time, const ClockReading& local, double delay) {
    const Signal& sig = signals_[static_cast<std::size_t>(id)];
    Event e{time, sig.from, EventKind::transmit, local, sig.payload};
    e.peer = sig.to;
    e.signal = id;
    e.role = sig.role;
    e.channel = sig.channel;
    record(std::move(e));
    push(time + perturbed(delay), index_of(sig.to), kReceiveRank, id);
  }

  void on_arrival(std::uint32_t i, std::int64_t id, double time) {
    NodeRuntime& nd = nodes_[i];
    Signal& sig = signals_[static_cast<std::size_t>(id)];
    const ClockReading reading = nd.ticker.reading(time);
    const bool delivered = can_receive(reading.phase, nd.clock.eta);
    if (!delivered) ++trace_.drops;

    Event e{time, node(i), EventKind::receive, reading, sig.payload};
    e.peer = sig.from;
    e.signal = id;
    e.role = sig.role;
    e.channel = sig.channel;
    e.dropped = !delivered;

    if (sig.role == SignalRole::data) {
      const auto c = static_cast<std::size_t>(sig.channel);
      const std::int64_t t = channel_target_[c];
      const double target = t >= 0 ? reference_.targets[static_cast<std::size_t>(t)].target_phase
                                   : s_.channels[c].channel.phi_rx;
      const double error = phase_error(reading, target);
      trace_.receptions[c].push_back({time, sig.seq, reading, error, !delivered});
      if (delivered && t >= 0 && s_.mode == Mode::steered) nd.cycle_errors.push_back(error);
      record(std::move(e));
      return;
    }

    const auto& route = routes_[static_cast<std::size_t>(sig.channel)];
    if (sig.hop + 2 == route.size()) {
      e.kind = EventKind::echo_return;
      e.relay_wait = sig.relay_wait;
      record(std::move(e));
      if (delivered) {
        trace_.echoes[i].push_back(EchoRecord{sig.origin_tx, reading, route.front(), route[1],
                                              static_cast<int>(route.size() - 1),
                                              sig.relay_wait});
      }
      return;
    }

    record(std::move(e));
    if (!delivered) return;
    // Relay on the first tick strictly after the reception.
    std::int64_t relay_cycle = reading.phase > -kTickEpsilon ? reading.cycle + 1 : reading.cycle;
    relay_cycle = std::max(relay_cycle, nd.last_tick + 1);
    if (relay_cycle > horizon_) return;
    sig.relay_wait += cycles_between(reading, ClockReading{relay_cycle, 0.0});
    sig.payload = reading;
    nd.relays[relay_cycle].push_back(id);
  }

  const Scenario& s_;
  ReferencePattern reference_;
  ServoLimits limits_;
  std::vector<NodeRuntime> nodes_;
  std::vector<double> channel_delay_;
  std::vector<std::int64_t> channel_target_;
  std::vector<std::vector<NodeId>> routes_;
  std::vector<std::vector<double>> route_delays_;
  std::vector<Signal> signals_;
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, Later> queue_;
  std::uint64_t order_ = 0;
  std::int64_t horizon_ = 0;
  std::mt19937_64 jitter_rng_;
  Trace trace_;
};

}  // namespace

Trace run_scenario(const Scenario& s) { return Simulator(s).run(); }

std::vector<EchoRecord> measure_echoes(const Trace& trace, NodeId origin) {
  struct Probe {
    ClockReading tx;
    NodeId peer{};
    int hops = 0;
  };
  std::unordered_map<std::int64_t, Probe> probes;
  std::vector<EchoRecord> records;
  std::unordered_map<std::int64_t, bool> matched;
  for (const auto& e : trace.events) {
    if (e.role != SignalRole::probe) continue;
    if (e.kind == EventKind::transmit) {
      auto [it, inserted] = probes.try_emplace(e.signal);
      if (inserted) {
        if (e.node != origin || e.local.phase != 0.0) {
          probes.erase(it);
          continue;
        }
        it->second = {e.local, e.peer, 0};
      }
      ++it->second.hops;
    } else if (e.kind == EventKind::echo_return && e.node == origin && !e.dropped) {
      auto it = probes.find(e.signal);
      if (it == probes.end() || matched[e.signal]) continue;
      matched[e.signal] = true;
      records.push_back(
          {it->second.tx, e.local, origin, it->second.peer, it->second.hops, e.relay_wait});
    }
  }
  return records;
}

TraceSummary summarize(const Trace& trace) {
  TraceSummary sum;
  sum.drops = trace.drops;
  sum.revisions = trace.revisions;
  for (const auto& series : trace.receptions) {
    for (const auto& r : series) {
      sum.max_phase = std::max(sum.max_phase, std::abs(r.reading.phase));
      ++sum.receptions;
    }
    if (!series.empty()) {
      sum.final_phase = std::max(sum.final_phase, std::abs(series.back().reading.phase));
    }
  }
  return sum;
}

double estimate_omega(const CircuitEcho& forward, const CircuitEcho& backward, double period,
                      int n, double r, double c, double tolerance) {
  if (!(period > 0.0) || n < 3 || !(r > 0.0) || !(c > 0.0) || !(tolerance >= 0.0)) {
    throw std::invalid_argument("estimate_omega: invalid geometry or period");
  }
  if (forward.echo_count < forward.relay_wait || backward.echo_count < backward.relay_wait) {
    throw std::invalid_argument("estimate_omega: echo shorter than its relay wait");
  }
  const double hop_forward = (forward.echo_count - forward.relay_wait) * period / n;
  const double hop_backward = (backward.echo_count - backward.relay_wait) * period / n;

  const double nan = std::numeric_limits<double>::quiet_NaN();
  double from_forward = nan;
  double from_backward = nan;
  std::string problem;
  try {
    from_forward = omega_from_forward_time(n, r, c, hop_forward);
  } catch (const std::invalid_argument& e) {
    problem = fmt::format("forward circuit: {}", e.what());
  }
  try {
    from_backward = omega_from_backward_time(n, r, c, hop_backward);
  } catch (const std::invalid_argument& e) {
    if (problem.empty()) problem = fmt::format("backward circuit: {}", e.what());
  }
  if (problem.empty() && std::abs(from_forward - from_backward) > tolerance * c / r) {
    problem = "circuits disagree";
  }
  if (!problem.empty()) {
    throw EstimationFailed(
        fmt::format("omega estimation failed ({}): forward gives {:.12g} rad/s, backward gives "
                    "{:.12g} rad/s",
                    problem, from_forward, from_backward),
        from_forward, from_backward);
  }
  return 0.5 * (from_forward + from_backward);
}

double estimate_omega(double forward_echo, double backward_echo, double period, int n, double r,
                      double c, double turnaround, double tolerance) {
  return estimate_omega(CircuitEcho{forward_echo, turnaround},
                        CircuitEcho{backward_echo, turnaround}, period, n, r, c, tolerance);
}

}  // namespace liveclock
