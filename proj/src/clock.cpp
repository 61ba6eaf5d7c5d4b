#include "liveclock/clock.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace liveclock {

ClockReading normalize(double total_cycles) {
  if (!std::isfinite(total_cycles)) {
    throw std::invalid_argument("normalize: non-finite cycle count");
  }
  // 2^62 keeps the integer part comfortably inside int64.
  constexpr double kLimit = 4.611686018427388e18;
  if (std::abs(total_cycles) >= kLimit) {
    throw std::invalid_argument("normalize: cycle count out of range");
  }
  double cycle = std::ceil(total_cycles - 0.5);
  double phase = total_cycles - cycle;
  // Rounding in total - 0.5 can push the phase one ulp across a bound.
  if (phase <= -0.5) {
    cycle -= 1.0;
    phase += 1.0;
  } else if (phase > 0.5) {
    cycle += 1.0;
    phase -= 1.0;
  }
  return {static_cast<std::int64_t>(cycle), phase};
}

ClockReading normalize(std::int64_t base_cycle, double offset_cycles) {
  ClockReading r = normalize(offset_cycles);
  r.cycle += base_cycle;
  return r;
}

double cycles_between(const ClockReading& earlier, const ClockReading& later) {
  return static_cast<double>(later.cycle - earlier.cycle) + (later.phase - earlier.phase);
}

ClockReading shifted(const ClockReading& reading, double cycles) {
  return normalize(reading.cycle, reading.phase + cycles);
}

void validate(const LiveClockState& clock) {
  if (!(clock.base_period > 0.0) || !std::isfinite(clock.base_period)) {
    throw std::invalid_argument("clock " + std::to_string(index_of(clock.id)) +
                                ": base_period must be positive");
  }
  if (!(clock.effective_period() > 0.0) || !std::isfinite(clock.effective_period())) {
    throw std::invalid_argument("clock " + std::to_string(index_of(clock.id)) +
                                ": effective period must be positive");
  }
  if (!(clock.eta > 0.0 && clock.eta < 1.0)) {
    throw std::invalid_argument("clock " + std::to_string(index_of(clock.id)) +
                                ": eta must lie in (0, 1)");
  }
  if (!std::isfinite(clock.epoch_offset)) {
    throw std::invalid_argument("clock " + std::to_string(index_of(clock.id)) +
                                ": epoch_offset must be finite");
  }
}

ClockReading reading_at(const LiveClockState& clock, double t) {
  return normalize((t - clock.epoch_offset) / clock.effective_period());
}

bool can_receive(double phase, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) {
    throw std::invalid_argument("can_receive: eta must lie in (0, 1)");
  }
  return std::abs(phase) < (1.0 - eta) / 2.0;
}

LiveClockState apply_rate_command(const LiveClockState& clock, double delta) {
  LiveClockState next = clock;
  next.rate_correction += delta;
  const double period = next.effective_period();
  if (!(period > 0.0) || !std::isfinite(period)) {
    throw std::range_error("rate command would make the clock period non-positive");
  }
  return next;
}

double standard_normal(std::mt19937_64& rng) {
  constexpr double kTwoPi = 6.283185307179586;
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  // u1 in (0, 1] keeps the logarithm finite.
  const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * kScale;
  const double u2 = static_cast<double>(rng() >> 11) * kScale;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

DriftProcess::DriftProcess(const DriftModel& model, std::uint64_t stream) : model_(model) {
  std::seed_seq seq{static_cast<std::uint32_t>(model.seed),
                    static_cast<std::uint32_t>(model.seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  rng_.seed(seq);
}

double DriftProcess::next() {
  switch (model_.kind) {
    case DriftKind::none:
      return 0.0;
    case DriftKind::constant_offset:
      return model_.fractional_offset;
    case DriftKind::random_walk: {
      const double current = walk_;
      walk_ += model_.step_sigma * standard_normal(rng_);
      return current;
    }
  }
  return 0.0;
}

TickingClock::TickingClock(double epoch, double first_period)
    : tick_time_(epoch), period_(first_period), anchor_time_(epoch) {}

double TickingClock::next_tick_time() const {
  return anchor_time_ + static_cast<double>(cycle_ + 1 - anchor_cycle_) * period_;
}

void TickingClock::advance(double next_period) {
  tick_time_ = next_tick_time();
  ++cycle_;
  if (next_period != period_) {
    anchor_cycle_ = cycle_;
    anchor_time_ = tick_time_;
    period_ = next_period;
  }
}

ClockReading TickingClock::reading(double t) const {
  return normalize(anchor_cycle_, (t - anchor_time_) / period_);
}

}  // namespace liveclock
