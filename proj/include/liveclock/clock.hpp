#pragma once

// Clock readings and the live-clock state model.
//
// A reading is an integer cycle count plus a phase inside the cycle, with the
// phase kept in (-1/2, 1/2]. A live clock ticks with an adjustable period and
// can receive characters only during the writing part of its cycle, whose
// width is (1 - eta) centred on phase 0.

#include <compare>
#include <cstdint>
#include <random>

namespace liveclock {

enum class NodeId : std::uint32_t {};

constexpr std::uint32_t index_of(NodeId id) { return static_cast<std::uint32_t>(id); }
constexpr NodeId node(std::uint32_t i) { return static_cast<NodeId>(i); }

struct ClockReading {
  std::int64_t cycle = 0;
  double phase = 0.0;

  /// cycle + phase as a single real. Loses precision for very large cycles;
  /// prefer `cycles_between` for differences.
  double total() const { return static_cast<double>(cycle) + phase; }

  friend bool operator==(const ClockReading&, const ClockReading&) = default;
};

/// Splits a real cycle count into (cycle, phase) with phase in (-1/2, 1/2].
/// Ties round down, so 2.5 becomes (2, 0.5). Throws std::invalid_argument for
/// non-finite input or values outside the int64 cycle range.
ClockReading normalize(double total_cycles);

/// normalize(base_cycle + offset_cycles) without forming the large sum.
ClockReading normalize(std::int64_t base_cycle, double offset_cycles);

/// later - earlier, in cycles.
double cycles_between(const ClockReading& earlier, const ClockReading& later);

/// Reading shifted by a (possibly fractional) number of cycles.
ClockReading shifted(const ClockReading& reading, double cycles);

inline constexpr double kDefaultEta = 0.5;

struct LiveClockState {
  NodeId id{};
  double base_period = 1.0;      // s per cycle
  double rate_correction = 0.0;  // fractional period adjustment
  double epoch_offset = 0.0;     // coordinate time of the reading-zero tick, s
  double eta = kDefaultEta;      // guard interval reserved for reading

  double effective_period() const { return base_period * (1.0 + rate_correction); }
};

/// Throws std::invalid_argument when base_period, effective period or eta
/// are out of range.
void validate(const LiveClockState& clock);

/// Blackboard view: the clock's reading at coordinate time t, assuming the
/// current effective period has held since the epoch.
ClockReading reading_at(const LiveClockState& clock, double t);

/// True iff |phase| < (1 - eta)/2. Throws std::invalid_argument unless
/// 0 < eta < 1.
bool can_receive(double phase, double eta);

/// Returns a copy with rate_correction incremented by delta. The engine
/// applies the new period from the next tick onward. Throws std::range_error
/// if the resulting effective period would not be positive.
LiveClockState apply_rate_command(const LiveClockState& clock, double delta);

enum class DriftKind { none, constant_offset, random_walk };

struct DriftModel {
  DriftKind kind = DriftKind::none;
  double fractional_offset = 0.0;  // constant_offset
  double step_sigma = 0.0;         // random_walk, per cycle
  std::uint64_t seed = 0;
};

// Per-cycle fractional period perturbation.
//
// random_walk keeps y_0 = 0 and y_{k+1} = y_k + step_sigma * g_k, with g_k a
// standard normal deviate produced by the Box-Muller cosine branch from two
// 53-bit uniforms drawn off std::mt19937_64. The generator is seeded through
// std::seed_seq{model.seed, stream}. Every piece of that chain is fully
// specified by the standard, so sequences are identical across platforms.
class DriftProcess {
 public:
  explicit DriftProcess(const DriftModel& model, std::uint64_t stream = 0);

  /// Perturbation for the next cycle.
  double next();

 private:
  DriftModel model_;
  std::mt19937_64 rng_;
  double walk_ = 0.0;
};

/// Standard normal deviate from a 64-bit Mersenne Twister, platform stable.
double standard_normal(std::mt19937_64& rng);

// Tick bookkeeping for one live clock in coordinate time.
//
// The clock sits at tick `cycle()` which happened at `tick_time()`, and the
// current cycle lasts `period()`. Tick times are computed from the last period
// change (the anchor) rather than by repeated addition, so a clock with a
// constant period reproduces reading_at exactly.
class TickingClock {
 public:
  TickingClock(double epoch, double first_period);

  std::int64_t cycle() const { return cycle_; }
  double tick_time() const { return tick_time_; }
  double period() const { return period_; }
  double next_tick_time() const;

  /// Moves to the next tick; the cycle that starts there lasts next_period.
  void advance(double next_period);

  /// Reading at coordinate time t, extrapolating the current period.
  ClockReading reading(double t) const;

 private:
  std::int64_t cycle_ = 0;
  double tick_time_;
  double period_;
  std::int64_t anchor_cycle_ = 0;
  double anchor_time_;
};

}  // namespace liveclock
