#pragma once

// Channels between live clocks, viewed purely through timing: each character
// is a pair of readings, the sender's at transmission and the receiver's at
// reception.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "liveclock/clock.hpp"

namespace liveclock {

struct ChannelPair {
  ClockReading tx;
  ClockReading rx;
  // Number carried by the character, typically the sender's reading.
  std::optional<ClockReading> payload;

  friend bool operator==(const ChannelPair&, const ChannelPair&) = default;
};

// Endlessly repeating channel: pair l is (m + l*j + phi_tx, n + l*k + phi_rx).
// Phases do not depend on l; channels whose phases vary per character are
// represented as explicit ChannelPair lists.
struct RepeatingChannel {
  NodeId from{};
  NodeId to{};
  std::int64_t m = 0;
  std::int64_t n = 0;
  std::int64_t j = 1;  // sender stride
  std::int64_t k = 1;  // receiver stride
  double phi_tx = 0.0;
  double phi_rx = 0.0;

  friend bool operator==(const RepeatingChannel&, const RepeatingChannel&) = default;
};

/// Throws std::invalid_argument on non-positive strides or phases outside
/// (-1/2, 1/2].
void validate(const RepeatingChannel& ch);

/// Pairs for l = l_min..l_max inclusive. Throws std::out_of_range when
/// l_min > l_max.
std::vector<ChannelPair> expand_repeating(const RepeatingChannel& ch, std::int64_t l_min,
                                          std::int64_t l_max);

/// True iff every reception phase falls inside the receiver's writing phase.
/// An empty list is rejected with std::invalid_argument rather than accepted
/// vacuously.
bool is_logically_synchronized(std::span<const ChannelPair> pairs, double eta);

// One probe and its returning echo, in the prober's readings.
struct EchoRecord {
  ClockReading tx;       // phase 0 by definition
  ClockReading rx_back;  // prober's reading when the echo arrives
  NodeId origin{};
  NodeId peer{};          // first node the probe reached
  int hops = 2;           // 2 for a plain echo, n for a full ring circuit
  double turnaround = 0;  // relay waiting, in the relays' cycles

  friend bool operator==(const EchoRecord&, const EchoRecord&) = default;
};

/// rx_back - tx in cycles of the prober. Throws std::invalid_argument when the
/// probe was not sent at phase 0.
double echo_count(const EchoRecord& rec);

/// Einstein's criterion: t_B is the midpoint of t_A and t_A_prime, within tol.
/// Throws std::invalid_argument on negative tol.
bool check_einstein(double t_a, double t_b, double t_a_prime, double tol);

// Line format, one pair per line: "l tx_cycle tx_phase rx_cycle rx_phase".
// Phases are printed with 12 significant digits.
void write_pairs(std::ostream& out, std::span<const ChannelPair> pairs, std::int64_t first_index);

struct IndexedPair {
  std::int64_t index = 0;
  ChannelPair pair;
};

/// Parses the line format back. Blank lines and lines starting with '#' are
/// skipped. Throws std::runtime_error on malformed input.
std::vector<IndexedPair> read_pairs(std::istream& in);

}  // namespace liveclock
