#pragma once

// Live clocks on the vertices of a regular n-gon rotating in its plane about
// its centre. Signals to the next vertex in the direction of rotation take
// the forward time T+, signals to the previous vertex the backward time T-:
//
//   c T+ / r = 2 sin(pi/n + omega T+ / 2)
//   c T- / r = 2 sin(pi/n - omega T- / 2)
//
// Both are solved by bracketed bisection. The principal branch ends where the
// forward chord becomes a diameter (c T+ / r = 2); rotation past that limit
// has no admissible solution.

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "liveclock/channel.hpp"

namespace liveclock {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

struct RingGeometry {
  int n = 6;          // polygon sides, >= 3
  double r = 1.0;     // radius, m
  double omega = 0.0; // angular rate, rad/s
  double c = kSpeedOfLight;
};

struct PropagationSolution {
  double forward = 0.0;   // T+, s
  double backward = 0.0;  // T-, s
};

class NoSolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws std::invalid_argument for n < 3 or non-positive r, c.
void validate(const RingGeometry& g);

/// Largest |omega| whose forward solution stays on the principal branch,
/// (c/r)(pi/2 - pi/n).
double diagonal_limit_omega(const RingGeometry& g);

/// Smallest positive root of the forward relation. Throws NoSolutionError past
/// the diagonal limit. Negative omega swaps the roles of the two directions.
double solve_forward_time(const RingGeometry& g);
double solve_backward_time(const RingGeometry& g);
PropagationSolution solve_propagation(const RingGeometry& g);

/// |c T / r - 2 sin(pi/n +- omega T / 2)| for the forward (+) or backward (-)
/// relation.
double forward_residual(const RingGeometry& g, double t_forward);
double backward_residual(const RingGeometry& g, double t_backward);

/// Inversions of the two relations for omega. Throw std::invalid_argument
/// unless 0 < c T / 2r <= 1.
double omega_from_forward_time(int n, double r, double c, double t_forward);
double omega_from_backward_time(int n, double r, double c, double t_backward);

struct RatioSample {
  double forward_scaled = 0.0;  // c T+ / r
  double ratio = 0.0;           // T- / T+
  double omega_scaled = 0.0;    // omega r / c
};

/// Sweeps c T+ / r uniformly from 2 sin(pi/n) (no rotation) to 2 (diagonal
/// limit) and reports the backward/forward ratio and the rotation rate at
/// each point. samples >= 2.
std::vector<RatioSample> ratio_curve(int n, int samples);

/// CSV with header "cTplus_over_r,ratio,omega_r_over_c", 12 significant digits.
void write_ratio_csv(std::ostream& out, const std::vector<RatioSample>& samples);
std::vector<RatioSample> read_ratio_csv(std::istream& in);

struct ChainOffsets {
  std::vector<double> offsets;  // reading minus coordinate time, s
  double loop_defect = 0.0;     // mismatch on closing the chain back to clock 0
};

/// Tick shifts that make each clock Einstein-synchronous to its predecessor
/// around the ring. The defect n (T- - T+)/2 is non-zero whenever the ring
/// rotates.
ChainOffsets einstein_chain_offsets(int n, const PropagationSolution& sol);

/// Upper bound on 1/p for which a forward hop still lands inside the writing
/// phase: (1 - eta) / (2 T+).
double max_bandwidth(double eta, double t_forward);

/// n zero-phase channels i -> i+1 (mod n) with pairs (k, k + hops).
std::vector<RepeatingChannel> forward_ring_channels(int n, std::int64_t hops);
/// n zero-phase channels i -> i-1 (mod n) with pairs (k, k + hops).
std::vector<RepeatingChannel> backward_ring_channels(int n, std::int64_t hops);

struct FeasiblePeriods {
  std::int64_t forward_hops = 0;   // N+
  std::int64_t backward_hops = 0;  // N-
  double period = 0.0;             // p, s
  double residual = 0.0;           // |T+/N+ - T-/N-|, s
};

/// Coprime (N+, N-) with both <= max_n for which one period serves both
/// directions with zero reception phase, to within tol. Candidates are the
/// continued-fraction convergents of T-/T+; each is checked by substitution.
std::vector<FeasiblePeriods> feasible_two_way_periods(double t_forward, double t_backward,
                                                      std::int64_t max_n, double tol);

}  // namespace liveclock
