#include "liveclock/ring.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <cmath>
#include <istream>
#include <numbers>
#include <sstream>
#include <string>

namespace liveclock {

namespace {

constexpr double kPi = std::numbers::pi;

enum class Leg { forward, backward };

double relation(const RingGeometry& g, Leg leg, double t) {
  const double sign = leg == Leg::forward ? 1.0 : -1.0;
  return 2.0 * (g.r / g.c) * std::sin(kPi / g.n + sign * g.omega * t / 2.0) - t;
}

// Root of relation() on (0, hi]. relation(0) > 0 and relation(hi) <= 0 hold
// on the principal branch, and the relation is strictly decreasing there.
double bisect(const RingGeometry& g, Leg leg, double hi) {
  double lo = 0.0;
  if (relation(g, leg, hi) >= 0.0) return hi;
  for (int i = 0; i < 400 && hi - lo > 0.0; ++i) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (relation(g, leg, mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::abs(relation(g, leg, lo)) < std::abs(relation(g, leg, hi)) ? lo : hi;
}

double solve_leg(RingGeometry g, Leg leg) {
  validate(g);
  if (std::abs(g.omega) > diagonal_limit_omega(g)) {
    throw NoSolutionError(fmt::format(
        "no admissible propagation time: |omega| = {:.12g} rad/s exceeds the diagonal limit "
        "{:.12g} rad/s where c T+ / r reaches 2",
        std::abs(g.omega), diagonal_limit_omega(g)));
  }
  if (g.omega < 0.0) {
    g.omega = -g.omega;
    leg = leg == Leg::forward ? Leg::backward : Leg::forward;
  }
  const double hi = leg == Leg::forward ? 2.0 * g.r / g.c : 2.0 * (g.r / g.c) * std::sin(kPi / g.n);
  return bisect(g, leg, hi);
}

void check_arcsine_domain(double x) {
  if (!(x > 0.0 && x <= 1.0)) {
    throw std::invalid_argument(
        fmt::format("c T / 2r = {:.12g} lies outside the arcsine domain (0, 1]", x));
  }
}

}  // namespace

void validate(const RingGeometry& g) {
  if (g.n < 3) throw std::invalid_argument("ring geometry needs n >= 3");
  if (!(g.r > 0.0) || !std::isfinite(g.r)) throw std::invalid_argument("radius must be positive");
  if (!(g.c > 0.0) || !std::isfinite(g.c)) {
    throw std::invalid_argument("signal speed must be positive");
  }
  if (!std::isfinite(g.omega)) throw std::invalid_argument("omega must be finite");
}

double diagonal_limit_omega(const RingGeometry& g) {
  return (g.c / g.r) * (kPi / 2.0 - kPi / g.n);
}

double solve_forward_time(const RingGeometry& g) { return solve_leg(g, Leg::forward); }

double solve_backward_time(const RingGeometry& g) { return solve_leg(g, Leg::backward); }

PropagationSolution solve_propagation(const RingGeometry& g) {
  return {solve_forward_time(g), solve_backward_time(g)};
}

double forward_residual(const RingGeometry& g, double t_forward) {
  return std::abs(g.c * t_forward / g.r - 2.0 * std::sin(kPi / g.n + g.omega * t_forward / 2.0));
}

double backward_residual(const RingGeometry& g, double t_backward) {
  return std::abs(g.c * t_backward / g.r -
                  2.0 * std::sin(kPi / g.n - g.omega * t_backward / 2.0));
}

double omega_from_forward_time(int n, double r, double c, double t_forward) {
  const double x = c * t_forward / (2.0 * r);
  check_arcsine_domain(x);
  return (2.0 / t_forward) * (std::asin(x) - kPi / n);
}

double omega_from_backward_time(int n, double r, double c, double t_backward) {
  const double x = c * t_backward / (2.0 * r);
  check_arcsine_domain(x);
  return (2.0 / t_backward) * (kPi / n - std::asin(x));
}

std::vector<RatioSample> ratio_curve(int n, int samples) {
  if (samples < 2) throw std::invalid_argument("ratio_curve needs at least 2 samples");
  if (n < 3) throw std::invalid_argument("ring geometry needs n >= 3");
  const double start = 2.0 * std::sin(kPi / n);
  const double step = (2.0 - start) / (samples - 1);
  std::vector<RatioSample> curve;
  curve.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    const double x = i == samples - 1 ? 2.0 : start + step * i;
    if (i == 0) {
      // No rotation: both legs are the plain chord.
      curve.push_back({x, 1.0, 0.0});
      continue;
    }
    // Unit r and c make every quantity dimensionless.
    const double omega = omega_from_forward_time(n, 1.0, 1.0, x);
    const double backward = solve_backward_time(RingGeometry{n, 1.0, omega, 1.0});
    curve.push_back({x, backward / x, omega});
  }
  return curve;
}

void write_ratio_csv(std::ostream& out, const std::vector<RatioSample>& samples) {
  out << "cTplus_over_r,ratio,omega_r_over_c\n";
  for (const auto& s : samples) {
    fmt::print(out, "{:.12g},{:.12g},{:.12g}\n", s.forward_scaled, s.ratio, s.omega_scaled);
  }
}

std::vector<RatioSample> read_ratio_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "cTplus_over_r,ratio,omega_r_over_c") {
    throw std::runtime_error("ratio csv: missing header");
  }
  std::vector<RatioSample> samples;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    RatioSample s;
    char comma1 = 0, comma2 = 0;
    if (!(fields >> s.forward_scaled >> comma1 >> s.ratio >> comma2 >> s.omega_scaled) ||
        comma1 != ',' || comma2 != ',') {
      throw std::runtime_error("ratio csv: malformed row '" + line + "'");
    }
    samples.push_back(s);
  }
  return samples;
}

ChainOffsets einstein_chain_offsets(int n, const PropagationSolution& sol) {
  const double step = (sol.backward - sol.forward) / 2.0;
  ChainOffsets out;
  out.offsets.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.offsets.push_back(i * step);
  out.loop_defect = n * step;
  return out;
}

double max_bandwidth(double eta, double t_forward) {
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("eta must lie in (0, 1)");
  if (!(t_forward > 0.0)) throw std::invalid_argument("forward time must be positive");
  return (1.0 - eta) / (2.0 * t_forward);
}

namespace {

std::vector<RepeatingChannel> ring_channels(int n, std::int64_t hops, int step) {
  if (n < 2) throw std::invalid_argument("a ring needs at least two clocks");
  if (hops <= 0) throw std::invalid_argument("hop count must be a positive integer");
  std::vector<RepeatingChannel> channels;
  channels.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int target = ((i + step) % n + n) % n;
    channels.push_back(RepeatingChannel{node(static_cast<std::uint32_t>(i)),
                                        node(static_cast<std::uint32_t>(target)), 0, hops, 1, 1,
                                        0.0, 0.0});
  }
  return channels;
}

}  // namespace

std::vector<RepeatingChannel> forward_ring_channels(int n, std::int64_t hops) {
  return ring_channels(n, hops, +1);
}

std::vector<RepeatingChannel> backward_ring_channels(int n, std::int64_t hops) {
  return ring_channels(n, hops, -1);
}

std::vector<FeasiblePeriods> feasible_two_way_periods(double t_forward, double t_backward,
                                                      std::int64_t max_n, double tol) {
  if (!(t_backward > 0.0) || !(t_forward >= t_backward)) {
    throw std::invalid_argument("feasible periods need T+ >= T- > 0");
  }
  if (max_n < 1) throw std::invalid_argument("max_n must be >= 1");
  if (!(tol >= 0.0)) throw std::invalid_argument("tolerance must be non-negative");

  std::vector<FeasiblePeriods> found;
  // Convergents h/k of T-/T+; h counts backward hops, k forward hops.
  std::int64_t h_prev = 1, h_prev2 = 0;
  std::int64_t k_prev = 0, k_prev2 = 1;
  double x = t_backward / t_forward;
  for (int term = 0; term < 64; ++term) {
    const double a_real = std::floor(x);
    if (a_real > static_cast<double>(max_n)) break;
    const auto a = static_cast<std::int64_t>(a_real);
    const std::int64_t h = a * h_prev + h_prev2;
    const std::int64_t k = a * k_prev + k_prev2;
    if (h > max_n || k > max_n) break;
    if (h >= 1) {
      const double q_forward = t_forward / static_cast<double>(k);
      const double q_backward = t_backward / static_cast<double>(h);
      const double residual = std::abs(q_forward - q_backward);
      if (residual <= tol) {
        found.push_back({k, h, 0.5 * (q_forward + q_backward), residual});
      }
    }
    h_prev2 = h_prev;
    h_prev = h;
    k_prev2 = k_prev;
    k_prev = k;
    const double frac = x - a_real;
    if (frac <= 0.0) break;
    x = 1.0 / frac;
  }
  return found;
}

}  // namespace liveclock
