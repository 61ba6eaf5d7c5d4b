#include "liveclock/channel.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <cmath>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace liveclock {

namespace {

bool phase_in_range(double phase) { return phase > -0.5 && phase <= 0.5; }

}  // namespace

void validate(const RepeatingChannel& ch) {
  if (ch.j < 1 || ch.k < 1) {
    throw std::invalid_argument("repeating channel strides must be >= 1");
  }
  if (!phase_in_range(ch.phi_tx) || !phase_in_range(ch.phi_rx)) {
    throw std::invalid_argument("repeating channel phases must lie in (-1/2, 1/2]");
  }
}

std::vector<ChannelPair> expand_repeating(const RepeatingChannel& ch, std::int64_t l_min,
                                          std::int64_t l_max) {
  if (l_min > l_max) {
    throw std::out_of_range("expand_repeating: l_min > l_max");
  }
  validate(ch);
  std::vector<ChannelPair> pairs;
  pairs.reserve(static_cast<std::size_t>(l_max - l_min + 1));
  for (std::int64_t l = l_min; l <= l_max; ++l) {
    pairs.push_back({ClockReading{ch.m + l * ch.j, ch.phi_tx},
                     ClockReading{ch.n + l * ch.k, ch.phi_rx}, std::nullopt});
  }
  return pairs;
}

bool is_logically_synchronized(std::span<const ChannelPair> pairs, double eta) {
  if (pairs.empty()) {
    throw std::invalid_argument("is_logically_synchronized: empty channel");
  }
  for (const auto& p : pairs) {
    if (!can_receive(p.rx.phase, eta)) return false;
  }
  return true;
}

double echo_count(const EchoRecord& rec) {
  if (rec.tx.phase != 0.0) {
    throw std::invalid_argument("echo_count: probe must be transmitted at phase 0");
  }
  return cycles_between(rec.tx, rec.rx_back);
}

bool check_einstein(double t_a, double t_b, double t_a_prime, double tol) {
  if (tol < 0.0) {
    throw std::invalid_argument("check_einstein: negative tolerance");
  }
  return std::abs(t_b - 0.5 * (t_a + t_a_prime)) <= tol;
}

void write_pairs(std::ostream& out, std::span<const ChannelPair> pairs, std::int64_t first_index) {
  std::int64_t l = first_index;
  for (const auto& p : pairs) {
    fmt::print(out, "{} {} {:.12g} {} {:.12g}\n", l++, p.tx.cycle, p.tx.phase, p.rx.cycle,
               p.rx.phase);
  }
}

std::vector<IndexedPair> read_pairs(std::istream& in) {
  std::vector<IndexedPair> result;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    IndexedPair ip;
    if (!(fields >> ip.index >> ip.pair.tx.cycle >> ip.pair.tx.phase >> ip.pair.rx.cycle >>
          ip.pair.rx.phase)) {
      throw std::runtime_error("read_pairs: malformed line " + std::to_string(line_no));
    }
    result.push_back(ip);
  }
  return result;
}

}  // namespace liveclock
