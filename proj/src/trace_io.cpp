#include <fmt/format.h>
#include <fmt/ostream.h>

#include <array>
#include <istream>
#include <sstream>
#include <string>
#include <utility>

#include "liveclock/engine.hpp"

namespace liveclock {

namespace {

constexpr std::string_view kHeader = "t,node,kind,cycle,phase,payload";
constexpr std::string_view kDroppedSuffix = "_dropped";

constexpr std::array kKinds = {EventKind::tick,        EventKind::transmit,
                               EventKind::receive,     EventKind::echo_return,
                               EventKind::rate_change, EventKind::revision};

EventKind parse_kind(std::string_view text) {
  for (const EventKind k : kKinds) {
    if (to_string(k) == text) return k;
  }
  throw std::runtime_error("trace csv: unknown event kind '" + std::string(text) + "'");
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << kHeader << '\n';
  for (const auto& e : trace.events) {
    std::string payload;
    if (e.payload) payload = fmt::format("{}:{:.12g}", e.payload->cycle, e.payload->phase);
    fmt::print(out, "{:.12g},{},{}{},{},{:.12g},{}\n", e.time, index_of(e.node), to_string(e.kind),
               e.dropped ? kDroppedSuffix : std::string_view{}, e.local.cycle, e.local.phase,
               payload);
  }
}

std::vector<Event> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kHeader) {
    throw std::runtime_error("trace csv: missing header");
  }
  std::vector<Event> events;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != 6) throw std::runtime_error("trace csv: malformed row '" + line + "'");
    Event e;
    try {
      e.time = std::stod(fields[0]);
      e.node = node(static_cast<std::uint32_t>(std::stoul(fields[1])));
      std::string_view kind = fields[2];
      if (kind.ends_with(kDroppedSuffix)) {
        e.dropped = true;
        kind.remove_suffix(kDroppedSuffix.size());
      }
      e.kind = parse_kind(kind);
      e.local.cycle = std::stoll(fields[3]);
      e.local.phase = std::stod(fields[4]);
      if (!fields[5].empty()) {
        const auto colon = fields[5].find(':');
        if (colon == std::string::npos) throw std::runtime_error("payload without ':'");
        e.payload = ClockReading{std::stoll(fields[5].substr(0, colon)),
                                 std::stod(fields[5].substr(colon + 1))};
      }
    } catch (const std::logic_error&) {
      throw std::runtime_error("trace csv: malformed row '" + line + "'");
    }
    events.push_back(std::move(e));
  }
  return events;
}

}  // namespace liveclock
