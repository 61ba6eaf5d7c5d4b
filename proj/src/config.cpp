#include "liveclock/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <vector>

namespace liveclock {

namespace {

// A mapping node together with its key path, for error reporting.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) {
      throw ConfigError(display_path(), "expected a section of keys");
    }
  }

  void allow(std::initializer_list<std::string_view> keys) const {
    if (!node_ || node_.IsNull()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
        throw ConfigError(join(key), "unknown key");
      }
    }
  }

  bool has(std::string_view key) const {
    return node_ && node_.IsMap() && node_[std::string(key)];
  }

  template <typename T>
  T get(std::string_view key, T fallback) const {
    if (!has(key)) return fallback;
    return require<T>(key);
  }

  template <typename T>
  std::optional<T> maybe(std::string_view key) const {
    if (!has(key)) return std::nullopt;
    return require<T>(key);
  }

  template <typename T>
  T require(std::string_view key) const {
    if (!has(key)) throw ConfigError(join(key), "required key is missing");
    const YAML::Node value = node_[std::string(key)];
    if (!value.IsScalar()) throw ConfigError(join(key), "expected a scalar value");
    try {
      return value.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(join(key), "cannot parse '" + value.Scalar() + "'");
    }
  }

  Section child(std::string_view key) const {
    return Section(has(key) ? node_[std::string(key)] : YAML::Node(), join(key));
  }

  std::vector<Section> list(std::string_view key) const {
    std::vector<Section> items;
    if (!has(key)) return items;
    const YAML::Node seq = node_[std::string(key)];
    if (!seq.IsSequence()) throw ConfigError(join(key), "expected a list");
    for (std::size_t i = 0; i < seq.size(); ++i) {
      items.emplace_back(seq[i], join(key) + "[" + std::to_string(i) + "]");
    }
    return items;
  }

  const std::string& path() const { return path_; }

 private:
  std::string join(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }
  std::string display_path() const { return path_.empty() ? "<root>" : path_; }

  YAML::Node node_;
  std::string path_;
};

template <typename E>
E parse_enum(const Section& sec, std::string_view key,
             std::initializer_list<std::pair<std::string_view, E>> names, E fallback) {
  if (!sec.has(key)) return fallback;
  const auto text = sec.require<std::string>(key);
  for (const auto& [name, value] : names) {
    if (name == text) return value;
  }
  std::string expected;
  for (const auto& [name, value] : names) {
    expected += expected.empty() ? "" : ", ";
    expected += name;
  }
  const std::string path = sec.path().empty() ? std::string(key) : sec.path() + "." + std::string(key);
  throw ConfigError(path, "'" + text + "' is not one of: " + expected);
}

DriftModel parse_drift(const Section& sec, const DriftModel& fallback) {
  sec.allow({"kind", "fractional_offset", "step_sigma", "seed"});
  DriftModel d = fallback;
  d.kind = parse_enum<DriftKind>(sec, "kind",
                                 {{"none", DriftKind::none},
                                  {"constant_offset", DriftKind::constant_offset},
                                  {"random_walk", DriftKind::random_walk}},
                                 fallback.kind);
  d.fractional_offset = sec.get<double>("fractional_offset", fallback.fractional_offset);
  d.step_sigma = sec.get<double>("step_sigma", fallback.step_sigma);
  d.seed = sec.get<std::uint64_t>("seed", fallback.seed);
  return d;
}

NodeId parse_node_id(const Section& sec, std::string_view key, std::size_t count) {
  const auto id = sec.require<std::int64_t>(key);
  if (id < 0 || static_cast<std::size_t>(id) >= count) {
    throw ConfigError(sec.path() + "." + std::string(key),
                      "node " + std::to_string(id) + " does not exist");
  }
  return node(static_cast<std::uint32_t>(id));
}

enum class Topology { none, forward_ring, backward_ring, two_way_ring, pair };

ScenarioConfig build(const Section& root) {
  root.allow({"geometry", "clock", "drift", "nodes", "topology", "channels", "delays", "probes",
              "steering", "duration", "seed", "mode", "trace", "estimate"});
  ScenarioConfig cfg;
  Scenario& s = cfg.scenario;

  if (root.has("geometry")) {
    const Section g = root.child("geometry");
    g.allow({"n", "r", "omega", "c"});
    s.geometry = RingGeometry{g.require<int>("n"), g.require<double>("r"),
                              g.get<double>("omega", 0.0), g.get<double>("c", kSpeedOfLight)};
    try {
      validate(*s.geometry);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("geometry", e.what());
    }
  }

  const Section delays = root.child("delays");
  delays.allow({"forward", "backward", "forward_scale", "backward_scale", "jitter_sigma"});
  s.delays.forward = delays.maybe<double>("forward");
  s.delays.backward = delays.maybe<double>("backward");
  s.delays.forward_scale = delays.get<double>("forward_scale", 1.0);
  s.delays.backward_scale = delays.get<double>("backward_scale", 1.0);
  s.delays.jitter_sigma = delays.get<double>("jitter_sigma", 0.0);

  const Section topo = root.child("topology");
  topo.allow({"kind", "nodes", "forward_hops", "backward_hops"});
  const Topology kind = parse_enum<Topology>(topo, "kind",
                                             {{"none", Topology::none},
                                              {"forward_ring", Topology::forward_ring},
                                              {"backward_ring", Topology::backward_ring},
                                              {"two_way_ring", Topology::two_way_ring},
                                              {"pair", Topology::pair}},
                                             Topology::none);
  std::size_t count = 0;
  if (kind == Topology::pair) {
    count = 2;
  } else if (topo.has("nodes")) {
    const auto n = topo.require<int>("nodes");
    if (n < 1) throw ConfigError("topology.nodes", "must be positive");
    count = static_cast<std::size_t>(n);
  } else if (s.geometry) {
    count = static_cast<std::size_t>(s.geometry->n);
  } else {
    throw ConfigError("topology.nodes", "node count needs topology.nodes or geometry.n");
  }

  // Period may be derived from a hop time so that hops span whole cycles.
  auto leg_time = [&](bool forward) {
    const auto& fixed = forward ? s.delays.forward : s.delays.backward;
    if (fixed) return *fixed;
    if (!s.geometry) {
      throw ConfigError(forward ? "delays.forward" : "delays.backward",
                        "needed to derive the clock period (or give geometry)");
    }
    try {
      return forward ? solve_forward_time(*s.geometry) : solve_backward_time(*s.geometry);
    } catch (const NoSolutionError& e) {
      throw ConfigError("geometry.omega", e.what());
    }
  };

  const Section clock = root.child("clock");
  clock.allow({"period", "period_from_forward_hops", "period_from_backward_hops", "eta",
               "rate_correction", "epoch_offset"});
  double period = 0.0;
  if (clock.has("period")) {
    period = clock.require<double>("period");
  } else if (clock.has("period_from_forward_hops")) {
    const auto hops = clock.require<int>("period_from_forward_hops");
    if (hops < 1) throw ConfigError("clock.period_from_forward_hops", "must be positive");
    period = leg_time(true) / hops;
  } else if (clock.has("period_from_backward_hops")) {
    const auto hops = clock.require<int>("period_from_backward_hops");
    if (hops < 1) throw ConfigError("clock.period_from_backward_hops", "must be positive");
    period = leg_time(false) / hops;
  } else {
    throw ConfigError("clock.period", "required key is missing");
  }
  if (!(period > 0.0)) throw ConfigError("clock.period", "must be positive");

  const DriftModel default_drift = parse_drift(root.child("drift"), DriftModel{});
  s.nodes = uniform_nodes(static_cast<int>(count), period, clock.get<double>("eta", kDefaultEta));
  for (auto& n : s.nodes) {
    n.clock.rate_correction = clock.get<double>("rate_correction", 0.0);
    n.clock.epoch_offset = clock.get<double>("epoch_offset", 0.0);
    n.drift = default_drift;
  }
  for (const Section& item : root.list("nodes")) {
    item.allow({"id", "period", "eta", "rate_correction", "epoch_offset", "drift"});
    NodeSpec& n = s.nodes[index_of(parse_node_id(item, "id", count))];
    n.clock.base_period = item.get<double>("period", n.clock.base_period);
    n.clock.eta = item.get<double>("eta", n.clock.eta);
    n.clock.rate_correction = item.get<double>("rate_correction", n.clock.rate_correction);
    n.clock.epoch_offset = item.get<double>("epoch_offset", n.clock.epoch_offset);
    if (item.has("drift")) n.drift = parse_drift(item.child("drift"), n.drift);
  }

  auto hops_of = [&](std::string_view key) {
    const auto hops = topo.require<std::int64_t>(key);
    if (hops < 1) throw ConfigError("topology." + std::string(key), "must be positive");
    return hops;
  };
  const int ring = static_cast<int>(count);
  switch (kind) {
    case Topology::none:
      break;
    case Topology::forward_ring:
      s.channels = as_specs(forward_ring_channels(ring, hops_of("forward_hops")));
      break;
    case Topology::backward_ring:
      s.channels = as_specs(backward_ring_channels(ring, hops_of("backward_hops")));
      break;
    case Topology::two_way_ring: {
      s.channels = as_specs(forward_ring_channels(ring, hops_of("forward_hops")));
      const auto back = as_specs(backward_ring_channels(ring, hops_of("backward_hops")));
      s.channels.insert(s.channels.end(), back.begin(), back.end());
      break;
    }
    case Topology::pair:
      s.channels.push_back(
          {RepeatingChannel{node(0), node(1), 0, hops_of("forward_hops"), 1, 1, 0.0, 0.0},
           std::nullopt});
      break;
  }
  for (const Section& item : root.list("channels")) {
    item.allow({"from", "to", "m", "n", "j", "k", "phi_tx", "phi_rx", "delay"});
    ChannelSpec spec;
    spec.channel.from = parse_node_id(item, "from", count);
    spec.channel.to = parse_node_id(item, "to", count);
    spec.channel.m = item.get<std::int64_t>("m", 0);
    spec.channel.n = item.require<std::int64_t>("n");
    spec.channel.j = item.get<std::int64_t>("j", 1);
    spec.channel.k = item.get<std::int64_t>("k", 1);
    spec.channel.phi_tx = item.get<double>("phi_tx", 0.0);
    spec.channel.phi_rx = item.get<double>("phi_rx", 0.0);
    spec.delay = item.maybe<double>("delay");
    s.channels.push_back(spec);
  }

  for (const Section& item : root.list("probes")) {
    item.allow({"origin", "route", "peer", "start", "every"});
    ProbeSpec p;
    p.origin = parse_node_id(item, "origin", count);
    p.route = parse_enum<ProbeRoute>(item, "route",
                                     {{"echo", ProbeRoute::echo},
                                      {"forward_circuit", ProbeRoute::forward_circuit},
                                      {"backward_circuit", ProbeRoute::backward_circuit}},
                                     ProbeRoute::echo);
    if (p.route == ProbeRoute::echo) p.peer = parse_node_id(item, "peer", count);
    p.start = item.get<std::int64_t>("start", 0);
    p.every = item.get<std::int64_t>("every", 1);
    s.probes.push_back(p);
  }

  const Section steer = root.child("steering");
  steer.allow({"kp", "ki", "slew_limit", "integral_clamp", "tolerance", "revision_window"});
  s.gains.proportional = steer.get<double>("kp", 0.1);
  s.gains.integral = steer.get<double>("ki", 0.01);
  s.slew_limit = steer.get<double>("slew_limit", 1e-3);
  s.integral_clamp = steer.get<double>("integral_clamp", 10.0);
  s.reference = default_reference(s.channels, steer.get<double>("tolerance", 0.05),
                                  steer.get<int>("revision_window", 50));

  s.duration = root.require<std::int64_t>("duration");
  s.seed = root.get<std::uint64_t>("seed", 0);
  s.mode = parse_enum<Mode>(root, "mode",
                            {{"open_loop", Mode::open_loop}, {"steered", Mode::steered}},
                            Mode::open_loop);

  const Section trace = root.child("trace");
  trace.allow({"ticks", "events"});
  s.trace.record_ticks = trace.get<bool>("ticks", false);
  s.trace.record_events = trace.get<bool>("events", true);

  const Section est = root.child("estimate");
  est.allow({"origin", "tolerance"});
  if (est.has("origin")) cfg.estimate.origin = parse_node_id(est, "origin", count);
  cfg.estimate.tolerance = est.get<double>("tolerance", 1e-6);

  try {
    validate(s);
  } catch (const ScenarioError& e) {
    throw ConfigError("<scenario>", e.what());
  } catch (const NoSolutionError& e) {
    throw ConfigError("geometry.omega", e.what());
  }
  return cfg;
}

}  // namespace

ScenarioConfig parse_config(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError("<root>", std::string("syntax error: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("<root>", "expected a section of keys");
  return build(Section(root, ""));
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigIoError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace liveclock
