#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "mpdccp/scenario.hpp"

namespace mpdccp {

using nlohmann::json;

namespace {

std::string join_errors(const std::vector<std::string>& errors) {
  std::string out = "invalid scenario:";
  for (const auto& e : errors) out += "\n  " + e;
  return out;
}

Duration from_ms(double ms) { return static_cast<Duration>(std::llround(ms * 1000.0)); }
Duration from_s(double s) { return static_cast<Duration>(std::llround(s * 1e6)); }
std::uint64_t from_mbps(double mbps) { return static_cast<std::uint64_t>(std::llround(mbps * 1e6)); }
double to_ms(Duration us) { return static_cast<double>(us) / 1000.0; }
double to_s(Duration us) { return static_cast<double>(us) / 1e6; }
double to_mbps(std::uint64_t bps) { return static_cast<double>(bps) / 1e6; }

// Reads one JSON object, recording problems instead of throwing.
class ObjectReader {
 public:
  ObjectReader(const json& node, std::string where, std::vector<std::string>& errors,
               std::initializer_list<std::string_view> allowed)
      : node_(node), where_(std::move(where)), errors_(errors) {
    if (!node_.is_object()) {
      fail("", "must be a JSON object");
      ok_ = false;
      return;
    }
    for (const auto& [key, _] : node_.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        fail(key, "unknown key");
      }
    }
  }

  bool ok() const { return ok_; }

  bool has(std::string_view key) const { return ok_ && node_.contains(key); }

  const json* child(std::string_view key, bool required) {
    if (!ok_) return nullptr;
    const auto it = node_.find(key);
    if (it == node_.end()) {
      if (required) fail(key, "missing required key");
      return nullptr;
    }
    return &*it;
  }

  std::optional<double> number(std::string_view key, bool required) {
    const json* v = child(key, required);
    if (!v) return std::nullopt;
    if (!v->is_number()) {
      fail(key, "must be a number");
      return std::nullopt;
    }
    return v->get<double>();
  }

  std::optional<std::uint64_t> unsigned_int(std::string_view key, bool required) {
    const json* v = child(key, required);
    if (!v) return std::nullopt;
    if (!v->is_number_unsigned()) {
      fail(key, "must be a non-negative integer");
      return std::nullopt;
    }
    return v->get<std::uint64_t>();
  }

  std::optional<std::string> string(std::string_view key, bool required) {
    const json* v = child(key, required);
    if (!v) return std::nullopt;
    if (!v->is_string()) {
      fail(key, "must be a string");
      return std::nullopt;
    }
    return v->get<std::string>();
  }

  const json* array(std::string_view key, bool required) {
    const json* v = child(key, required);
    if (v && !v->is_array()) {
      fail(key, "must be an array");
      return nullptr;
    }
    return v;
  }

  std::string path(std::string_view key) const {
    if (key.empty()) return where_;
    return where_.empty() ? std::string(key) : where_ + "." + std::string(key);
  }

  void fail(std::string_view key, std::string_view message) {
    errors_.push_back(path(key) + ": " + std::string(message));
  }

 private:
  const json& node_;
  std::string where_;
  std::vector<std::string>& errors_;
  bool ok_ = true;
};

struct ParsedPath {
  PathModel model;
  bool has_cost = false;
};

ParsedPath parse_path(const json& node, const std::string& where, std::vector<std::string>& errors) {
  ParsedPath parsed;
  ObjectReader r(node, where, errors,
                 {"id", "latency_ms", "bandwidth_mbps", "loss_rate", "cost", "events"});
  if (!r.ok()) return parsed;
  if (auto id = r.unsigned_int("id", true)) {
    if (*id > 255) r.fail("id", "must be <= 255");
    parsed.model.id = static_cast<PathId>(*id);
  }
  if (auto v = r.number("latency_ms", true)) parsed.model.one_way_latency = from_ms(*v);
  if (auto v = r.number("bandwidth_mbps", true)) {
    if (*v <= 0) r.fail("bandwidth_mbps", "must be > 0");
    parsed.model.bandwidth_bps = *v > 0 ? from_mbps(*v) : 0;
  }
  if (auto v = r.number("loss_rate", false)) parsed.model.loss_rate = *v;
  if (auto v = r.number("cost", false)) {
    parsed.model.cost = *v;
    parsed.has_cost = true;
  }
  if (const json* events = r.array("events", false)) {
    for (std::size_t i = 0; i < events->size(); ++i) {
      ObjectReader e((*events)[i], r.path("events") + "[" + std::to_string(i) + "]", errors,
                     {"at_s", "latency_ms"});
      if (!e.ok()) continue;
      LatencyEvent ev;
      if (auto v = e.number("at_s", true)) ev.at = from_s(*v);
      if (auto v = e.number("latency_ms", true)) ev.latency = from_ms(*v);
      parsed.model.events.push_back(ev);
    }
  }
  return parsed;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> errors)
    : std::runtime_error(join_errors(errors)), errors_(std::move(errors)) {}

const std::vector<std::string>& known_metrics() {
  static const std::vector<std::string> kMetrics = {
      "arrivals", "decisions", "deliveries", "headers", "order",
      "pdv",      "pdv_histogram", "pdv_raw", "srtt",   "throughput",
  };
  return kMetrics;
}

std::vector<std::string> validate(const ScenarioConfig& config) {
  std::vector<std::string> errors;
  if (config.duration <= 0) errors.push_back("duration_s: must be > 0");
  if (config.drain < 0) errors.push_back("drain_s: must be >= 0");
  if (config.paths.empty()) errors.push_back("paths: at least one path is required");
  for (std::size_t i = 0; i < config.paths.size(); ++i) {
    if (config.paths[i].id != i) {
      errors.push_back(fmt::format("paths: ids must be exactly 0..{} (found {} at position {})",
                                   config.paths.size() - 1, config.paths[i].id, i));
      break;
    }
  }
  for (const auto& p : config.paths) {
    for (auto& e : validate(p)) errors.push_back("paths: " + e);
  }

  const auto& t = config.traffic;
  if (t.packet_size == 0 || t.packet_size > 65535) {
    errors.push_back("traffic.packet_size: must lie in [1, 65535]");
  }
  if (t.kind == TrafficKind::Cbr && t.rate_bps == 0) errors.push_back("traffic.rate_mbps: must be > 0");
  if (t.start < 0) errors.push_back("traffic.start_s: must be >= 0");
  if (t.stop < t.start) errors.push_back("traffic.stop_s: must not precede start_s");

  const std::size_t n = config.paths.size();
  const auto& s = config.scheduler;
  if (s.kind == SchedulerKind::FixedRatio) {
    if (s.weights.size() != n) {
      errors.push_back(fmt::format("scheduler.weights: need one weight per path ({} paths, {} weights)",
                                   n, s.weights.size()));
    } else if (std::all_of(s.weights.begin(), s.weights.end(), [](auto w) { return w == 0; })) {
      errors.push_back("scheduler.weights: must not all be zero");
    }
  }
  if (s.kind == SchedulerKind::CheapestPipeFirst && s.costs.size() != n) {
    errors.push_back("scheduler.costs: cheapest_pipe_first needs a cost for every path");
  }
  for (double c : s.costs) {
    if (!(c >= 0.0)) {
      errors.push_back("scheduler.costs: must be >= 0");
      break;
    }
  }

  const auto& r = config.reorder;
  if (r.static_threshold < 0) errors.push_back("reorder.static_threshold_ms: must be >= 0");
  if (!(r.adaptive_k > 0.0)) errors.push_back("reorder.adaptive_k: must be > 0");
  if (r.max_hold <= 0) errors.push_back("reorder.max_hold_ms: must be > 0");
  if (r.kind == ReorderKind::Static && r.static_threshold > r.max_hold) {
    errors.push_back("reorder.max_hold_ms: must be >= static_threshold_ms");
  }

  if (config.flow.initial_cwnd == 0) errors.push_back("flow.initial_cwnd: must be >= 1");
  if (config.flow.max_cwnd != 0 && config.flow.max_cwnd < config.flow.initial_cwnd) {
    errors.push_back("flow.max_cwnd: must be 0 (unbounded) or >= initial_cwnd");
  }

  std::set<std::string> seen_paths;
  for (std::size_t i = 0; i < config.outputs.size(); ++i) {
    const auto& o = config.outputs[i];
    const std::string where = "outputs[" + std::to_string(i) + "]";
    const auto& metrics = known_metrics();
    if (std::find(metrics.begin(), metrics.end(), o.metric) == metrics.end()) {
      errors.push_back(where + ".metric: unknown metric \"" + o.metric + "\"");
    }
    if (o.format != "csv" && o.format != "json") {
      errors.push_back(where + ".format: must be \"csv\" or \"json\"");
    }
    const std::filesystem::path p(o.path);
    if (o.path.empty() || p.is_absolute() || o.path.find("..") != std::string::npos) {
      errors.push_back(where + ".path: must be a non-empty relative path inside the output directory");
    }
    if (o.path == "summary.json" || !seen_paths.insert(o.path).second) {
      errors.push_back(where + ".path: \"" + o.path + "\" is already used");
    }
  }
  return errors;
}

ScenarioConfig parse_scenario(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError({std::string("malformed JSON: ") + e.what()});
  }

  std::vector<std::string> errors;
  ScenarioConfig cfg;
  ObjectReader top(root, "", errors,
                   {"name", "description", "duration_s", "seed", "drain_s", "paths", "traffic",
                    "scheduler", "reorder", "flow", "pdv_source", "outputs"});
  if (!top.ok()) throw ValidationError(errors);

  if (auto v = top.string("name", true)) cfg.name = *v;
  if (auto v = top.string("description", false)) cfg.description = *v;
  if (auto v = top.number("duration_s", true)) cfg.duration = from_s(*v);
  if (auto v = top.unsigned_int("seed", false)) cfg.seed = *v;
  if (auto v = top.number("drain_s", false)) cfg.drain = from_s(*v);

  std::vector<bool> path_has_cost;
  std::set<unsigned> ids;
  if (const json* paths = top.array("paths", true)) {
    for (std::size_t i = 0; i < paths->size(); ++i) {
      auto parsed = parse_path((*paths)[i], "paths[" + std::to_string(i) + "]", errors);
      if (!ids.insert(parsed.model.id).second) {
        errors.push_back(fmt::format("paths[{}].id: duplicate path id {}", i, parsed.model.id));
      }
      cfg.paths.push_back(std::move(parsed.model));
      path_has_cost.push_back(parsed.has_cost);
    }
  }
  // Sort by id so that vector index == path id; validate() reports holes.
  {
    std::vector<std::size_t> order(cfg.paths.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return cfg.paths[a].id < cfg.paths[b].id; });
    std::vector<PathModel> sorted;
    std::vector<bool> sorted_cost;
    for (auto i : order) {
      sorted.push_back(cfg.paths[i]);
      sorted_cost.push_back(path_has_cost[i]);
    }
    cfg.paths = std::move(sorted);
    path_has_cost = std::move(sorted_cost);
  }

  if (const json* node = top.child("traffic", true)) {
    ObjectReader t(*node, "traffic", errors,
                   {"kind", "rate_mbps", "packet_size", "start_s", "stop_s"});
    if (t.ok()) {
      if (auto kind = t.string("kind", true)) {
        if (*kind == "cbr") {
          cfg.traffic.kind = TrafficKind::Cbr;
        } else if (*kind == "greedy") {
          cfg.traffic.kind = TrafficKind::Greedy;
        } else {
          t.fail("kind", "must be \"cbr\" or \"greedy\"");
        }
      }
      if (auto v = t.number("rate_mbps", cfg.traffic.kind == TrafficKind::Cbr)) {
        if (*v <= 0) t.fail("rate_mbps", "must be > 0");
        cfg.traffic.rate_bps = *v > 0 ? from_mbps(*v) : 0;
      }
      if (auto v = t.unsigned_int("packet_size", true)) {
        cfg.traffic.packet_size = static_cast<std::uint32_t>(std::min<std::uint64_t>(*v, 1u << 20));
      }
      if (auto v = t.number("start_s", false)) cfg.traffic.start = from_s(*v);
      cfg.traffic.stop = cfg.duration;
      if (auto v = t.number("stop_s", false)) cfg.traffic.stop = std::min(from_s(*v), cfg.duration);
    }
  }

  if (const json* node = top.child("scheduler", true)) {
    ObjectReader s(*node, "scheduler", errors, {"kind", "weights", "costs"});
    if (s.ok()) {
      if (auto kind = s.string("kind", true)) {
        if (auto k = parse_scheduler_kind(*kind)) {
          cfg.scheduler.kind = *k;
        } else {
          s.fail("kind", "unknown scheduler \"" + *kind + "\"");
        }
      }
      if (const json* w = s.array("weights", cfg.scheduler.kind == SchedulerKind::FixedRatio)) {
        for (const auto& item : *w) {
          if (!item.is_number_unsigned()) {
            s.fail("weights", "entries must be non-negative integers");
            break;
          }
          cfg.scheduler.weights.push_back(static_cast<std::uint32_t>(item.get<std::uint64_t>()));
        }
      }
      if (const json* c = s.array("costs", false)) {
        for (const auto& item : *c) {
          if (!item.is_number()) {
            s.fail("costs", "entries must be numbers");
            break;
          }
          cfg.scheduler.costs.push_back(item.get<double>());
        }
      } else if (!cfg.paths.empty() &&
                 std::all_of(path_has_cost.begin(), path_has_cost.end(), [](bool b) { return b; })) {
        for (const auto& p : cfg.paths) cfg.scheduler.costs.push_back(p.cost);
      }
    }
  }

  if (const json* node = top.child("reorder", false)) {
    ObjectReader r(*node, "reorder", errors,
                   {"kind", "static_threshold_ms", "adaptive_k", "max_hold_ms"});
    if (r.ok()) {
      if (auto kind = r.string("kind", true)) {
        if (auto k = parse_reorder_kind(*kind)) {
          cfg.reorder.kind = *k;
        } else {
          r.fail("kind", "unknown reorder module \"" + *kind + "\"");
        }
      }
      if (auto v = r.number("adaptive_k", false)) cfg.reorder.adaptive_k = *v;
      if (auto v = r.number("max_hold_ms", false)) cfg.reorder.max_hold = from_ms(*v);
      if (auto v = r.number("static_threshold_ms", false)) {
        cfg.reorder.static_threshold = from_ms(*v);
      } else if (cfg.reorder.kind == ReorderKind::Static && !cfg.paths.empty()) {
        // RTT gap between the slowest and fastest configured path.
        Duration lo = cfg.paths.front().one_way_latency;
        Duration hi = lo;
        for (const auto& p : cfg.paths) {
          lo = std::min(lo, p.one_way_latency);
          hi = std::max(hi, p.one_way_latency);
        }
        cfg.reorder.static_threshold = static_threshold(2 * hi, 2 * lo);
      }
    }
  }

  if (const json* node = top.child("flow", false)) {
    ObjectReader f(*node, "flow", errors,
                   {"initial_cwnd", "initial_ssthresh", "max_cwnd", "min_rto_ms"});
    if (f.ok()) {
      if (auto v = f.unsigned_int("initial_cwnd", false)) cfg.flow.initial_cwnd = static_cast<std::uint32_t>(*v);
      if (auto v = f.unsigned_int("initial_ssthresh", false)) {
        cfg.flow.initial_ssthresh = static_cast<std::uint32_t>(*v);
      }
      if (auto v = f.unsigned_int("max_cwnd", false)) cfg.flow.max_cwnd = static_cast<std::uint32_t>(*v);
      if (auto v = f.number("min_rto_ms", false)) cfg.flow.min_rto = from_ms(*v);
    }
  }

  if (auto v = top.string("pdv_source", false)) {
    if (*v == "application") {
      cfg.pdv_source = PdvSource::Application;
    } else if (*v == "raw") {
      cfg.pdv_source = PdvSource::Raw;
    } else {
      top.fail("pdv_source", "must be \"application\" or \"raw\"");
    }
  }

  if (const json* outputs = top.array("outputs", false)) {
    for (std::size_t i = 0; i < outputs->size(); ++i) {
      ObjectReader o((*outputs)[i], "outputs[" + std::to_string(i) + "]", errors,
                     {"metric", "format", "path"});
      if (!o.ok()) continue;
      OutputSpec spec;
      if (auto v = o.string("metric", true)) spec.metric = *v;
      spec.format = o.string("format", false).value_or("csv");
      if (auto v = o.string("path", true)) spec.path = *v;
      cfg.outputs.push_back(std::move(spec));
    }
  }

  // Semantic checks only make sense once the structure parsed cleanly, but
  // running them anyway reports more at once; skip messages that duplicate
  // a structural error about the same key.
  for (auto& e : validate(cfg)) {
    const auto key = e.substr(0, e.find(':'));
    const bool duplicate = std::any_of(errors.begin(), errors.end(), [&](const std::string& prior) {
      return prior.rfind(key, 0) == 0;
    });
    if (!duplicate) errors.push_back(std::move(e));
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError({"cannot open scenario file " + file.string()});
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

std::string scenario_to_json(const ScenarioConfig& config) {
  json root;
  root["name"] = config.name;
  if (!config.description.empty()) root["description"] = config.description;
  root["duration_s"] = to_s(config.duration);
  root["seed"] = config.seed;
  root["drain_s"] = to_s(config.drain);
  root["paths"] = json::array();
  for (const auto& p : config.paths) {
    json path{{"id", p.id},
              {"latency_ms", to_ms(p.one_way_latency)},
              {"bandwidth_mbps", to_mbps(p.bandwidth_bps)},
              {"loss_rate", p.loss_rate}};
    // A cost on every path implies scheduler costs on reload; the scheduler
    // block already carries them when they matter.
    if (p.cost != 0.0) path["cost"] = p.cost;
    path["events"] = json::array();
    for (const auto& ev : p.events) {
      path["events"].push_back({{"at_s", to_s(ev.at)}, {"latency_ms", to_ms(ev.latency)}});
    }
    root["paths"].push_back(std::move(path));
  }
  json traffic{{"kind", config.traffic.kind == TrafficKind::Cbr ? "cbr" : "greedy"},
               {"packet_size", config.traffic.packet_size},
               {"start_s", to_s(config.traffic.start)},
               {"stop_s", to_s(config.traffic.stop)}};
  if (config.traffic.kind == TrafficKind::Cbr) traffic["rate_mbps"] = to_mbps(config.traffic.rate_bps);
  root["traffic"] = std::move(traffic);
  json scheduler{{"kind", std::string(to_string(config.scheduler.kind))}};
  if (!config.scheduler.weights.empty()) scheduler["weights"] = config.scheduler.weights;
  if (!config.scheduler.costs.empty()) scheduler["costs"] = config.scheduler.costs;
  root["scheduler"] = std::move(scheduler);
  root["reorder"] = {{"kind", std::string(to_string(config.reorder.kind))},
                     {"static_threshold_ms", to_ms(config.reorder.static_threshold)},
                     {"adaptive_k", config.reorder.adaptive_k},
                     {"max_hold_ms", to_ms(config.reorder.max_hold)}};
  root["flow"] = {{"initial_cwnd", config.flow.initial_cwnd},
                  {"initial_ssthresh", config.flow.initial_ssthresh},
                  {"max_cwnd", config.flow.max_cwnd},
                  {"min_rto_ms", to_ms(config.flow.min_rto)}};
  root["pdv_source"] = config.pdv_source == PdvSource::Raw ? "raw" : "application";
  root["outputs"] = json::array();
  for (const auto& o : config.outputs) {
    root["outputs"].push_back({{"metric", o.metric}, {"format", o.format}, {"path", o.path}});
  }
  return root.dump(2) + "\n";
}

ScenarioConfig canned_scenario(std::string_view name) {
  for (const auto& c : canned_scenarios()) {
    if (c.name == name) return parse_scenario(c.json);
  }
  throw std::invalid_argument("no canned scenario named \"" + std::string(name) + "\"");
}

namespace {

struct PluginDoc {
  std::string_view category;
  std::string_view name;
  std::vector<std::string_view> parameters;
  std::string_view description;
};

const std::vector<PluginDoc>& plugin_docs() {
  static const std::vector<PluginDoc> kDocs = [] {
    std::vector<PluginDoc> docs = {
        {"reorder", "adaptive", {"adaptive_k (default 4)", "max_hold_ms (default 500)"},
         "hold out-of-order packets for (max srtt - min srtt)/2 + adaptive_k * max rttvar, "
         "recomputed from the RTT header option on every arrival"},
        {"reorder", "delay_equalize", {"adaptive_k (default 4)", "max_hold_ms (default 500)"},
         "delay each flow so every path presents the slowest path's one-way delay; "
         "sequence numbers are not used and late packets are discarded"},
        {"reorder", "none", {}, "pass packets to the application as they arrive"},
        {"reorder", "static", {"static_threshold_ms (default: RTT of slowest minus fastest path)",
                               "max_hold_ms (default 500)"},
         "hold out-of-order packets for a fixed threshold"},
        {"scheduler", "cheapest_pipe_first", {"costs (per path; defaults to the paths' cost)"},
         "lowest-cost path with congestion window room, else the lowest-cost path"},
        {"scheduler", "fixed_ratio", {"weights (per path, not all zero)"},
         "smooth weighted round robin in the given packet ratio"},
        {"scheduler", "otias", {},
         "path with the smallest estimated arrival time including send-queue wait; "
         "deliberately overloads low-RTT flows"},
        {"scheduler", "round_robin", {}, "paths in turn"},
        {"scheduler", "srtt", {}, "lowest smoothed RTT among paths with window room"},
    };
    std::sort(docs.begin(), docs.end(), [](const PluginDoc& a, const PluginDoc& b) {
      return std::tie(a.category, a.name) < std::tie(b.category, b.name);
    });
    return docs;
  }();
  return kDocs;
}

}  // namespace

std::string list_plugins(bool as_json) {
  if (as_json) {
    json out = json::array();
    for (const auto& d : plugin_docs()) {
      json params = json::array();
      for (auto p : d.parameters) params.push_back(std::string(p));
      out.push_back({{"category", std::string(d.category)},
                     {"name", std::string(d.name)},
                     {"parameters", std::move(params)},
                     {"description", std::string(d.description)}});
    }
    return out.dump(2) + "\n";
  }
  std::string out;
  std::string_view category;
  for (const auto& d : plugin_docs()) {
    if (d.category != category) {
      category = d.category;
      out += fmt::format("{}{}:\n", out.empty() ? "" : "\n", category);
    }
    out += fmt::format("  {:<20} {}\n", d.name, d.description);
    for (auto p : d.parameters) out += fmt::format("  {:<20}   - {}\n", "", p);
  }
  return out;
}

}  // namespace mpdccp
