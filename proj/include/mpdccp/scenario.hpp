#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mpdccp/flow.hpp"
#include "mpdccp/metrics.hpp"
#include "mpdccp/reorder.hpp"
#include "mpdccp/scheduler.hpp"
#include "mpdccp/sim_core.hpp"

namespace mpdccp {

struct OutputSpec {
  std::string metric;
  std::string format;  // "csv" or "json"
  std::string path;    // relative to the output directory
};

struct ScenarioConfig {
  std::string name;
  std::string description;
  Duration duration = 0;
  std::uint64_t seed = 1;
  /// Extra time after the traffic stops for queues to drain.
  Duration drain = 10 * kSecond;
  std::vector<PathModel> paths;  // index == path id
  TrafficSource traffic;
  SchedulerConfig scheduler;
  ReorderConfig reorder;
  FlowConfig flow;
  PdvSource pdv_source = PdvSource::Application;
  std::vector<OutputSpec> outputs;
};

/// Raised when a scenario cannot be loaded; carries every problem found.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

/// Metric names accepted in "outputs".
const std::vector<std::string>& known_metrics();

/// Semantic checks on an assembled config. Empty when valid.
std::vector<std::string> validate(const ScenarioConfig& config);

/// Parses and validates scenario JSON with a strict schema (unknown keys are
/// errors). Throws ValidationError listing all problems.
ScenarioConfig parse_scenario(std::string_view json_text);
ScenarioConfig load_scenario(const std::filesystem::path& file);

/// Serializes a config back to the scenario schema.
std::string scenario_to_json(const ScenarioConfig& config);

struct CannedScenario {
  std::string_view name;
  std::string_view json;
};

/// Scenarios shipped under scenarios/, compiled in.
const std::vector<CannedScenario>& canned_scenarios();
ScenarioConfig canned_scenario(std::string_view name);

/// Alphabetized listing of schedulers and reorder modules with their
/// parameters; a JSON array when `as_json` is set.
std::string list_plugins(bool as_json);

}  // namespace mpdccp
