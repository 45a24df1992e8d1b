#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mpdccp/metrics.hpp"
#include "mpdccp/scenario.hpp"

namespace mpdccp {

/// Version of the CSV/JSON column layouts documented in the README.
inline constexpr int kOutputSchemaVersion = 1;

using Cell = std::variant<std::int64_t, std::uint64_t, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

/// Builds the export table for one metric name from known_metrics().
/// Throws std::invalid_argument for unknown names.
Table metric_table(const MetricsLog& log, std::string_view metric);

std::string to_csv(const Table& table);
/// Array of row objects keyed by column name.
std::string to_json(const Table& table);

/// Run totals plus PDV statistics, as pretty-printed JSON.
std::string run_summary_json(const MetricsLog& log);

/// I/O failure while writing results; the message names the file.
class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunResult {
  MetricsLog log;
  std::vector<std::filesystem::path> files;  // summary.json first
};

/// Runs the scenario and writes summary.json plus every configured output
/// into `out_dir` (created if missing).
RunResult run_scenario(const ScenarioConfig& config, const std::filesystem::path& out_dir);

/// Runs every canned scenario into out_dir/<name>/, up to `jobs` at once.
/// Returns the scenario names in the order written.
std::vector<std::string> run_paper_suite(const std::filesystem::path& out_dir, unsigned jobs = 1);

}  // namespace mpdccp
