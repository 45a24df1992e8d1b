#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "mpdccp/scenario.hpp"

namespace mpdccp {
namespace {

using nlohmann::json;

json minimal() {
  return json::parse(R"({
    "name": "minimal",
    "duration_s": 10,
    "paths": [{"id": 0, "latency_ms": 10, "bandwidth_mbps": 10}],
    "traffic": {"kind": "cbr", "rate_mbps": 1, "packet_size": 1000},
    "scheduler": {"kind": "round_robin"},
    "reorder": {"kind": "none"}
  })");
}

std::vector<std::string> errors_for(const json& doc) {
  try {
    parse_scenario(doc.dump());
  } catch (const ValidationError& e) {
    return e.errors();
  }
  return {};
}

bool mentions(const std::vector<std::string>& errors, std::string_view needle) {
  return std::any_of(errors.begin(), errors.end(),
                     [&](const std::string& e) { return e.find(needle) != std::string::npos; });
}

TEST(Scenario, MinimalFileLoads) {
  const auto cfg = parse_scenario(minimal().dump());
  EXPECT_EQ(cfg.name, "minimal");
  EXPECT_EQ(cfg.duration, 10 * kSecond);
  ASSERT_EQ(cfg.paths.size(), 1u);
  EXPECT_EQ(cfg.paths[0].one_way_latency, 10 * kMillisecond);
  EXPECT_EQ(cfg.paths[0].bandwidth_bps, 10'000'000u);
  EXPECT_EQ(cfg.traffic.rate_bps, 1'000'000u);
  EXPECT_EQ(cfg.traffic.stop, 10 * kSecond);
  EXPECT_EQ(cfg.scheduler.kind, SchedulerKind::RoundRobin);
  EXPECT_EQ(cfg.reorder.kind, ReorderKind::None);
  EXPECT_EQ(cfg.seed, 1u);
  EXPECT_EQ(cfg.flow.initial_cwnd, 2u);
  EXPECT_EQ(cfg.flow.initial_ssthresh, 64u);
}

TEST(Scenario, AllZeroWeightsNameTheField) {
  auto doc = minimal();
  doc["paths"].push_back({{"id", 1}, {"latency_ms", 20}, {"bandwidth_mbps", 10}});
  doc["scheduler"] = {{"kind", "fixed_ratio"}, {"weights", {0, 0}}};
  const auto errors = errors_for(doc);
  ASSERT_FALSE(errors.empty());
  EXPECT_TRUE(mentions(errors, "weights"));
}

TEST(Scenario, WeightsMustMatchPathCount) {
  auto doc = minimal();
  doc["scheduler"] = {{"kind", "fixed_ratio"}, {"weights", {1, 2}}};
  EXPECT_TRUE(mentions(errors_for(doc), "weights"));
  doc["scheduler"] = {{"kind", "fixed_ratio"}};
  EXPECT_TRUE(mentions(errors_for(doc), "weights"));
}

TEST(Scenario, PathIdsMustBeDistinctAndDense) {
  auto doc = minimal();
  doc["paths"].push_back({{"id", 0}, {"latency_ms", 20}, {"bandwidth_mbps", 10}});
  EXPECT_TRUE(mentions(errors_for(doc), "duplicate path id 0"));

  doc = minimal();
  doc["paths"][0]["id"] = 3;
  EXPECT_TRUE(mentions(errors_for(doc), "paths: ids must be exactly 0..0"));
}

TEST(Scenario, PathsMayBeListedInAnyOrder) {
  auto doc = minimal();
  doc["paths"] = json::parse(R"([{"id": 1, "latency_ms": 50, "bandwidth_mbps": 1},
                                  {"id": 0, "latency_ms": 10, "bandwidth_mbps": 2}])");
  const auto cfg = parse_scenario(doc.dump());
  EXPECT_EQ(cfg.paths[0].one_way_latency, 10 * kMillisecond);
  EXPECT_EQ(cfg.paths[1].bandwidth_bps, 1'000'000u);
}

TEST(Scenario, UnknownKeysAreRejectedWherever) {
  auto doc = minimal();
  doc["colour"] = "blue";
  doc["paths"][0]["jitter_ms"] = 3;
  doc["reorder"]["threshold"] = 5;
  const auto errors = errors_for(doc);
  EXPECT_TRUE(mentions(errors, "colour"));
  EXPECT_TRUE(mentions(errors, "paths[0].jitter_ms"));
  EXPECT_TRUE(mentions(errors, "reorder.threshold"));
}

TEST(Scenario, MissingRequiredKeys) {
  auto doc = minimal();
  doc.erase("duration_s");
  doc["paths"][0].erase("bandwidth_mbps");
  doc["traffic"].erase("rate_mbps");
  const auto errors = errors_for(doc);
  EXPECT_TRUE(mentions(errors, "duration_s"));
  EXPECT_TRUE(mentions(errors, "paths[0].bandwidth_mbps"));
  EXPECT_TRUE(mentions(errors, "traffic.rate_mbps"));
}

TEST(Scenario, GreedyTrafficNeedsNoRate) {
  auto doc = minimal();
  doc["traffic"] = {{"kind", "greedy"}, {"packet_size", 1200}};
  const auto cfg = parse_scenario(doc.dump());
  EXPECT_EQ(cfg.traffic.kind, TrafficKind::Greedy);
  EXPECT_EQ(cfg.traffic.packet_size, 1200u);
}

TEST(Scenario, EveryProblemIsReportedAtOnce) {
  auto doc = minimal();
  doc["duration_s"] = -1;
  doc["paths"][0]["loss_rate"] = 2.0;
  doc["scheduler"]["kind"] = "fastest";
  doc["reorder"]["kind"] = "psychic";
  doc["outputs"] = json::parse(R"([{"metric": "vibes", "path": "x.csv"},
                                   {"metric": "pdv", "format": "xml", "path": "x.csv"}])");
  const auto errors = errors_for(doc);
  EXPECT_GE(errors.size(), 6u);
  EXPECT_TRUE(mentions(errors, "duration_s"));
  EXPECT_TRUE(mentions(errors, "loss_rate"));
  EXPECT_TRUE(mentions(errors, "fastest"));
  EXPECT_TRUE(mentions(errors, "psychic"));
  EXPECT_TRUE(mentions(errors, "vibes"));
  EXPECT_TRUE(mentions(errors, "outputs[1].format"));
  EXPECT_TRUE(mentions(errors, "already used"));
}

TEST(Scenario, OutputPathsStayInsideTheOutputDirectory) {
  auto doc = minimal();
  doc["outputs"] = json::parse(R"([{"metric": "pdv", "path": "../escape.csv"}])");
  EXPECT_TRUE(mentions(errors_for(doc), "outputs[0].path"));
  doc["outputs"] = json::parse(R"([{"metric": "pdv", "path": "/tmp/abs.csv"}])");
  EXPECT_TRUE(mentions(errors_for(doc), "outputs[0].path"));
}

TEST(Scenario, MalformedJsonIsAValidationError) {
  EXPECT_THROW(parse_scenario("{ not json"), ValidationError);
  EXPECT_THROW(parse_scenario("[]"), ValidationError);
}

TEST(Scenario, LoadsFromDiskAndReportsMissingFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "mpdccp_scenario_test";
  std::filesystem::create_directories(dir);
  const auto file = dir / "minimal.json";
  std::ofstream(file) << minimal().dump(2);
  EXPECT_EQ(load_scenario(file).name, "minimal");
  EXPECT_THROW(load_scenario(dir / "nope.json"), ValidationError);
  std::filesystem::remove_all(dir);
}

TEST(Scenario, SerializationRoundTrips) {
  for (const auto& canned : canned_scenarios()) {
    const auto cfg = parse_scenario(canned.json);
    const std::string once = scenario_to_json(cfg);
    EXPECT_EQ(scenario_to_json(parse_scenario(once)), once) << canned.name;
  }
}

TEST(Scenario, CannedScenariosAllLoad) {
  const auto& all = canned_scenarios();
  EXPECT_GE(all.size(), 10u);
  for (const auto& c : all) {
    const auto cfg = canned_scenario(c.name);
    EXPECT_EQ(cfg.name, c.name);
    EXPECT_FALSE(cfg.outputs.empty()) << c.name;
  }
  EXPECT_THROW(canned_scenario("no-such-scenario"), std::invalid_argument);
  EXPECT_EQ(canned_scenario("otias-moderate").traffic.rate_bps, 1'500'000u);
}

TEST(Plugins, TextListingNamesEveryModule) {
  const std::string text = list_plugins(false);
  for (const char* name : {"otias", "srtt", "round_robin", "fixed_ratio", "cheapest_pipe_first", "static",
                           "adaptive", "delay_equalize", "none"}) {
    EXPECT_NE(text.find(name), std::string::npos) << name;
  }
}

TEST(Plugins, JsonListingIsAnArray) {
  const json doc = json::parse(list_plugins(true));
  ASSERT_TRUE(doc.is_array());
  std::vector<std::string> names;
  for (const auto& entry : doc) names.push_back(entry.at("name").get<std::string>());
  EXPECT_EQ(names.size(), 9u);
  for (const char* name : {"otias", "delay_equalize", "none"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), name), names.end()) << name;
  }
}

}  // namespace
}  // namespace mpdccp
