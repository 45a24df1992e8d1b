#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mpdccp/sim_core.hpp"

namespace mpdccp {

enum class SchedulerKind { RoundRobin, FixedRatio, CheapestPipeFirst, Srtt, Otias };

std::string_view to_string(SchedulerKind kind);
std::optional<SchedulerKind> parse_scheduler_kind(std::string_view name);

struct SchedulerConfig {
  SchedulerKind kind = SchedulerKind::RoundRobin;
  std::vector<std::uint32_t> weights;  // fixed_ratio
  std::vector<double> costs;           // cheapest_pipe_first
};

/// Snapshot of one flow as seen by the scheduler at decision time.
struct PathState {
  PathId id = 0;
  Duration srtt = 0;
  Duration rttvar = 0;
  std::uint32_t cwnd = 1;
  std::uint32_t in_flight = 0;
  std::uint32_t queued = 0;
  double cost = 0.0;

  /// Room in the congestion window for one more packet.
  bool available() const { return in_flight + queued < cwnd; }
};

using PathView = std::span<const PathState>;

/// Estimated time until a packet handed to this flow now reaches the
/// receiver: whole congestion-window rounds spent queued, plus half an RTT
/// of forward delay.
Duration otias_eta(const PathState& path);

PathId pick_cheapest_pipe_first(PathView view);
PathId pick_srtt(PathView view);
PathId pick_otias(PathView view);

class RoundRobin {
 public:
  PathId pick(std::size_t n_paths);

 private:
  std::size_t next_ = 0;
};

/// Smooth weighted round robin. Over any sum(weights) consecutive picks,
/// path i is chosen exactly weights[i] times.
class FixedRatio {
 public:
  explicit FixedRatio(std::vector<std::uint32_t> weights);
  PathId pick();

 private:
  std::vector<std::uint32_t> weights_;
  std::vector<std::int64_t> credit_;
  std::int64_t total_ = 0;
};

/// Dispatches to the configured policy and keeps its counters.
class Scheduler {
 public:
  explicit Scheduler(SchedulerConfig config);

  PathId pick(PathView view);
  SchedulerKind kind() const { return config_.kind; }

 private:
  SchedulerConfig config_;
  RoundRobin round_robin_;
  std::optional<FixedRatio> fixed_ratio_;
};

}  // namespace mpdccp
