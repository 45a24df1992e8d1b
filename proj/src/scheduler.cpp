#include <algorithm>
#include <array>
#include <stdexcept>
#include <utility>

#include "mpdccp/scheduler.hpp"

namespace mpdccp {

namespace {

constexpr std::array<std::pair<SchedulerKind, std::string_view>, 5> kSchedulerNames{{
    {SchedulerKind::RoundRobin, "round_robin"},
    {SchedulerKind::FixedRatio, "fixed_ratio"},
    {SchedulerKind::CheapestPipeFirst, "cheapest_pipe_first"},
    {SchedulerKind::Srtt, "srtt"},
    {SchedulerKind::Otias, "otias"},
}};

// Index of the minimum of key(path) over paths satisfying filter; lowest
// index wins ties. Returns nullopt if nothing passes the filter.
template <typename Key, typename Filter>
std::optional<std::size_t> argmin(PathView view, Key key, Filter filter) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < view.size(); ++i) {
    if (!filter(view[i])) continue;
    if (!best || key(view[i]) < key(view[*best])) best = i;
  }
  return best;
}

PathId pick_available_first(PathView view, auto key) {
  if (view.empty()) throw std::invalid_argument("scheduler needs at least one path");
  auto best = argmin(view, key, [](const PathState& p) { return p.available(); });
  if (!best) best = argmin(view, key, [](const PathState&) { return true; });
  return view[*best].id;
}

}  // namespace

std::string_view to_string(SchedulerKind kind) {
  for (const auto& [k, name] : kSchedulerNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<SchedulerKind> parse_scheduler_kind(std::string_view name) {
  for (const auto& [k, n] : kSchedulerNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

Duration otias_eta(const PathState& path) {
  const std::int64_t cwnd = std::max<std::int64_t>(path.cwnd, 1);
  const std::int64_t excess = static_cast<std::int64_t>(path.queued) + path.in_flight + 1 - cwnd;
  const std::int64_t rounds = excess <= 0 ? 0 : (excess + cwnd - 1) / cwnd;
  return rounds * path.srtt + path.srtt / 2;
}

PathId pick_cheapest_pipe_first(PathView view) {
  return pick_available_first(view, [](const PathState& p) { return p.cost; });
}

PathId pick_srtt(PathView view) {
  return pick_available_first(view, [](const PathState& p) { return p.srtt; });
}

PathId pick_otias(PathView view) {
  if (view.empty()) throw std::invalid_argument("scheduler needs at least one path");
  const auto best = argmin(
      view, [](const PathState& p) { return otias_eta(p); }, [](const PathState&) { return true; });
  return view[*best].id;
}

PathId RoundRobin::pick(std::size_t n_paths) {
  if (n_paths == 0) throw std::invalid_argument("round robin needs at least one path");
  const auto chosen = static_cast<PathId>(next_ % n_paths);
  next_ = (next_ % n_paths) + 1;
  return chosen;
}

FixedRatio::FixedRatio(std::vector<std::uint32_t> weights)
    : weights_(std::move(weights)), credit_(weights_.size(), 0) {
  for (auto w : weights_) total_ += w;
  if (total_ == 0) throw std::invalid_argument("fixed ratio weights must not all be zero");
}

PathId FixedRatio::pick() {
  std::size_t best = 0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    credit_[i] += weights_[i];
    if (credit_[i] > credit_[best]) best = i;
  }
  credit_[best] -= total_;
  return static_cast<PathId>(best);
}

Scheduler::Scheduler(SchedulerConfig config) : config_(std::move(config)) {
  if (config_.kind == SchedulerKind::FixedRatio) fixed_ratio_.emplace(config_.weights);
}

PathId Scheduler::pick(PathView view) {
  switch (config_.kind) {
    case SchedulerKind::RoundRobin:
      return round_robin_.pick(view.size());
    case SchedulerKind::FixedRatio:
      return fixed_ratio_->pick();
    case SchedulerKind::CheapestPipeFirst:
      return pick_cheapest_pipe_first(view);
    case SchedulerKind::Srtt:
      return pick_srtt(view);
    case SchedulerKind::Otias:
      return pick_otias(view);
  }
  throw std::logic_error("unhandled scheduler kind");
}

}  // namespace mpdccp
