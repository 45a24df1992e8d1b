#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "mpdccp/reorder.hpp"

namespace mpdccp {

namespace {

constexpr std::array<std::pair<ReorderKind, std::string_view>, 4> kReorderNames{{
    {ReorderKind::None, "none"},
    {ReorderKind::Static, "static"},
    {ReorderKind::Adaptive, "adaptive"},
    {ReorderKind::DelayEqualize, "delay_equalize"},
}};

Duration scaled(double k, Duration value) {
  return static_cast<Duration>(std::llround(k * static_cast<double>(value)));
}

}  // namespace

std::string_view to_string(ReorderKind kind) {
  for (const auto& [k, name] : kReorderNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<ReorderKind> parse_reorder_kind(std::string_view name) {
  for (const auto& [k, n] : kReorderNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

std::string_view to_string(Disposition disposition) {
  switch (disposition) {
    case Disposition::InOrder:
      return "inorder";
    case Disposition::Timeout:
      return "timeout";
    case Disposition::Late:
      return "late";
    case Disposition::Discarded:
      return "discarded";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

PathStats::PathStats(std::size_t n_paths) : entries_(n_paths) {}

void PathStats::observe(PathId path, std::uint32_t reported_rtt) {
  if (reported_rtt == 0) return;
  Entry& e = entries_.at(path);
  const auto sample = static_cast<Duration>(reported_rtt);
  e.reported = sample;
  if (e.samples++ == 0) {
    e.srtt = sample;
    e.rttvar = sample / 2;
    return;
  }
  const Duration deviation = e.srtt > sample ? e.srtt - sample : sample - e.srtt;
  e.rttvar = (3 * e.rttvar + deviation) / 4;
  e.srtt = (7 * e.srtt + sample) / 8;
}

std::size_t PathStats::sampled_paths() const {
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(), [](const Entry& e) { return e.samples > 0; }));
}

Duration static_threshold(Duration rtt_slower, Duration rtt_faster) {
  return std::max<Duration>(rtt_slower - rtt_faster, 0);
}

Duration adaptive_threshold(const PathStats& stats, double k, Duration max_hold) {
  if (stats.size() < 2 || stats.sampled_paths() < stats.size()) return max_hold;
  Duration lo = stats.reported_rtt(0);
  Duration hi = lo;
  Duration var = 0;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const auto p = static_cast<PathId>(i);
    lo = std::min(lo, stats.reported_rtt(p));
    hi = std::max(hi, stats.reported_rtt(p));
    var = std::max(var, stats.rtt_variation(p));
  }
  return std::min(static_threshold(hi, lo) / 2 + scaled(k, var), max_hold);
}

// ---------------------------------------------------------------------------

void ReorderBuffer::release_consecutive(SimTime now, std::vector<Delivery>& out) {
  for (auto it = held_.find(expected_); it != held_.end(); it = held_.find(expected_)) {
    out.push_back(Delivery{it->second.packet, now, Disposition::InOrder});
    held_.erase(it);
    ++expected_;
  }
}

std::vector<Delivery> ReorderBuffer::on_arrival(const ReceivedPacket& packet, SimTime now,
                                                Duration threshold) {
  std::vector<Delivery> out;
  if (packet.seq < expected_ || held_.contains(packet.seq)) {
    out.push_back(Delivery{packet, now, Disposition::Late});
    return out;
  }
  if (packet.seq == expected_) {
    out.push_back(Delivery{packet, now, Disposition::InOrder});
    ++expected_;
    release_consecutive(now, out);
    return out;
  }
  const SimTime deadline = now + std::max<Duration>(threshold, 0);
  held_.emplace(packet.seq, Held{packet, deadline});
  deadlines_.emplace(deadline, packet.seq);
  return out;
}

std::vector<Delivery> ReorderBuffer::on_deadline(SimTime now) {
  std::vector<Delivery> out;
  std::optional<std::uint64_t> highest_expired;
  while (!deadlines_.empty() && deadlines_.begin()->first <= now) {
    const std::uint64_t seq = deadlines_.begin()->second;
    deadlines_.erase(deadlines_.begin());
    if (held_.contains(seq)) highest_expired = std::max(highest_expired.value_or(seq), seq);
  }
  if (!highest_expired) return out;

  while (!held_.empty() && held_.begin()->first <= *highest_expired) {
    auto it = held_.begin();
    if (it->first > expected_) {
      ++gap_count_;
      skipped_seqs_ += it->first - expected_;
    }
    out.push_back(Delivery{it->second.packet, now, Disposition::Timeout});
    expected_ = it->first + 1;
    held_.erase(it);
  }
  release_consecutive(now, out);

  // Deadlines of packets released early stay in the index; drop them lazily.
  while (!deadlines_.empty() && !held_.contains(deadlines_.begin()->second)) {
    deadlines_.erase(deadlines_.begin());
  }
  return out;
}

std::optional<SimTime> ReorderBuffer::next_deadline() const {
  for (const auto& [deadline, seq] : deadlines_) {
    if (held_.contains(seq)) return deadline;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

DelayEqualizer::DelayEqualizer(std::size_t n_paths, double k, Duration max_hold)
    : lines_(n_paths), k_(k), max_hold_(max_hold) {}

Duration DelayEqualizer::target_delay(const PathStats& stats) const {
  Duration slowest = 0;
  Duration var = 0;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const auto p = static_cast<PathId>(i);
    if (!stats.has_sample(p)) continue;
    slowest = std::max(slowest, stats.reported_rtt(p));
    var = std::max(var, stats.rtt_variation(p));
  }
  return slowest / 2 + scaled(k_, var);
}

Duration DelayEqualizer::added_delay(PathId path, const PathStats& stats) const {
  if (!stats.has_sample(path)) return 0;
  const Duration d = target_delay(stats) - stats.reported_rtt(path) / 2;
  return std::clamp<Duration>(d, 0, max_hold_);
}

DelayEqualizer::Decision DelayEqualizer::on_arrival(const ReceivedPacket& packet, SimTime now,
                                                    const PathStats& stats) {
  Line& line = lines_.at(packet.path_id);
  ++line.arrived;

  Decision decision;
  decision.added_delay = added_delay(packet.path_id, stats);
  decision.release = std::max(now + decision.added_delay, line.last_release);

  // A packet whose slot in the equalized stream is already further back than
  // the target delay plus the hold cap arrived too late to be useful.
  if (latest_release_ - decision.release > target_delay(stats) + max_hold_) {
    decision.discarded = true;
    ++line.discarded;
    return decision;
  }
  line.last_release = decision.release;
  latest_release_ = std::max(latest_release_, decision.release);
  line.fifo.emplace_back(packet, decision.release);
  return decision;
}

std::vector<Delivery> DelayEqualizer::release_due(SimTime now) {
  std::vector<Delivery> out;
  while (true) {
    Line* best = nullptr;
    for (auto& line : lines_) {
      if (line.fifo.empty() || line.fifo.front().second > now) continue;
      if (!best || line.fifo.front().second < best->fifo.front().second) best = &line;
    }
    if (!best) break;
    auto [packet, release] = best->fifo.front();
    best->fifo.pop_front();
    ++best->released;
    out.push_back(Delivery{packet, release, Disposition::InOrder});
  }
  return out;
}

std::optional<SimTime> DelayEqualizer::next_release() const {
  std::optional<SimTime> next;
  for (const auto& line : lines_) {
    if (line.fifo.empty()) continue;
    if (!next || line.fifo.front().second < *next) next = line.fifo.front().second;
  }
  return next;
}

}  // namespace mpdccp
