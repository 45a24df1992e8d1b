#pragma once

// Reference models shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <utility>
#include <vector>

#include "mpdccp/flow.hpp"
#include "mpdccp/reorder.hpp"

namespace mpdccp::oracle {

using ReorderEvent = std::tuple<std::uint64_t, SimTime, Disposition>;

// Arrival i happens at i * spacing and carries order[i]. Walks time one
// microsecond at a time. At each instant, expired holds are flushed
// (everything at or below the highest expired sequence, then any consecutive
// run), the arrival of that instant is handled, and holds that expire on the
// spot are flushed again.
inline std::vector<ReorderEvent> reference_reorder(const std::vector<std::uint64_t>& order,
                                                   Duration threshold, SimTime spacing) {
  std::vector<ReorderEvent> out;
  std::vector<std::pair<std::uint64_t, SimTime>> held;  // (seq, deadline)
  std::uint64_t expected = 0;
  auto take = [&](std::uint64_t seq) {
    auto it = std::find_if(held.begin(), held.end(), [&](auto& h) { return h.first == seq; });
    if (it == held.end()) return false;
    held.erase(it);
    return true;
  };
  auto flush_consecutive = [&](SimTime t) {
    while (take(expected)) out.emplace_back(expected++, t, Disposition::InOrder);
  };
  auto expire = [&](SimTime t) {
    std::optional<std::uint64_t> top;
    for (auto& [seq, deadline] : held) {
      if (deadline <= t) top = std::max(top.value_or(seq), seq);
    }
    if (!top) return;
    std::sort(held.begin(), held.end());
    while (!held.empty() && held.front().first <= *top) {
      out.emplace_back(held.front().first, t, Disposition::Timeout);
      expected = held.front().first + 1;
      held.erase(held.begin());
    }
    flush_consecutive(t);
  };
  const SimTime end = static_cast<SimTime>(order.size()) * spacing + threshold + 1;
  for (SimTime t = 0; t <= end; ++t) {
    expire(t);
    if (t % spacing == 0 && static_cast<std::size_t>(t / spacing) < order.size()) {
      const std::uint64_t seq = order[static_cast<std::size_t>(t / spacing)];
      if (seq < expected) {
        out.emplace_back(seq, t, Disposition::Late);
      } else if (seq == expected) {
        out.emplace_back(expected++, t, Disposition::InOrder);
        flush_consecutive(t);
      } else {
        held.emplace_back(seq, t + threshold);
      }
      expire(t);
    }
  }
  return out;
}

// Drives ReorderBuffer the way the simulation does: deadline events due at
// or before an arrival run before it.
inline std::vector<ReorderEvent> drive_reorder_buffer(const std::vector<std::uint64_t>& order,
                                                      Duration threshold, SimTime spacing) {
  std::vector<ReorderEvent> out;
  ReorderBuffer buf;
  auto record = [&](const std::vector<Delivery>& ds) {
    for (const auto& d : ds) out.emplace_back(d.packet.seq, d.time, d.disposition);
  };
  for (std::size_t i = 0; i < order.size(); ++i) {
    const SimTime t = static_cast<SimTime>(i) * spacing;
    while (auto d = buf.next_deadline()) {
      if (*d > t) break;
      record(buf.on_deadline(*d));
    }
    ReceivedPacket p;
    p.seq = order[i];
    p.arrival = t;
    record(buf.on_arrival(p, t, threshold));
  }
  while (auto d = buf.next_deadline()) record(buf.on_deadline(*d));
  return out;
}

inline constexpr SimTime kOracleSpacing = 10;
inline constexpr Duration kOracleThresholds[] = {0, 5, 10, 25, 35, 1000};

// Calls fn(order, threshold) for every arrival order of 1..6 packets with at
// most one of them lost, under each threshold in kOracleThresholds.
template <typename Fn>
void for_each_small_arrival_order(Fn&& fn) {
  for (std::uint64_t n = 1; n <= 6; ++n) {
    for (std::int64_t lost = -1; lost < static_cast<std::int64_t>(n); ++lost) {
      std::vector<std::uint64_t> order;
      for (std::uint64_t s = 0; s < n; ++s) {
        if (static_cast<std::int64_t>(s) != lost) order.push_back(s);
      }
      do {
        for (Duration threshold : kOracleThresholds) fn(order, threshold);
      } while (std::next_permutation(order.begin(), order.end()));
    }
  }
}

// ---------------------------------------------------------------------------

// Drives a flow over a constant-RTT pipe that drops a scripted set of flow
// sequence numbers, keeping the window full. Ack i arrives at its send time
// plus rtt plus i microseconds so acks never tie.
struct ScriptedAimdRun {
  struct Halving {
    SimTime at;
    std::uint32_t before;
    std::uint32_t after;
  };

  std::map<std::uint64_t, SimTime> send_time;
  std::vector<Halving> halvings;
  std::vector<std::uint32_t> cwnd_trace;  // after each ack
  bool grew_between_halvings_only = true;
  std::int64_t max_in_flight_over_cwnd = -1;

  ScriptedAimdRun(Duration rtt, const std::set<std::uint64_t>& drops, std::uint64_t packets) {
    std::multimap<SimTime, std::uint64_t> pending;  // ack arrival -> flow seq
    Flow* flow_ptr = nullptr;
    Flow flow(0, FlowConfig{}, [&](const TunnelPacket& p, SimTime at) {
      send_time[p.flow_seq] = at;
      max_in_flight_over_cwnd = std::max<std::int64_t>(
          max_in_flight_over_cwnd, static_cast<std::int64_t>(flow_ptr->in_flight()) - flow_ptr->cwnd());
      if (!drops.count(p.flow_seq)) pending.emplace(at + rtt + static_cast<SimTime>(p.flow_seq), p.flow_seq);
    });
    flow_ptr = &flow;
    auto fill = [&](SimTime now) {
      while (flow.next_flow_seq() < packets && flow.in_flight() + flow.queued() < flow.cwnd()) {
        flow.enqueue(TunnelPacket{}, now);
      }
    };
    fill(0);
    while (!pending.empty()) {
      const auto [at, seq] = *pending.begin();
      pending.erase(pending.begin());
      const auto before = flow.cwnd();
      const auto count = flow.halvings();
      flow.on_ack(AckRecord{seq, send_time[seq], at}, at);
      if (flow.halvings() != count) {
        halvings.push_back({at, before, flow.cwnd()});
      } else if (flow.cwnd() < before) {
        grew_between_halvings_only = false;
      }
      cwnd_trace.push_back(flow.cwnd());
      fill(at);
    }
  }
};

// Hand-derived halving instants for ScriptedAimdRun: each drop is noticed
// when the third later delivered packet is acked, and a detection within one
// RTT of the previous halving is absorbed.
inline std::vector<SimTime> expected_halvings(const ScriptedAimdRun& run, Duration rtt,
                                              const std::set<std::uint64_t>& drops) {
  std::vector<SimTime> out;
  SimTime last = -rtt;
  for (auto s : drops) {
    std::uint64_t later = s, delivered = 0;
    while (delivered < 3) {
      ++later;
      if (!drops.count(later)) ++delivered;
    }
    const SimTime detect = run.send_time.at(later) + rtt + static_cast<SimTime>(later);
    if (detect >= last + rtt) {
      out.push_back(detect);
      last = detect;
    }
  }
  return out;
}

}  // namespace mpdccp::oracle
