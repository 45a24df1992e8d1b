#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "mpdccp/sim_core.hpp"

namespace mpdccp {

enum class ReorderKind { None, Static, Adaptive, DelayEqualize };

std::string_view to_string(ReorderKind kind);
std::optional<ReorderKind> parse_reorder_kind(std::string_view name);

struct ReorderConfig {
  ReorderKind kind = ReorderKind::None;
  Duration static_threshold = 0;
  double adaptive_k = 4.0;
  Duration max_hold = 500 * kMillisecond;
};

enum class Disposition { InOrder, Timeout, Late, Discarded };

std::string_view to_string(Disposition disposition);

/// A packet as seen by the receiver after header decoding.
struct ReceivedPacket {
  std::uint64_t seq = 0;  // unwrapped overall sequence number
  PathId path_id = 0;
  SimTime arrival = 0;
  std::uint32_t payload_len = 0;
  SimTime ingress_time = 0;  // bookkeeping only; receiver logic never reads it
};

struct Delivery {
  ReceivedPacket packet;
  SimTime time = 0;
  Disposition disposition = Disposition::InOrder;

  Duration residency() const { return time - packet.arrival; }
};

/// Receiver-side RTT knowledge per path, fed by the RTT header option.
///
/// Keeps the last sender-reported SRTT plus a receiver-side EWMA of the
/// reported values (gains 1/8 and 1/4). A report of 0 means the sender had
/// no sample yet and is ignored.
class PathStats {
 public:
  explicit PathStats(std::size_t n_paths);

  void observe(PathId path, std::uint32_t reported_rtt);

  bool has_sample(PathId path) const { return entries_.at(path).samples > 0; }
  Duration reported_rtt(PathId path) const { return entries_.at(path).reported; }
  Duration smoothed_rtt(PathId path) const { return entries_.at(path).srtt; }
  Duration rtt_variation(PathId path) const { return entries_.at(path).rttvar; }
  std::size_t size() const { return entries_.size(); }
  std::size_t sampled_paths() const;

 private:
  struct Entry {
    Duration reported = 0;
    Duration srtt = 0;
    Duration rttvar = 0;
    std::uint64_t samples = 0;
  };
  std::vector<Entry> entries_;
};

/// Hold time covering the RTT gap between the slowest and fastest path.
Duration static_threshold(Duration rtt_slower, Duration rtt_faster);

/// Half the spread of reported SRTTs (one-way skew) plus k times the largest
/// RTT variation, capped at max_hold. Returns max_hold until at least two
/// paths, and every configured path, have reported an RTT.
Duration adaptive_threshold(const PathStats& stats, double k, Duration max_hold);

/// Resequencing buffer over the tunnel-wide sequence space.
///
/// Out-of-order packets wait until either the gap before them fills or their
/// deadline passes. Packets below the expected sequence number are handed on
/// immediately and flagged late.
class ReorderBuffer {
 public:
  explicit ReorderBuffer(std::uint64_t first_expected = 0) : expected_(first_expected) {}

  std::vector<Delivery> on_arrival(const ReceivedPacket& packet, SimTime now, Duration threshold);

  /// Releases every held packet whose deadline has passed, together with all
  /// held packets below the highest expired one, then any consecutive run
  /// that follows.
  std::vector<Delivery> on_deadline(SimTime now);

  std::optional<SimTime> next_deadline() const;
  std::uint64_t expected_next() const { return expected_; }
  std::size_t held() const { return held_.size(); }

  /// Number of sequence gaps given up on by deadline expiry.
  std::uint64_t gap_count() const { return gap_count_; }
  std::uint64_t skipped_seqs() const { return skipped_seqs_; }

 private:
  struct Held {
    ReceivedPacket packet;
    SimTime deadline = 0;
  };

  void release_consecutive(SimTime now, std::vector<Delivery>& out);

  std::uint64_t expected_;
  std::map<std::uint64_t, Held> held_;
  std::multimap<SimTime, std::uint64_t> deadlines_;
  std::uint64_t gap_count_ = 0;
  std::uint64_t skipped_seqs_ = 0;
};

/// Per-flow delay lines that pad faster paths up to the slowest path's
/// one-way delay. Sequence numbers are never consulted.
class DelayEqualizer {
 public:
  DelayEqualizer(std::size_t n_paths, double k, Duration max_hold);

  struct Decision {
    bool discarded = false;
    SimTime release = 0;
    Duration added_delay = 0;
  };

  Decision on_arrival(const ReceivedPacket& packet, SimTime now, const PathStats& stats);

  /// Pops every queued packet with release time <= now, ordered by release
  /// time then path.
  std::vector<Delivery> release_due(SimTime now);
  std::optional<SimTime> next_release() const;

  /// Common end-to-end one-way delay target: max(srtt)/2 + k * max(rttvar).
  Duration target_delay(const PathStats& stats) const;

  /// Padding for one path, clamped to [0, max_hold]. Zero until the path has
  /// reported an RTT.
  Duration added_delay(PathId path, const PathStats& stats) const;

  std::uint64_t arrived(PathId path) const { return lines_.at(path).arrived; }
  std::uint64_t released(PathId path) const { return lines_.at(path).released; }
  std::uint64_t discarded(PathId path) const { return lines_.at(path).discarded; }
  std::size_t queued(PathId path) const { return lines_.at(path).fifo.size(); }

 private:
  struct Line {
    std::deque<std::pair<ReceivedPacket, SimTime>> fifo;
    SimTime last_release = 0;
    std::uint64_t arrived = 0;
    std::uint64_t released = 0;
    std::uint64_t discarded = 0;
  };

  std::vector<Line> lines_;
  double k_;
  Duration max_hold_;
  SimTime latest_release_ = 0;
};

}  // namespace mpdccp
