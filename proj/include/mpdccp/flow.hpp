#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>

#include "mpdccp/sim_core.hpp"

namespace mpdccp {

inline constexpr std::uint64_t kSeqModulus = std::uint64_t{1} << 48;
inline constexpr std::uint64_t kSeqMask = kSeqModulus - 1;

/// An ingress datagram carried by one tunnel flow.
struct TunnelPacket {
  std::uint64_t overall_seq = 0;  // tunnel-wide, modulo 2^48
  std::uint64_t flow_seq = 0;     // per flow, modulo 2^48
  PathId path_id = 0;
  std::uint32_t sender_rtt_report = 0;  // sender SRTT for this path in us, 0 = no sample yet
  std::uint32_t payload_len = 0;
  SimTime ingress_time = 0;

  friend bool operator==(const TunnelPacket&, const TunnelPacket&) = default;
};

// ---------------------------------------------------------------------------
// Encapsulation header
//
//   0        1        2                          8                12             16
//   +--------+--------+--------------------------+----------------+---------------+
//   |version | path_id|  overall_seq (48 bit)    | sender RTT (us)| flow_seq low32|
//   +--------+--------+--------------------------+----------------+---------------+
//
// All multi-byte fields are big endian.
// ---------------------------------------------------------------------------

inline constexpr std::size_t kHeaderSize = 16;
inline constexpr std::uint8_t kHeaderVersion = 1;

using HeaderBytes = std::array<std::uint8_t, kHeaderSize>;

struct HeaderFields {
  std::uint8_t version = kHeaderVersion;
  PathId path_id = 0;
  std::uint64_t overall_seq = 0;
  std::uint32_t sender_rtt_report = 0;
  std::uint32_t flow_seq_low32 = 0;

  friend bool operator==(const HeaderFields&, const HeaderFields&) = default;
};

HeaderBytes encode_header(const TunnelPacket& packet);

/// Throws std::invalid_argument on a short buffer or an unknown version.
HeaderFields decode_header(std::span<const std::uint8_t> bytes);

/// Clamps an RTT estimate into the 32-bit header field.
std::uint32_t saturate_rtt_report(Duration rtt);

/// Maps a 48-bit wire sequence number onto the 64-bit value closest to
/// `reference` (typically the next expected sequence number).
std::uint64_t unwrap_seq48(std::uint64_t reference, std::uint64_t wire);

// ---------------------------------------------------------------------------
// Tunnel flow with window-based congestion control
// ---------------------------------------------------------------------------

struct FlowConfig {
  std::uint32_t initial_cwnd = 2;
  std::uint32_t initial_ssthresh = 64;
  /// Upper bound on the window; 0 means unbounded.
  std::uint32_t max_cwnd = 0;
  std::uint32_t dupack_threshold = 3;
  std::uint32_t rto_srtt_multiplier = 4;
  Duration min_rto = 200 * kMillisecond;
  Duration initial_rto = 1 * kSecond;
};

struct AckRecord {
  std::uint64_t flow_seq = 0;
  SimTime send_time = 0;  // echoed back by the receiver
  SimTime ack_time = 0;
};

/// Per-path tunnel flow (CCID2-style AIMD in packets).
///
/// The flow owns a FIFO send queue for packets the scheduler assigned to it
/// but the congestion window does not yet admit. Transmission is delegated
/// to a callback so the flow stays a pure state machine.
class Flow {
 public:
  using TransmitFn = std::function<void(const TunnelPacket&, SimTime)>;

  Flow(PathId path_id, FlowConfig config, TransmitFn transmit);

  /// Stamps the next flow sequence number and the current SRTT, queues the
  /// packet and sends as much of the queue as the window admits.
  void enqueue(TunnelPacket packet, SimTime now);

  /// Unknown or duplicate acks are ignored. Acks for packets previously
  /// written off by a timeout still contribute an RTT sample.
  void on_ack(const AckRecord& ack, SimTime now);

  /// Multiplicative decrease; at most once per smoothed round trip.
  void on_loss(SimTime now);

  /// Throws std::invalid_argument for non-positive samples.
  void update_rtt(Duration sample);

  /// Writes off every outstanding packet when the retransmission-style
  /// timer has expired. No-op if the deadline has not been reached.
  void on_timeout(SimTime now);

  std::optional<SimTime> rto_deadline() const;
  Duration rto() const;

  PathId path_id() const { return path_id_; }
  std::uint32_t cwnd() const { return cwnd_; }
  std::uint32_t ssthresh() const { return ssthresh_; }
  std::uint32_t in_flight() const { return static_cast<std::uint32_t>(outstanding_.size()); }
  std::size_t queued() const { return send_queue_.size(); }
  const std::deque<TunnelPacket>& send_queue() const { return send_queue_; }
  Duration srtt() const { return srtt_; }
  Duration rttvar() const { return rttvar_; }
  bool has_rtt_sample() const { return has_rtt_sample_; }
  std::uint64_t next_flow_seq() const { return next_flow_seq_; }
  std::uint64_t halvings() const { return halvings_; }
  std::uint64_t losses_detected() const { return losses_detected_; }

 private:
  struct Outstanding {
    SimTime send_time = 0;
    std::uint32_t later_acks = 0;
  };

  void try_send(SimTime now);
  void grow_window();

  PathId path_id_;
  FlowConfig config_;
  TransmitFn transmit_;

  std::uint32_t cwnd_;
  std::uint32_t ssthresh_;
  std::uint32_t ca_acked_ = 0;  // acks counted toward the next +1 in congestion avoidance
  Duration srtt_ = 0;
  Duration rttvar_ = 0;
  bool has_rtt_sample_ = false;
  SimTime recovery_until_ = -1;
  SimTime last_progress_ = 0;

  std::deque<TunnelPacket> send_queue_;
  std::map<std::uint64_t, Outstanding> outstanding_;
  std::set<std::uint64_t> written_off_;
  std::uint64_t next_flow_seq_ = 0;
  std::uint64_t halvings_ = 0;
  std::uint64_t losses_detected_ = 0;
};

}  // namespace mpdccp
