#include <algorithm>
#include <stdexcept>
#include <string>

#include "mpdccp/flow.hpp"

namespace mpdccp {

namespace {
constexpr std::size_t kMaxWrittenOff = 4096;
}

Flow::Flow(PathId path_id, FlowConfig config, TransmitFn transmit)
    : path_id_(path_id),
      config_(config),
      transmit_(std::move(transmit)),
      cwnd_(std::max<std::uint32_t>(config.initial_cwnd, 1)),
      ssthresh_(std::max<std::uint32_t>(config.initial_ssthresh, 2)) {
  if (config_.max_cwnd != 0) cwnd_ = std::min(cwnd_, config_.max_cwnd);
}

void Flow::enqueue(TunnelPacket packet, SimTime now) {
  packet.path_id = path_id_;
  packet.flow_seq = next_flow_seq_ & kSeqMask;
  ++next_flow_seq_;
  packet.sender_rtt_report = saturate_rtt_report(has_rtt_sample_ ? srtt_ : 0);
  send_queue_.push_back(packet);
  try_send(now);
}

void Flow::try_send(SimTime now) {
  while (!send_queue_.empty() && in_flight() < cwnd_) {
    TunnelPacket packet = send_queue_.front();
    send_queue_.pop_front();
    if (outstanding_.empty()) last_progress_ = now;
    outstanding_.emplace(packet.flow_seq, Outstanding{now, 0});
    transmit_(packet, now);
  }
}

void Flow::grow_window() {
  if (cwnd_ < ssthresh_) {
    ++cwnd_;
  } else if (++ca_acked_ >= cwnd_) {
    ++cwnd_;
    ca_acked_ = 0;
  }
  if (config_.max_cwnd != 0) cwnd_ = std::min(cwnd_, config_.max_cwnd);
}

void Flow::on_ack(const AckRecord& ack, SimTime now) {
  const Duration sample = ack.ack_time - ack.send_time;
  auto acked = outstanding_.find(ack.flow_seq);
  if (acked == outstanding_.end()) {
    if (written_off_.erase(ack.flow_seq) > 0 && sample > 0) update_rtt(sample);
    return;
  }

  // Packets on one path never overtake each other, so an older packet that
  // keeps being passed by acks for newer ones is gone.
  bool lost = false;
  for (auto it = outstanding_.begin(); it != acked;) {
    if (++it->second.later_acks >= config_.dupack_threshold) {
      it = outstanding_.erase(it);
      ++losses_detected_;
      lost = true;
    } else {
      ++it;
    }
  }
  outstanding_.erase(acked);
  last_progress_ = now;

  if (sample > 0) update_rtt(sample);
  grow_window();
  if (lost) on_loss(now);
  try_send(now);
}

void Flow::on_loss(SimTime now) {
  if (now < recovery_until_) return;
  ssthresh_ = std::max<std::uint32_t>(cwnd_ / 2, 2);
  cwnd_ = ssthresh_;
  ca_acked_ = 0;
  ++halvings_;
  recovery_until_ = now + (has_rtt_sample_ ? srtt_ : 0);
}

void Flow::update_rtt(Duration sample) {
  if (sample <= 0) {
    throw std::invalid_argument("RTT sample must be positive, got " + std::to_string(sample));
  }
  if (!has_rtt_sample_) {
    srtt_ = sample;
    rttvar_ = sample / 2;
    has_rtt_sample_ = true;
    return;
  }
  const Duration deviation = srtt_ > sample ? srtt_ - sample : sample - srtt_;
  rttvar_ = (3 * rttvar_ + deviation) / 4;
  srtt_ = (7 * srtt_ + sample) / 8;
}

Duration Flow::rto() const {
  if (!has_rtt_sample_) return config_.initial_rto;
  return std::max<Duration>(static_cast<Duration>(config_.rto_srtt_multiplier) * srtt_,
                            config_.min_rto);
}

std::optional<SimTime> Flow::rto_deadline() const {
  if (outstanding_.empty()) return std::nullopt;
  return last_progress_ + rto();
}

void Flow::on_timeout(SimTime now) {
  const auto deadline = rto_deadline();
  if (!deadline || now < *deadline) return;
  for (const auto& [seq, _] : outstanding_) written_off_.insert(seq);
  losses_detected_ += outstanding_.size();
  outstanding_.clear();
  while (written_off_.size() > kMaxWrittenOff) written_off_.erase(written_off_.begin());
  on_loss(now);
  last_progress_ = now;
  try_send(now);
}

}  // namespace mpdccp
