#include <algorithm>

#include "mpdccp/simulation.hpp"

namespace mpdccp {

namespace {

// Sender and receiver halves of the tunnel wired over simulated links.
class Tunnel {
 public:
  explicit Tunnel(const ScenarioConfig& config);

  MetricsLog run();

 private:
  SimTime now() const { return events_.now(); }

  void start_traffic();
  void emit_cbr(std::uint64_t k);
  void pump_greedy();
  void ingress();
  std::vector<PathState> snapshot() const;
  void sample_flows();

  void transmit(PathId path, const TunnelPacket& packet, SimTime at);
  void on_path_arrival(const HeaderBytes& header, std::uint64_t flow_seq, std::uint32_t payload_len,
                       SimTime ingress_time, SimTime send_time);
  void on_ack(PathId path, const AckRecord& ack);
  void rearm_rto(PathId path);

  void on_reorder_deadline();
  void on_equalizer_release();
  void record(const std::vector<Delivery>& deliveries);

  const ScenarioConfig& config_;
  EventQueue events_;
  std::vector<Link> links_;
  std::vector<Flow> flows_;
  std::vector<std::optional<EventId>> rto_events_;
  std::vector<Duration> srtt_prior_;
  std::vector<double> costs_;
  Scheduler scheduler_;

  PathStats path_stats_;
  ReorderBuffer reorder_buffer_;
  DelayEqualizer equalizer_;
  std::uint64_t highest_seen_ = 0;
  std::optional<std::uint64_t> highest_passed_;

  std::uint64_t next_overall_seq_ = 0;
  bool source_active_ = false;

  MetricsLog log_;
};

Tunnel::Tunnel(const ScenarioConfig& config)
    : config_(config),
      scheduler_(config.scheduler),
      path_stats_(config.paths.size()),
      equalizer_(config.paths.size(), config.reorder.adaptive_k, config.reorder.max_hold) {
  const std::size_t n = config.paths.size();
  links_.reserve(n);
  flows_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& model = config.paths[i];
    const auto id = static_cast<PathId>(i);
    links_.emplace_back(model, path_seed(config.seed, id));
    flows_.emplace_back(id, config.flow,
                        [this, id](const TunnelPacket& p, SimTime at) { transmit(id, p, at); });
    srtt_prior_.push_back(2 * model.one_way_latency);
    costs_.push_back(config.scheduler.costs.size() == n ? config.scheduler.costs[i] : model.cost);
  }
  rto_events_.resize(n);

  log_.scenario = config.name;
  log_.seed = config.seed;
  log_.n_paths = n;
  log_.nominal_interval_us = nominal_interval_us(config.traffic);
  log_.pdv_source = config.pdv_source;
}

MetricsLog Tunnel::run() {
  // Latency events go in first so a packet sent at the same instant sees
  // the new latency.
  Duration max_latency = 0;
  for (std::size_t i = 0; i < links_.size(); ++i) {
    max_latency = std::max(max_latency, config_.paths[i].one_way_latency);
    for (const auto& ev : config_.paths[i].events) {
      max_latency = std::max(max_latency, ev.latency);
      events_.schedule(ev.at, [this, i, latency = ev.latency] { links_[i].apply_latency_event(latency); });
    }
  }
  start_traffic();

  const SimTime limit = config_.duration + max_latency + config_.reorder.max_hold + config_.drain;
  events_.run_until(limit);

  log_.end_time = now();
  auto& t = log_.totals;
  t.reorder_gaps = reorder_buffer_.gap_count();
  t.reorder_skipped = reorder_buffer_.skipped_seqs();
  t.undelivered = t.emitted - t.delivered - t.dropped - t.discarded;
  return std::move(log_);
}

void Tunnel::start_traffic() {
  const auto& source = config_.traffic;
  const SimTime stop = std::min(source.stop, config_.duration);
  if (stop <= source.start) return;
  if (source.kind == TrafficKind::Cbr) {
    if (cbr_packet_count(source) > 0) {
      events_.schedule(cbr_emission_time(source, 0), [this] { emit_cbr(0); });
    }
    return;
  }
  events_.schedule(source.start, [this] {
    source_active_ = true;
    pump_greedy();
  });
  events_.schedule(stop, [this] { source_active_ = false; });
}

void Tunnel::emit_cbr(std::uint64_t k) {
  ingress();
  const auto& source = config_.traffic;
  const SimTime next = cbr_emission_time(source, k + 1);
  if (next < std::min(source.stop, config_.duration)) {
    events_.schedule(next, [this, k] { emit_cbr(k + 1); });
  }
}

// A greedy source keeps the tunnel's aggregate window full: it offers a
// packet whenever the flows together have more window than packets in
// flight or queued. Each ingress adds one packet, so the loop terminates.
void Tunnel::pump_greedy() {
  if (!source_active_) return;
  while (true) {
    std::uint64_t window = 0;
    std::uint64_t occupied = 0;
    for (const auto& f : flows_) {
      window += f.cwnd();
      occupied += f.in_flight() + f.queued();
    }
    if (occupied >= window) return;
    ingress();
  }
}

std::vector<PathState> Tunnel::snapshot() const {
  std::vector<PathState> view;
  view.reserve(flows_.size());
  for (std::size_t i = 0; i < flows_.size(); ++i) {
    const Flow& f = flows_[i];
    PathState s;
    s.id = static_cast<PathId>(i);
    // Until a flow has measured anything it is judged by its configured
    // latency; the prior is never refreshed afterwards.
    s.srtt = f.has_rtt_sample() ? f.srtt() : srtt_prior_[i];
    s.rttvar = f.rttvar();
    s.cwnd = f.cwnd();
    s.in_flight = f.in_flight();
    s.queued = static_cast<std::uint32_t>(f.queued());
    s.cost = costs_[i];
    view.push_back(s);
  }
  return view;
}

void Tunnel::sample_flows() {
  for (std::size_t i = 0; i < flows_.size(); ++i) {
    const Flow& f = flows_[i];
    log_.flow_samples.push_back(FlowSample{
        .time = now(),
        .path_id = static_cast<PathId>(i),
        .has_rtt_sample = f.has_rtt_sample(),
        .srtt = f.srtt(),
        .rttvar = f.rttvar(),
        .cwnd = f.cwnd(),
        .ssthresh = f.ssthresh(),
        .in_flight = f.in_flight(),
        .send_queue = static_cast<std::uint32_t>(f.queued()),
        .link_backlog = static_cast<std::uint32_t>(links_[i].backlog(now())),
    });
  }
}

void Tunnel::ingress() {
  TunnelPacket packet;
  packet.overall_seq = next_overall_seq_ & kSeqMask;
  ++next_overall_seq_;
  packet.payload_len = config_.traffic.packet_size;
  packet.ingress_time = now();

  const auto view = snapshot();
  const PathId path = scheduler_.pick(view);

  DecisionRecord decision{now(), packet.overall_seq, path, {}};
  decision.eta.reserve(view.size());
  for (const auto& s : view) decision.eta.push_back(otias_eta(s));
  log_.decisions.push_back(std::move(decision));
  sample_flows();

  ++log_.totals.emitted;
  flows_[path].enqueue(packet, now());
  rearm_rto(path);
}

void Tunnel::transmit(PathId path, const TunnelPacket& packet, SimTime at) {
  const HeaderBytes header = encode_header(packet);
  const Flow& flow = flows_[path];
  log_.transmissions.push_back(TransmissionRecord{at, path, packet.flow_seq, packet.overall_seq,
                                                  flow.in_flight(), flow.cwnd(), header});

  const auto delivery = links_[path].transmit(packet.payload_len + kHeaderSize, at);
  if (!delivery) {
    ++log_.totals.dropped;
    log_.drops.push_back(ArrivalRecord{at, packet.overall_seq, path, packet.flow_seq, at,
                                       packet.ingress_time, packet.payload_len});
    return;
  }
  events_.schedule(*delivery, [this, header, flow_seq = packet.flow_seq, len = packet.payload_len,
                               ingress = packet.ingress_time, at] {
    on_path_arrival(header, flow_seq, len, ingress, at);
  });
}

void Tunnel::on_path_arrival(const HeaderBytes& header, std::uint64_t flow_seq,
                             std::uint32_t payload_len, SimTime ingress_time, SimTime send_time) {
  const HeaderFields fields = decode_header(header);
  const PathId path = fields.path_id;

  const SimTime ack_at = links_[path].ack_arrival(now());
  events_.schedule(ack_at, [this, path, ack = AckRecord{flow_seq, send_time, ack_at}] { on_ack(path, ack); });

  path_stats_.observe(path, fields.sender_rtt_report);

  const std::uint64_t seq = unwrap_seq48(highest_seen_, fields.overall_seq);
  highest_seen_ = std::max(highest_seen_, seq);
  const ReceivedPacket packet{seq, path, now(), payload_len, ingress_time};
  log_.arrivals.push_back(
      ArrivalRecord{now(), seq, path, flow_seq, send_time, ingress_time, payload_len});

  const auto& reorder = config_.reorder;
  switch (reorder.kind) {
    case ReorderKind::None: {
      const bool late = highest_passed_ && seq < *highest_passed_;
      highest_passed_ = std::max(highest_passed_.value_or(seq), seq);
      record({Delivery{packet, now(), late ? Disposition::Late : Disposition::InOrder}});
      break;
    }
    case ReorderKind::Static:
    case ReorderKind::Adaptive: {
      const Duration threshold =
          reorder.kind == ReorderKind::Static
              ? reorder.static_threshold
              : adaptive_threshold(path_stats_, reorder.adaptive_k, reorder.max_hold);
      const std::size_t held_before = reorder_buffer_.held();
      record(reorder_buffer_.on_arrival(packet, now(), threshold));
      if (reorder_buffer_.held() > held_before) {
        events_.schedule(now() + threshold, [this] { on_reorder_deadline(); });
      }
      break;
    }
    case ReorderKind::DelayEqualize: {
      const auto decision = equalizer_.on_arrival(packet, now(), path_stats_);
      if (decision.discarded) {
        ++log_.totals.discarded;
        log_.deliveries.push_back(DeliveryRecord{now(), seq, path, now(), ingress_time, payload_len,
                                                 Disposition::Discarded});
      } else {
        events_.schedule(decision.release, [this] { on_equalizer_release(); });
      }
      break;
    }
  }
}

void Tunnel::on_reorder_deadline() { record(reorder_buffer_.on_deadline(now())); }

void Tunnel::on_equalizer_release() { record(equalizer_.release_due(now())); }

void Tunnel::record(const std::vector<Delivery>& deliveries) {
  for (const auto& d : deliveries) {
    ++log_.totals.delivered;
    if (d.disposition == Disposition::Late) ++log_.totals.late;
    log_.deliveries.push_back(DeliveryRecord{d.time, d.packet.seq, d.packet.path_id, d.packet.arrival,
                                             d.packet.ingress_time, d.packet.payload_len,
                                             d.disposition});
  }
}

void Tunnel::on_ack(PathId path, const AckRecord& ack) {
  flows_[path].on_ack(ack, now());
  rearm_rto(path);
  pump_greedy();
}

void Tunnel::rearm_rto(PathId path) {
  auto& pending = rto_events_[path];
  if (pending) {
    events_.cancel(*pending);
    pending.reset();
  }
  const auto deadline = flows_[path].rto_deadline();
  if (!deadline) return;
  pending = events_.schedule(std::max(*deadline, now()), [this, path] {
    rto_events_[path].reset();
    flows_[path].on_timeout(now());
    rearm_rto(path);
    pump_greedy();
  });
}

}  // namespace

MetricsLog run(const ScenarioConfig& config) {
  if (auto errors = validate(config); !errors.empty()) throw ValidationError(std::move(errors));
  Tunnel tunnel(config);
  return tunnel.run();
}

}  // namespace mpdccp
