#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpdccp/flow.hpp"
#include "mpdccp/reorder.hpp"
#include "mpdccp/sim_core.hpp"

namespace mpdccp {

/// Which receiver stream PDV is computed from: the application hand-off
/// after the reorder module, or raw tunnel egress.
enum class PdvSource { Application, Raw };

/// A packet leaving a path at the receiver, before any reordering.
struct ArrivalRecord {
  SimTime time = 0;
  std::uint64_t seq = 0;
  PathId path_id = 0;
  std::uint64_t flow_seq = 0;
  SimTime send_time = 0;
  SimTime ingress_time = 0;
  std::uint32_t payload_len = 0;
};

/// A packet handed to the application (or discarded) by the reorder module.
struct DeliveryRecord {
  SimTime time = 0;
  std::uint64_t seq = 0;
  PathId path_id = 0;
  SimTime arrival = 0;
  SimTime ingress_time = 0;
  std::uint32_t payload_len = 0;
  Disposition disposition = Disposition::InOrder;

  Duration residency() const { return time - arrival; }
};

struct DecisionRecord {
  SimTime time = 0;
  std::uint64_t seq = 0;
  PathId path_id = 0;
  std::vector<Duration> eta;  // per path
};

struct FlowSample {
  SimTime time = 0;
  PathId path_id = 0;
  bool has_rtt_sample = false;
  Duration srtt = 0;
  Duration rttvar = 0;
  std::uint32_t cwnd = 0;
  std::uint32_t ssthresh = 0;
  std::uint32_t in_flight = 0;
  std::uint32_t send_queue = 0;
  std::uint32_t link_backlog = 0;
};

struct TransmissionRecord {
  SimTime time = 0;
  PathId path_id = 0;
  std::uint64_t flow_seq = 0;
  std::uint64_t seq = 0;
  std::uint32_t in_flight = 0;  // including this packet
  std::uint32_t cwnd = 0;
  HeaderBytes header{};
};

struct RunTotals {
  std::uint64_t emitted = 0;
  std::uint64_t delivered = 0;    // includes late deliveries
  std::uint64_t dropped = 0;      // path loss
  std::uint64_t discarded = 0;    // receiver discards
  std::uint64_t undelivered = 0;  // still queued when the run ended
  std::uint64_t late = 0;
  std::uint64_t reorder_gaps = 0;
  std::uint64_t reorder_skipped = 0;
};

/// Everything a run records. Append-only while the run executes; each
/// stream is in non-decreasing time order.
struct MetricsLog {
  std::string scenario;
  std::uint64_t seed = 0;
  std::size_t n_paths = 0;
  double nominal_interval_us = 0.0;
  PdvSource pdv_source = PdvSource::Application;
  SimTime end_time = 0;

  std::vector<ArrivalRecord> arrivals;
  std::vector<DeliveryRecord> deliveries;
  std::vector<DecisionRecord> decisions;
  std::vector<FlowSample> flow_samples;
  std::vector<TransmissionRecord> transmissions;
  std::vector<ArrivalRecord> drops;
  RunTotals totals;
};

// ---------------------------------------------------------------------------
// Post-processing. All functions are pure.
// ---------------------------------------------------------------------------

struct SeqTime {
  std::uint64_t seq = 0;
  SimTime time = 0;
};

/// Application-visible stream (discards excluded), in delivery order.
std::vector<SeqTime> application_stream(const MetricsLog& log);
/// Raw tunnel egress stream, in arrival order.
std::vector<SeqTime> raw_stream(const MetricsLog& log);

struct PdvSample {
  std::uint64_t seq = 0;
  Duration pdv = 0;
};

struct PdvSeries {
  std::vector<PdvSample> samples;  // ascending seq
  std::size_t skipped = 0;         // packets whose predecessor never arrived
};

/// pdv(n) = (arrival(n) - arrival(n-1)) - nominal_interval for consecutive
/// sequence numbers, rounded to whole microseconds. Depends only on the
/// (seq, time) pairs, not on record order. Negative when a packet arrived
/// before its predecessor.
PdvSeries compute_pdv(std::span<const SeqTime> records, double nominal_interval_us);
PdvSeries compute_pdv(const MetricsLog& log, PdvSource source);

struct PdvSummary {
  std::size_t count = 0;
  double mean = 0.0;
  Duration min = 0;
  Duration max = 0;
  Duration p50 = 0;
  Duration p95 = 0;
  Duration p99 = 0;
};

PdvSummary summarize_pdv(std::span<const PdvSample> samples);

/// Fraction of samples with |pdv| <= bound.
double fraction_within(std::span<const PdvSample> samples, Duration bound);

struct Histogram {
  std::vector<Duration> edges;  // counts.size() + 1 entries; bins are [edge_i, edge_i+1)
  std::vector<std::size_t> counts;
};

Histogram pdv_histogram(std::span<const PdvSample> samples, Duration bin_width);

struct OrderPoint {
  std::size_t arrival_index = 0;
  std::uint64_t seq = 0;
};

std::vector<OrderPoint> arrival_order_scatter(std::span<const SeqTime> stream);

struct ThroughputPoint {
  SimTime bin_start = 0;
  double bps = 0.0;
};

/// Delivered payload bits per bin divided by the bin length. Every series
/// computed from the same records spans the same bins, so per-path series
/// line up with the aggregate.
std::vector<ThroughputPoint> throughput_series(std::span<const ArrivalRecord> records, Duration bin,
                                               std::optional<PathId> path = std::nullopt);

inline constexpr Duration kDefaultThroughputBin = 100 * kMillisecond;

struct ReorderingExtent {
  std::size_t out_of_order_count = 0;
  std::int64_t max_displacement = 0;
  std::uint64_t gap_count = 0;

  friend bool operator==(const ReorderingExtent&, const ReorderingExtent&) = default;
};

/// out_of_order_count counts packets arriving with a sequence number below
/// the maximum seen so far; displacement is arrival index minus rank in
/// sequence order.
ReorderingExtent reordering_extent(std::span<const SeqTime> stream, std::uint64_t gap_count = 0);

}  // namespace mpdccp
