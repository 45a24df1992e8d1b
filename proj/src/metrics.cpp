#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mpdccp/metrics.hpp"

namespace mpdccp {

std::vector<SeqTime> application_stream(const MetricsLog& log) {
  std::vector<SeqTime> out;
  out.reserve(log.deliveries.size());
  for (const auto& d : log.deliveries) {
    if (d.disposition != Disposition::Discarded) out.push_back({d.seq, d.time});
  }
  return out;
}

std::vector<SeqTime> raw_stream(const MetricsLog& log) {
  std::vector<SeqTime> out;
  out.reserve(log.arrivals.size());
  for (const auto& a : log.arrivals) out.push_back({a.seq, a.time});
  return out;
}

PdvSeries compute_pdv(std::span<const SeqTime> records, double nominal_interval_us) {
  std::vector<SeqTime> sorted(records.begin(), records.end());
  std::sort(sorted.begin(), sorted.end(), [](const SeqTime& a, const SeqTime& b) {
    return a.seq != b.seq ? a.seq < b.seq : a.time < b.time;
  });
  // Keep the first delivery of each sequence number.
  sorted.erase(std::unique(sorted.begin(), sorted.end(),
                           [](const SeqTime& a, const SeqTime& b) { return a.seq == b.seq; }),
               sorted.end());

  PdvSeries series;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].seq != sorted[i - 1].seq + 1) {
      ++series.skipped;
      continue;
    }
    const double gap = static_cast<double>(sorted[i].time - sorted[i - 1].time);
    series.samples.push_back({sorted[i].seq, static_cast<Duration>(std::llround(gap - nominal_interval_us))});
  }
  return series;
}

PdvSeries compute_pdv(const MetricsLog& log, PdvSource source) {
  const auto stream = source == PdvSource::Raw ? raw_stream(log) : application_stream(log);
  return compute_pdv(stream, log.nominal_interval_us);
}

PdvSummary summarize_pdv(std::span<const PdvSample> samples) {
  PdvSummary s;
  s.count = samples.size();
  if (samples.empty()) return s;
  std::vector<Duration> values;
  values.reserve(samples.size());
  for (const auto& p : samples) values.push_back(p.pdv);
  std::sort(values.begin(), values.end());
  const auto rank = [&](double q) {
    const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
    return values[std::clamp<std::size_t>(idx, 1, values.size()) - 1];
  };
  s.mean = static_cast<double>(std::accumulate(values.begin(), values.end(), std::int64_t{0})) /
           static_cast<double>(values.size());
  s.min = values.front();
  s.max = values.back();
  s.p50 = rank(0.50);
  s.p95 = rank(0.95);
  s.p99 = rank(0.99);
  return s;
}

double fraction_within(std::span<const PdvSample> samples, Duration bound) {
  if (samples.empty()) return 0.0;
  const auto n = std::count_if(samples.begin(), samples.end(),
                               [bound](const PdvSample& p) { return std::llabs(p.pdv) <= bound; });
  return static_cast<double>(n) / static_cast<double>(samples.size());
}

Histogram pdv_histogram(std::span<const PdvSample> samples, Duration bin_width) {
  if (bin_width <= 0) throw std::invalid_argument("histogram bin width must be positive");
  Histogram h;
  if (samples.empty()) return h;
  const auto [lo_it, hi_it] = std::minmax_element(
      samples.begin(), samples.end(), [](const PdvSample& a, const PdvSample& b) { return a.pdv < b.pdv; });
  const auto floor_div = [bin_width](Duration v) {
    return v >= 0 ? v / bin_width : -((-v + bin_width - 1) / bin_width);
  };
  const Duration first_bin = floor_div(lo_it->pdv);
  const Duration last_bin = floor_div(hi_it->pdv);
  for (Duration b = first_bin; b <= last_bin + 1; ++b) h.edges.push_back(b * bin_width);
  h.counts.assign(static_cast<std::size_t>(last_bin - first_bin + 1), 0);
  for (const auto& p : samples) ++h.counts[static_cast<std::size_t>(floor_div(p.pdv) - first_bin)];
  return h;
}

std::vector<OrderPoint> arrival_order_scatter(std::span<const SeqTime> stream) {
  std::vector<OrderPoint> out;
  out.reserve(stream.size());
  for (std::size_t i = 0; i < stream.size(); ++i) out.push_back({i, stream[i].seq});
  return out;
}

std::vector<ThroughputPoint> throughput_series(std::span<const ArrivalRecord> records, Duration bin,
                                               std::optional<PathId> path) {
  if (bin <= 0) throw std::invalid_argument("throughput bin must be positive");
  std::vector<ThroughputPoint> out;
  if (records.empty()) return out;
  SimTime last = 0;
  for (const auto& r : records) last = std::max(last, r.time);
  const auto n_bins = static_cast<std::size_t>(last / bin) + 1;
  std::vector<std::uint64_t> bits(n_bins, 0);
  for (const auto& r : records) {
    if (path && r.path_id != *path) continue;
    bits[static_cast<std::size_t>(r.time / bin)] += std::uint64_t{r.payload_len} * 8u;
  }
  const double seconds = static_cast<double>(bin) / static_cast<double>(kSecond);
  out.reserve(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) {
    out.push_back({static_cast<SimTime>(i) * bin, static_cast<double>(bits[i]) / seconds});
  }
  return out;
}

ReorderingExtent reordering_extent(std::span<const SeqTime> stream, std::uint64_t gap_count) {
  ReorderingExtent extent;
  extent.gap_count = gap_count;
  if (stream.empty()) return extent;

  std::vector<std::uint64_t> ranked;
  ranked.reserve(stream.size());
  for (const auto& s : stream) ranked.push_back(s.seq);
  std::sort(ranked.begin(), ranked.end());

  std::uint64_t max_seen = stream.front().seq;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const std::uint64_t seq = stream[i].seq;
    if (i > 0 && seq < max_seen) ++extent.out_of_order_count;
    max_seen = std::max(max_seen, seq);
    const auto rank = std::lower_bound(ranked.begin(), ranked.end(), seq) - ranked.begin();
    extent.max_displacement =
        std::max<std::int64_t>(extent.max_displacement, static_cast<std::int64_t>(i) - rank);
  }
  return extent;
}

}  // namespace mpdccp
