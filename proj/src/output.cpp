#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "json.hpp"
#include "mpdccp/output.hpp"
#include "mpdccp/simulation.hpp"

namespace mpdccp {

using nlohmann::json;

namespace {

std::string hex(const HeaderBytes& bytes) {
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) out += fmt::format("{:02x}", b);
  return out;
}

std::int64_t i64(std::int64_t v) { return v; }

Table pdv_table(const PdvSeries& series) {
  Table t{{"overall_seq", "pdv_us"}, {}};
  for (const auto& s : series.samples) t.rows.push_back({s.seq, i64(s.pdv)});
  return t;
}

void write_file(const std::filesystem::path& file, const std::string& contents) {
  std::error_code ec;
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path(), ec);
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw OutputError("cannot open " + file.string() + " for writing");
  out << contents;
  out.flush();
  if (!out) throw OutputError("failed writing " + file.string());
}

json cell_to_json(const Cell& cell) {
  return std::visit([](const auto& v) { return json(v); }, cell);
}

std::string cell_to_text(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> std::string {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, std::string>) {
          return v;
        } else {
          return fmt::format("{}", v);
        }
      },
      cell);
}

json extent_json(const ReorderingExtent& e) {
  return {{"out_of_order_count", e.out_of_order_count},
          {"max_displacement", e.max_displacement},
          {"gap_count", e.gap_count}};
}

}  // namespace

Table metric_table(const MetricsLog& log, std::string_view metric) {
  if (metric == "arrivals") {
    Table t{{"time_us", "overall_seq", "path_id", "flow_seq", "send_time_us", "ingress_time_us",
             "payload_len"},
            {}};
    for (const auto& a : log.arrivals) {
      t.rows.push_back({i64(a.time), a.seq, std::uint64_t{a.path_id}, a.flow_seq, i64(a.send_time),
                        i64(a.ingress_time), std::uint64_t{a.payload_len}});
    }
    return t;
  }
  if (metric == "deliveries") {
    Table t{{"delivery_time_us", "overall_seq", "path_id", "buffer_residency_us", "disposition"}, {}};
    for (const auto& d : log.deliveries) {
      t.rows.push_back({i64(d.time), d.seq, std::uint64_t{d.path_id}, i64(d.residency()),
                        std::string(to_string(d.disposition))});
    }
    return t;
  }
  if (metric == "decisions") {
    Table t{{"time_us", "overall_seq", "path_id"}, {}};
    for (std::size_t i = 0; i < log.n_paths; ++i) t.columns.push_back(fmt::format("eta_us_{}", i));
    for (const auto& d : log.decisions) {
      std::vector<Cell> row{i64(d.time), d.seq, std::uint64_t{d.path_id}};
      for (auto eta : d.eta) row.push_back(i64(eta));
      t.rows.push_back(std::move(row));
    }
    return t;
  }
  if (metric == "srtt") {
    Table t{{"time_us", "path_id", "measured", "srtt_us", "rttvar_us", "cwnd", "ssthresh", "in_flight",
             "send_queue", "link_backlog"},
            {}};
    for (const auto& s : log.flow_samples) {
      t.rows.push_back({i64(s.time), std::uint64_t{s.path_id}, std::uint64_t{s.has_rtt_sample},
                        i64(s.srtt), i64(s.rttvar), std::uint64_t{s.cwnd}, std::uint64_t{s.ssthresh},
                        std::uint64_t{s.in_flight}, std::uint64_t{s.send_queue},
                        std::uint64_t{s.link_backlog}});
    }
    return t;
  }
  if (metric == "throughput") {
    Table t{{"bin_start_us"}, {}};
    std::vector<std::vector<ThroughputPoint>> per_path;
    for (std::size_t i = 0; i < log.n_paths; ++i) {
      t.columns.push_back(fmt::format("path_{}_bps", i));
      per_path.push_back(throughput_series(log.arrivals, kDefaultThroughputBin, static_cast<PathId>(i)));
    }
    t.columns.push_back("total_bps");
    const auto total = throughput_series(log.arrivals, kDefaultThroughputBin);
    for (std::size_t b = 0; b < total.size(); ++b) {
      std::vector<Cell> row{i64(total[b].bin_start)};
      for (const auto& series : per_path) row.push_back(series[b].bps);
      row.push_back(total[b].bps);
      t.rows.push_back(std::move(row));
    }
    return t;
  }
  if (metric == "pdv") return pdv_table(compute_pdv(log, log.pdv_source));
  if (metric == "pdv_raw") return pdv_table(compute_pdv(log, PdvSource::Raw));
  if (metric == "pdv_histogram") {
    const auto series = compute_pdv(log, log.pdv_source);
    const auto h = pdv_histogram(series.samples, kMillisecond);
    Table t{{"bin_start_us", "bin_end_us", "count"}, {}};
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      t.rows.push_back({i64(h.edges[i]), i64(h.edges[i + 1]), std::uint64_t{h.counts[i]}});
    }
    return t;
  }
  if (metric == "order") {
    Table t{{"arrival_index", "overall_seq"}, {}};
    for (const auto& p : arrival_order_scatter(application_stream(log))) {
      t.rows.push_back({std::uint64_t{p.arrival_index}, p.seq});
    }
    return t;
  }
  if (metric == "headers") {
    Table t{{"time_us", "path_id", "flow_seq", "overall_seq", "in_flight", "cwnd", "header_hex"}, {}};
    for (const auto& x : log.transmissions) {
      t.rows.push_back({i64(x.time), std::uint64_t{x.path_id}, x.flow_seq, x.seq,
                        std::uint64_t{x.in_flight}, std::uint64_t{x.cwnd}, hex(x.header)});
    }
    return t;
  }
  throw std::invalid_argument("unknown metric \"" + std::string(metric) + "\"");
}

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    out += (i ? "," : "") + table.columns[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += cell_to_text(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string to_json(const Table& table) {
  json out = json::array();
  for (const auto& row : table.rows) {
    json obj = json::object();
    for (std::size_t i = 0; i < row.size(); ++i) obj[table.columns[i]] = cell_to_json(row[i]);
    out.push_back(std::move(obj));
  }
  return out.dump() + "\n";
}

std::string run_summary_json(const MetricsLog& log) {
  const auto& t = log.totals;
  const auto series = compute_pdv(log, log.pdv_source);
  const auto stats = summarize_pdv(series.samples);

  std::vector<std::uint64_t> sent_per_path(log.n_paths, 0);
  std::vector<std::uint64_t> arrived_per_path(log.n_paths, 0);
  for (const auto& x : log.transmissions) ++sent_per_path[x.path_id];
  for (const auto& a : log.arrivals) ++arrived_per_path[a.path_id];
  json paths = json::array();
  for (std::size_t i = 0; i < log.n_paths; ++i) {
    paths.push_back({{"path_id", i}, {"transmitted", sent_per_path[i]}, {"arrived", arrived_per_path[i]}});
  }

  json summary = {
      {"schema_version", kOutputSchemaVersion},
      {"scenario", log.scenario},
      {"seed", log.seed},
      {"end_time_us", log.end_time},
      {"totals",
       {{"sent", t.emitted},
        {"delivered", t.delivered},
        {"dropped", t.dropped},
        {"discarded", t.discarded},
        {"undelivered", t.undelivered},
        {"late", t.late},
        {"reorder_gaps", t.reorder_gaps},
        {"reorder_skipped_seqs", t.reorder_skipped}}},
      {"pdv",
       {{"source", log.pdv_source == PdvSource::Raw ? "raw" : "application"},
        {"nominal_interval_us", log.nominal_interval_us},
        {"samples", stats.count},
        {"skipped", series.skipped},
        {"mean_us", stats.mean},
        {"min_us", stats.min},
        {"p50_us", stats.p50},
        {"p95_us", stats.p95},
        {"p99_us", stats.p99},
        {"max_us", stats.max},
        {"fraction_within_2ms", fraction_within(series.samples, 2 * kMillisecond)},
        {"fraction_within_5ms", fraction_within(series.samples, 5 * kMillisecond)}}},
      {"reordering", extent_json(reordering_extent(application_stream(log), t.reorder_gaps))},
      {"raw_reordering", extent_json(reordering_extent(raw_stream(log)))},
      {"paths", std::move(paths)},
  };
  return summary.dump(2) + "\n";
}

RunResult run_scenario(const ScenarioConfig& config, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw OutputError("cannot create output directory " + out_dir.string() + ": " + ec.message());

  RunResult result{run(config), {}};
  const auto summary = out_dir / "summary.json";
  write_file(summary, run_summary_json(result.log));
  result.files.push_back(summary);

  for (const auto& spec : config.outputs) {
    const Table table = metric_table(result.log, spec.metric);
    const auto file = out_dir / spec.path;
    write_file(file, spec.format == "json" ? to_json(table) : to_csv(table));
    result.files.push_back(file);
  }
  return result;
}

std::vector<std::string> run_paper_suite(const std::filesystem::path& out_dir, unsigned jobs) {
  const auto& canned = canned_scenarios();
  std::vector<ScenarioConfig> configs;
  std::vector<std::string> names;
  for (const auto& c : canned) {
    configs.push_back(parse_scenario(c.json));
    names.emplace_back(c.name);
  }

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        run_scenario(configs[i], out_dir / names[i]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };

  jobs = std::clamp<unsigned>(jobs, 1, static_cast<unsigned>(std::max<std::size_t>(configs.size(), 1)));
  std::vector<std::thread> threads;
  for (unsigned j = 1; j < jobs; ++j) threads.emplace_back(worker);
  worker();
  for (auto& th : threads) th.join();
  if (first_error) std::rethrow_exception(first_error);
  return names;
}

}  // namespace mpdccp
