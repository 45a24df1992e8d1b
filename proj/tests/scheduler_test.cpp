#include <algorithm>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "mpdccp/scheduler.hpp"

namespace mpdccp {
namespace {

PathState path(PathId id, Duration srtt, std::uint32_t cwnd = 10, std::uint32_t in_flight = 0,
               std::uint32_t queued = 0, double cost = 0.0) {
  PathState p;
  p.id = id;
  p.srtt = srtt;
  p.cwnd = cwnd;
  p.in_flight = in_flight;
  p.queued = queued;
  p.cost = cost;
  return p;
}

std::vector<PathId> picks(RoundRobin& rr, std::size_t n, int count) {
  std::vector<PathId> out;
  for (int i = 0; i < count; ++i) out.push_back(rr.pick(n));
  return out;
}

TEST(RoundRobin, Examples) {
  RoundRobin two;
  EXPECT_EQ(picks(two, 2, 4), (std::vector<PathId>{0, 1, 0, 1}));
  RoundRobin one;
  EXPECT_EQ(picks(one, 1, 3), (std::vector<PathId>{0, 0, 0}));
  RoundRobin three;
  EXPECT_EQ(picks(three, 3, 7), (std::vector<PathId>{0, 1, 2, 0, 1, 2, 0}));
  EXPECT_THROW(three.pick(0), std::invalid_argument);
}

TEST(RoundRobin, EachPathKTimesOverKnPicks) {
  for (std::size_t n = 1; n <= 6; ++n) {
    RoundRobin rr;
    rr.pick(n);  // arbitrary starting phase
    std::map<PathId, int> count;
    for (std::size_t i = 0; i < 5 * n; ++i) ++count[rr.pick(n)];
    for (std::size_t p = 0; p < n; ++p) EXPECT_EQ(count[static_cast<PathId>(p)], 5);
  }
}

std::vector<PathId> picks(FixedRatio& fr, int count) {
  std::vector<PathId> out;
  for (int i = 0; i < count; ++i) out.push_back(fr.pick());
  return out;
}

TEST(FixedRatio, Examples) {
  FixedRatio eighty_twenty({80, 20});
  auto first = picks(eighty_twenty, 10);
  EXPECT_EQ(std::count(first.begin(), first.end(), 0), 8);

  FixedRatio four_one({4, 1});
  first = picks(four_one, 10);
  EXPECT_EQ(std::count(first.begin(), first.end(), 0), 8);
  EXPECT_EQ(std::count(first.begin(), first.end(), 1), 2);

  FixedRatio even({1, 1});
  RoundRobin rr;
  EXPECT_EQ(picks(even, 9), picks(rr, 2, 9));

  FixedRatio three_one({3, 1});
  first = picks(three_one, 8);
  EXPECT_EQ(std::count(first.begin(), first.end(), 0), 6);
  EXPECT_EQ(std::count(first.begin(), first.end(), 1), 2);

  EXPECT_THROW(FixedRatio({0, 0}), std::invalid_argument);
}

TEST(FixedRatio, ExactCountsPerCycleAndSmoothPrefixes) {
  std::mt19937 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::uint32_t> weights(1 + gen() % 4);
    for (auto& w : weights) w = gen() % 7;
    if (std::all_of(weights.begin(), weights.end(), [](auto w) { return w == 0; })) weights[0] = 1;
    std::uint32_t total = 0;
    for (auto w : weights) total += w;

    FixedRatio fr(weights);
    const auto seq = picks(fr, static_cast<int>(3 * total));
    for (std::uint32_t cycle = 0; cycle < 3; ++cycle) {
      for (std::size_t p = 0; p < weights.size(); ++p) {
        const auto begin = seq.begin() + cycle * total;
        EXPECT_EQ(std::count(begin, begin + total, static_cast<PathId>(p)), weights[p]);
      }
    }
    std::vector<int> seen(weights.size(), 0);
    for (std::size_t k = 0; k < seq.size(); ++k) {
      ++seen[seq[k]];
      for (std::size_t p = 0; p < weights.size(); ++p) {
        const double ideal = static_cast<double>(k + 1) * weights[p] / total;
        EXPECT_LE(std::abs(seen[p] - ideal), 1.0) << "prefix " << k + 1;
      }
    }
  }
}

TEST(CheapestPipeFirst, Examples) {
  std::vector<PathState> v{path(0, 10, 10, 0, 0, 1), path(1, 10, 10, 0, 0, 10)};
  EXPECT_EQ(pick_cheapest_pipe_first(v), 0);
  v[0].in_flight = 10;
  EXPECT_EQ(pick_cheapest_pipe_first(v), 1);
  v[1].queued = 10;  // nobody has room: the cheapest absorbs
  EXPECT_EQ(pick_cheapest_pipe_first(v), 0);

  std::vector<PathState> tie{path(0, 10, 10, 0, 0, 3), path(1, 10, 10, 0, 0, 3)};
  EXPECT_EQ(pick_cheapest_pipe_first(tie), 0);
}

TEST(SrttScheduler, Examples) {
  std::vector<PathState> v{path(0, 10'000), path(1, 20'000)};
  EXPECT_EQ(pick_srtt(v), 0);
  v[0].srtt = 100'000;
  EXPECT_EQ(pick_srtt(v), 1);
  v[0].srtt = 10'000;
  v[0].in_flight = 6;
  v[0].queued = 4;
  EXPECT_EQ(pick_srtt(v), 1);
  v[1].in_flight = 10;
  EXPECT_EQ(pick_srtt(v), 0);  // none available: overall minimum
  EXPECT_THROW(pick_srtt(PathView{}), std::invalid_argument);
}

TEST(SrttScheduler, PicksMinimumAmongAvailableOnRandomSnapshots) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 5'000; ++trial) {
    std::vector<PathState> v;
    const auto n = 1 + gen() % 5;
    for (std::size_t i = 0; i < n; ++i) {
      const auto cwnd = static_cast<std::uint32_t>(1 + gen() % 8);
      v.push_back(path(static_cast<PathId>(i), static_cast<Duration>(1 + gen() % 6) * 1000, cwnd,
                       static_cast<std::uint32_t>(gen() % (cwnd + 1)),
                       static_cast<std::uint32_t>(gen() % 3)));
    }
    const PathId chosen = pick_srtt(v);
    const bool any_available = std::any_of(v.begin(), v.end(), [](auto& p) { return p.available(); });
    if (any_available) EXPECT_TRUE(v[chosen].available());
    for (const auto& p : v) {
      if (any_available && !p.available()) continue;
      EXPECT_LE(v[chosen].srtt, p.srtt);
      if (p.srtt == v[chosen].srtt) EXPECT_LE(chosen, p.id);
    }
  }
}

TEST(OtiasEta, Examples) {
  EXPECT_EQ(otias_eta(path(0, 20'000, 10, 0, 0)), 10'000);
  EXPECT_EQ(otias_eta(path(0, 20'000, 10, 10, 9)), 30'000);
  EXPECT_EQ(otias_eta(path(0, 20'000, 10, 10, 25)), 70'000);
}

// A window of cwnd packets drains once per srtt. Packets already in flight
// complete at the end of round 0; the new packet waits behind the queue and
// then needs half an RTT to reach the receiver.
Duration drain_oracle(const PathState& p) {
  std::uint32_t ahead = p.queued;
  std::uint32_t free = p.cwnd - p.in_flight;
  Duration t = 0;
  while (true) {
    if (ahead < free) return t + p.srtt / 2;
    ahead -= free;
    free = p.cwnd;
    t += p.srtt;
  }
}

TEST(OtiasEta, MatchesDrainOracle) {
  EXPECT_EQ(drain_oracle(path(0, 20'000, 10, 10, 9)), 30'000);
  EXPECT_EQ(drain_oracle(path(0, 20'000, 10, 10, 25)), 70'000);
  std::mt19937_64 gen(99);
  for (int trial = 0; trial < 20'000; ++trial) {
    const auto cwnd = static_cast<std::uint32_t>(1 + gen() % 40);
    const auto p = path(0, static_cast<Duration>(1 + gen() % 500'000), cwnd,
                        static_cast<std::uint32_t>(gen() % (cwnd + 1)),
                        static_cast<std::uint32_t>(gen() % 200));
    EXPECT_EQ(otias_eta(p), drain_oracle(p));
  }
}

TEST(OtiasScheduler, Examples) {
  std::vector<PathState> v{path(0, 10'000), path(1, 50'000)};
  EXPECT_EQ(pick_otias(v), 0);

  // Path 0 queued two rounds deep: 2*10 + 5 = 25 ms ties path 1 and path 0
  // wins; a third round pushes it past.
  v[0].in_flight = 10;
  v[0].queued = 10;
  EXPECT_EQ(otias_eta(v[0]), 25'000);
  EXPECT_EQ(otias_eta(v[1]), 25'000);
  EXPECT_EQ(pick_otias(v), 0);
  v[0].queued = 20;
  EXPECT_EQ(otias_eta(v[0]), 35'000);
  EXPECT_EQ(pick_otias(v), 1);

  std::vector<PathState> same{path(0, 30'000, 5, 2, 0), path(1, 30'000, 5, 2, 0)};
  EXPECT_EQ(pick_otias(same), 0);
}

TEST(OtiasScheduler, OverloadsTheFastPathBeyondItsWindow) {
  std::vector<PathState> v{path(0, 10'000, 4, 4, 0), path(1, 100'000, 4, 0, 0)};
  int on_fast = 0;
  while (pick_otias(v) == 0) {
    ++v[0].queued;
    ++on_fast;
  }
  // eta0 = ceil((q+1)/4)*10 + 5 must pass 50 ms: q+1 > 16.
  EXPECT_EQ(on_fast, 16);
  EXPECT_GT(v[0].queued + v[0].in_flight, v[0].cwnd);
}

TEST(Scheduler, DispatchesAndKeepsState) {
  std::vector<PathState> v{path(0, 50'000), path(1, 10'000)};
  Scheduler rr({SchedulerKind::RoundRobin, {}, {}});
  EXPECT_EQ(rr.pick(v), 0);
  EXPECT_EQ(rr.pick(v), 1);
  Scheduler fr({SchedulerKind::FixedRatio, {2, 1}, {}});
  EXPECT_EQ(fr.pick(v), 0);
  EXPECT_EQ(fr.pick(v), 1);
  EXPECT_EQ(fr.pick(v), 0);
  Scheduler srtt({SchedulerKind::Srtt, {}, {}});
  EXPECT_EQ(srtt.pick(v), 1);
  Scheduler otias({SchedulerKind::Otias, {}, {}});
  EXPECT_EQ(otias.pick(v), 1);
}

TEST(Scheduler, NamesRoundTrip) {
  for (auto kind : {SchedulerKind::RoundRobin, SchedulerKind::FixedRatio, SchedulerKind::CheapestPipeFirst,
                    SchedulerKind::Srtt, SchedulerKind::Otias}) {
    EXPECT_EQ(parse_scheduler_kind(to_string(kind)), kind);
  }
  EXPECT_FALSE(parse_scheduler_kind("fastest"));
}

}  // namespace
}  // namespace mpdccp
