#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

namespace mpdccp {

// All simulated time is integer microseconds since scenario start.
using SimTime = std::int64_t;
using Duration = std::int64_t;
using PathId = std::uint8_t;

inline constexpr Duration kMicrosecond = 1;
inline constexpr Duration kMillisecond = 1000;
inline constexpr Duration kSecond = 1'000'000;

using EventId = std::uint64_t;

/// Discrete-event queue with a simulated clock.
///
/// Events pop in (time, insertion order) order, so two events scheduled for
/// the same instant run first-in first-out. Scheduling an event in the past
/// throws std::invalid_argument.
class EventQueue {
 public:
  using Callback = std::function<void()>;

  EventId schedule(SimTime at, Callback callback);

  /// Returns false if the event already ran or was cancelled.
  bool cancel(EventId id);

  /// Advances the clock to the next pending event and runs it.
  /// Returns false when nothing is pending.
  bool step();

  /// Runs events whose time is <= limit. The clock never moves past the last
  /// executed event.
  void run_until(SimTime limit);

  void run();

  SimTime now() const { return now_; }
  std::optional<SimTime> next_time();
  bool empty();
  std::size_t executed() const { return executed_; }

 private:
  struct Entry {
    SimTime at;
    EventId id;
    Callback callback;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      return a.at != b.at ? a.at > b.at : a.id > b.id;
    }
  };

  void drop_cancelled_top();

  std::vector<Entry> heap_;
  std::unordered_set<EventId> live_;
  SimTime now_ = 0;
  EventId next_id_ = 0;
  std::size_t executed_ = 0;
};

struct LatencyEvent {
  SimTime at = 0;
  Duration latency = 0;
};

/// Static description of one simulated access link.
struct PathModel {
  PathId id = 0;
  Duration one_way_latency = 0;
  std::uint64_t bandwidth_bps = 0;
  double loss_rate = 0.0;
  double cost = 0.0;
  std::vector<LatencyEvent> events;  // strictly increasing in time
};

/// Human-readable violations of the PathModel invariants; empty when valid.
std::vector<std::string> validate(const PathModel& model);

/// Time to clock `bytes` onto a link of `bandwidth_bps`, rounded up to the
/// next whole microsecond.
Duration serialization_time(std::size_t bytes, std::uint64_t bandwidth_bps);

/// Runtime state of a simulated link: an unbounded FIFO serialization queue
/// followed by a fixed propagation delay, plus Bernoulli loss drawn from a
/// per-path generator.
///
/// Latency changes apply to packets handed to the link after the change.
/// Deliveries never overtake earlier deliveries on the same link, in either
/// direction.
class Link {
 public:
  Link(PathModel model, std::uint64_t seed);

  /// Hands a packet of `bytes` to the link at `now`. Returns its delivery
  /// time at the far end, or nullopt when the loss draw drops it. A dropped
  /// packet still occupies the serializer.
  std::optional<SimTime> transmit(std::size_t bytes, SimTime now);

  /// Delivery time of a zero-payload acknowledgment sent back over this
  /// path at `now`. Acks are not bandwidth limited and are never lost.
  SimTime ack_arrival(SimTime now);

  void apply_latency_event(Duration new_latency) { latency_ = new_latency; }

  Duration latency() const { return latency_; }

  /// Packets handed to the link whose serialization has not finished by `now`.
  std::size_t backlog(SimTime now) const;

  SimTime busy_until() const { return busy_until_; }
  const PathModel& model() const { return model_; }

 private:
  bool draw_loss();

  PathModel model_;
  Duration latency_;
  SimTime busy_until_ = 0;
  SimTime last_delivery_ = 0;
  SimTime last_ack_ = 0;
  std::deque<SimTime> serializing_;
  std::mt19937_64 rng_;
};

/// Seed for a path's loss generator, derived from the scenario seed so that
/// adding a path does not perturb another path's loss sequence.
std::uint64_t path_seed(std::uint64_t scenario_seed, PathId path);

enum class TrafficKind { Cbr, Greedy };

struct TrafficSource {
  TrafficKind kind = TrafficKind::Cbr;
  std::uint64_t rate_bps = 0;  // CBR only
  std::uint32_t packet_size = 1000;
  SimTime start = 0;
  SimTime stop = 0;
};

/// Emission instant of the k-th CBR packet, computed from k directly so the
/// schedule never accumulates rounding drift.
SimTime cbr_emission_time(const TrafficSource& source, std::uint64_t k);

/// Number of packets a CBR source emits in [start, stop).
std::uint64_t cbr_packet_count(const TrafficSource& source);

/// Nominal inter-send gap in microseconds (0 for greedy sources).
double nominal_interval_us(const TrafficSource& source);

}  // namespace mpdccp
