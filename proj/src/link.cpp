#include <algorithm>
#include <cmath>
#include <string>

#include "mpdccp/sim_core.hpp"

namespace mpdccp {

std::vector<std::string> validate(const PathModel& model) {
  std::vector<std::string> errors;
  const std::string prefix = "path " + std::to_string(model.id) + ": ";
  if (model.one_way_latency < 0) errors.push_back(prefix + "latency must be >= 0");
  if (model.bandwidth_bps == 0) errors.push_back(prefix + "bandwidth must be > 0");
  if (!(model.loss_rate >= 0.0 && model.loss_rate <= 1.0)) {
    errors.push_back(prefix + "loss_rate must lie in [0, 1]");
  }
  if (!(model.cost >= 0.0)) errors.push_back(prefix + "cost must be >= 0");
  for (std::size_t i = 0; i < model.events.size(); ++i) {
    const auto& ev = model.events[i];
    if (ev.at < 0) errors.push_back(prefix + "latency event time must be >= 0");
    if (ev.latency < 0) errors.push_back(prefix + "latency event value must be >= 0");
    if (i > 0 && ev.at <= model.events[i - 1].at) {
      errors.push_back(prefix + "latency events must be strictly increasing in time");
    }
  }
  return errors;
}

Duration serialization_time(std::size_t bytes, std::uint64_t bandwidth_bps) {
  const std::uint64_t bits_us = static_cast<std::uint64_t>(bytes) * 8u * 1'000'000u;
  return static_cast<Duration>((bits_us + bandwidth_bps - 1) / bandwidth_bps);
}

std::uint64_t path_seed(std::uint64_t scenario_seed, PathId path) {
  // splitmix64 finalizer over (seed, path)
  std::uint64_t z = scenario_seed + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(path) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

Link::Link(PathModel model, std::uint64_t seed)
    : model_(std::move(model)), latency_(model_.one_way_latency), rng_(seed) {}

bool Link::draw_loss() {
  // 53-bit uniform in [0, 1); avoids the implementation-defined
  // std::bernoulli_distribution so loss sequences match across platforms.
  const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  return u < model_.loss_rate;
}

std::optional<SimTime> Link::transmit(std::size_t bytes, SimTime now) {
  while (!serializing_.empty() && serializing_.front() <= now) serializing_.pop_front();

  const SimTime start = std::max(now, busy_until_);
  busy_until_ = start + serialization_time(bytes, model_.bandwidth_bps);
  serializing_.push_back(busy_until_);

  const bool lost = draw_loss();
  if (lost) return std::nullopt;

  const SimTime delivery = std::max(busy_until_ + latency_, last_delivery_);
  last_delivery_ = delivery;
  return delivery;
}

SimTime Link::ack_arrival(SimTime now) {
  last_ack_ = std::max(now + latency_, last_ack_);
  return last_ack_;
}

std::size_t Link::backlog(SimTime now) const {
  const auto first_pending = std::upper_bound(serializing_.begin(), serializing_.end(), now);
  return static_cast<std::size_t>(std::distance(first_pending, serializing_.end()));
}

}  // namespace mpdccp
