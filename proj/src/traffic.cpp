#include "mpdccp/sim_core.hpp"

namespace mpdccp {

namespace {

__extension__ using u128 = unsigned __int128;

std::uint64_t bit_microseconds(const TrafficSource& source) {
  return static_cast<std::uint64_t>(source.packet_size) * 8u * 1'000'000u;
}

}  // namespace

SimTime cbr_emission_time(const TrafficSource& source, std::uint64_t k) {
  const u128 offset =
      static_cast<u128>(k) * bit_microseconds(source) / source.rate_bps;
  return source.start + static_cast<SimTime>(offset);
}

std::uint64_t cbr_packet_count(const TrafficSource& source) {
  if (source.kind != TrafficKind::Cbr || source.stop <= source.start || source.rate_bps == 0) {
    return 0;
  }
  // smallest k with emission_time(k) >= stop
  const u128 span =
      static_cast<u128>(source.stop - source.start) * source.rate_bps;
  const std::uint64_t per = bit_microseconds(source);
  return static_cast<std::uint64_t>((span + per - 1) / per);
}

double nominal_interval_us(const TrafficSource& source) {
  if (source.kind != TrafficKind::Cbr || source.rate_bps == 0) return 0.0;
  return static_cast<double>(bit_microseconds(source)) / static_cast<double>(source.rate_bps);
}

}  // namespace mpdccp
