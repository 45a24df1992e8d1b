#include <limits>
#include <stdexcept>
#include <string>

#include "mpdccp/flow.hpp"

namespace mpdccp {

namespace {

void put_be(std::uint8_t* out, std::uint64_t value, std::size_t width) {
  for (std::size_t i = 0; i < width; ++i) {
    out[width - 1 - i] = static_cast<std::uint8_t>(value >> (8 * i));
  }
}

std::uint64_t get_be(const std::uint8_t* in, std::size_t width) {
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < width; ++i) value = (value << 8) | in[i];
  return value;
}

}  // namespace

HeaderBytes encode_header(const TunnelPacket& packet) {
  HeaderBytes out{};
  out[0] = kHeaderVersion;
  out[1] = packet.path_id;
  put_be(out.data() + 2, packet.overall_seq & kSeqMask, 6);
  put_be(out.data() + 8, packet.sender_rtt_report, 4);
  put_be(out.data() + 12, packet.flow_seq & 0xFFFFFFFFu, 4);
  return out;
}

HeaderFields decode_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) {
    throw std::invalid_argument("tunnel header needs " + std::to_string(kHeaderSize) +
                                " bytes, got " + std::to_string(bytes.size()));
  }
  HeaderFields fields;
  fields.version = bytes[0];
  if (fields.version != kHeaderVersion) {
    throw std::invalid_argument("unsupported tunnel header version " +
                                std::to_string(fields.version));
  }
  fields.path_id = bytes[1];
  fields.overall_seq = get_be(bytes.data() + 2, 6);
  fields.sender_rtt_report = static_cast<std::uint32_t>(get_be(bytes.data() + 8, 4));
  fields.flow_seq_low32 = static_cast<std::uint32_t>(get_be(bytes.data() + 12, 4));
  return fields;
}

std::uint32_t saturate_rtt_report(Duration rtt) {
  if (rtt <= 0) return 0;
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  return rtt >= static_cast<Duration>(kMax) ? kMax : static_cast<std::uint32_t>(rtt);
}

std::uint64_t unwrap_seq48(std::uint64_t reference, std::uint64_t wire) {
  wire &= kSeqMask;
  const std::uint64_t base = reference & ~kSeqMask;
  std::uint64_t candidate = base | wire;
  constexpr std::uint64_t kHalf = kSeqModulus / 2;
  if (candidate + kHalf < reference) {
    candidate += kSeqModulus;
  } else if (candidate > reference + kHalf && candidate >= kSeqModulus) {
    candidate -= kSeqModulus;
  }
  return candidate;
}

}  // namespace mpdccp
