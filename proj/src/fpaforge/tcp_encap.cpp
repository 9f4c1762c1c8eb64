#include "fpaforge/tcp_encap.hpp"

#include <charconv>

#include <fmt/format.h>

#include "fpaforge/error.hpp"
#include "fpaforge/mqtt_codec.hpp"

namespace fpaforge::net {

Ipv4Address Ipv4Address::parse(std::string_view dotted) {
  std::uint32_t value = 0;
  const char* p = dotted.data();
  const char* end = dotted.data() + dotted.size();
  for (int i = 0; i < 4; ++i) {
    unsigned octet = 0;
    auto [next, ec] = std::from_chars(p, end, octet);
    if (ec != std::errc{} || next == p || octet > 255 || next - p > 3)
      fail(ErrorCode::InvalidArgument, fmt::format("'{}' is not a dotted IPv4 address", dotted));
    value = (value << 8) | octet;
    p = next;
    if (i < 3) {
      if (p == end || *p != '.') fail(ErrorCode::InvalidArgument, fmt::format("'{}' is not a dotted IPv4 address", dotted));
      ++p;
    }
  }
  if (p != end) fail(ErrorCode::InvalidArgument, fmt::format("'{}' is not a dotted IPv4 address", dotted));
  return {value};
}

std::array<std::uint8_t, 4> Ipv4Address::octets() const noexcept {
  return {static_cast<std::uint8_t>(value >> 24), static_cast<std::uint8_t>(value >> 16),
          static_cast<std::uint8_t>(value >> 8), static_cast<std::uint8_t>(value)};
}

std::string Ipv4Address::to_string() const {
  auto o = octets();
  return fmt::format("{}.{}.{}.{}", o[0], o[1], o[2], o[3]);
}

std::uint32_t compute_mqtt_len(std::size_t topic_bytes, bool msgid_present, std::size_t payload_bytes) {
  if (topic_bytes == 0) fail(ErrorCode::RangeError, "topic must be at least one byte");
  const std::uint64_t len = 2ULL + topic_bytes + (msgid_present ? 2ULL : 0ULL) + payload_bytes;
  if (len > mqtt::kMaxRemainingLength)
    fail(ErrorCode::RangeError, fmt::format("remaining length {} exceeds {}", len, mqtt::kMaxRemainingLength));
  return static_cast<std::uint32_t>(len);
}

std::uint32_t compute_tcp_len(std::uint32_t mqtt_len, std::size_t mss) {
  const std::uint64_t len = mqtt_len + (mqtt_len <= 255 ? 2ULL : 3ULL);
  if (len > mss) fail(ErrorCode::MssExceeded, fmt::format("segment of {} bytes exceeds MSS {}", len, mss));
  return static_cast<std::uint32_t>(len);
}

std::uint32_t framed_mqtt_size(std::uint32_t mqtt_len) {
  return static_cast<std::uint32_t>(1 + mqtt::remaining_length_size(mqtt_len) + mqtt_len);
}

std::size_t max_padding_budget(std::size_t topic_bytes, bool msgid_present, std::size_t base_payload_bytes,
                               std::size_t mss, bool extended_length) {
  const std::uint32_t base = compute_mqtt_len(topic_bytes, msgid_present, base_payload_bytes);
  // Largest remaining length whose framed size fits the MSS.
  std::uint64_t limit = mss >= 2 ? mss - 2 : 0;
  if (!extended_length) limit = std::min<std::uint64_t>(limit, 16'383);
  limit = std::min<std::uint64_t>(limit, mqtt::kMaxRemainingLength);
  while (limit > 0 && framed_mqtt_size(static_cast<std::uint32_t>(limit)) > mss) --limit;
  if (framed_mqtt_size(static_cast<std::uint32_t>(limit)) > mss || base > limit)
    fail(ErrorCode::MssExceeded,
         fmt::format("base PUBLISH of remaining length {} already exceeds MSS {}", base, mss));
  return static_cast<std::size_t>(limit - base);
}

std::uint16_t ones_complement_sum(ByteView data, std::uint32_t initial) {
  std::uint64_t sum = initial;
  std::size_t i = 0;
  for (; i + 1 < data.size(); i += 2) sum += (std::uint32_t{data[i]} << 8) | data[i + 1];
  if (i < data.size()) sum += std::uint32_t{data[i]} << 8;
  while (sum >> 16) sum = (sum & 0xFFFF) + (sum >> 16);
  return static_cast<std::uint16_t>(sum);
}

namespace {

std::uint32_t pseudo_header_sum(Ipv4Address src, Ipv4Address dst, std::size_t tcp_length) {
  std::uint32_t sum = 0;
  sum += src.value >> 16;
  sum += src.value & 0xFFFF;
  sum += dst.value >> 16;
  sum += dst.value & 0xFFFF;
  sum += kProtocolTcp;
  sum += static_cast<std::uint32_t>(tcp_length);
  return sum;
}

Bytes serialize_header(const TcpSegment& seg, std::uint16_t checksum) {
  Bytes out;
  out.reserve(kTcpHeaderBytes + seg.payload.size());
  put_u16(out, seg.snapshot.src_port);
  put_u16(out, seg.snapshot.dst_port);
  put_u32(out, seg.snapshot.seq);
  put_u32(out, (seg.flags & tcp_flags::kAck) ? seg.snapshot.ack : 0);
  put_u8(out, static_cast<std::uint8_t>((kTcpHeaderBytes / 4) << 4));
  put_u8(out, seg.flags);
  put_u16(out, seg.window);
  put_u16(out, checksum);
  put_u16(out, 0);  // urgent pointer
  return out;
}

}  // namespace

std::uint16_t tcp_checksum(Ipv4Address src, Ipv4Address dst, ByteView segment_bytes) {
  const std::uint16_t sum = ones_complement_sum(segment_bytes, pseudo_header_sum(src, dst, segment_bytes.size()));
  return static_cast<std::uint16_t>(~sum);
}

bool verify_tcp_checksum(Ipv4Address src, Ipv4Address dst, ByteView segment_bytes) {
  return ones_complement_sum(segment_bytes, pseudo_header_sum(src, dst, segment_bytes.size())) == 0xFFFF;
}

Bytes TcpSegment::serialize() const {
  Bytes out = serialize_header(*this, checksum);
  append(out, payload);
  return out;
}

TcpSegment make_segment(const SessionContext& ctx, std::uint8_t flags, Bytes payload) {
  TcpSegment seg;
  seg.snapshot = ctx;
  seg.flags = flags;
  seg.payload = std::move(payload);
  Bytes wire = serialize_header(seg, 0);
  append(wire, seg.payload);
  seg.checksum = tcp_checksum(ctx, wire);
  return seg;
}

TcpSegment control_segment(SessionContext& ctx, std::uint8_t flags) {
  TcpSegment seg = make_segment(ctx, flags);
  if (flags & (tcp_flags::kSyn | tcp_flags::kFin)) ctx.seq = next_seq(ctx.seq, 1);
  return seg;
}

TcpSegment wrap_mqtt(SessionContext& ctx, ByteView mqtt_bytes, std::size_t mss) {
  if (!ctx.established) fail(ErrorCode::NotEstablished, "TCP session is not established");
  if (mqtt_bytes.size() > mss)
    fail(ErrorCode::MssExceeded, fmt::format("segment of {} bytes exceeds MSS {}", mqtt_bytes.size(), mss));
  if (mqtt_bytes.size() < 2) fail(ErrorCode::EncodeError, "MQTT packet shorter than a fixed header");
  const auto len = mqtt::decode_remaining_length(mqtt_bytes.subspan(1));
  if (framed_mqtt_size(len.value) != mqtt_bytes.size())
    fail(ErrorCode::EncodeError, fmt::format("segment holds {} bytes but the packet frames to {}",
                                             mqtt_bytes.size(), framed_mqtt_size(len.value)));
  TcpSegment seg = make_segment(ctx, tcp_flags::kPsh | tcp_flags::kAck, Bytes(mqtt_bytes.begin(), mqtt_bytes.end()));
  ctx.seq = next_seq(ctx.seq, mqtt_bytes.size());
  return seg;
}

}  // namespace fpaforge::net
