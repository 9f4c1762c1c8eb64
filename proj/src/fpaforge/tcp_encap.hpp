#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "fpaforge/bytes.hpp"

namespace fpaforge::net {

inline constexpr std::size_t kDefaultMss = 1460;
inline constexpr std::size_t kTcpHeaderBytes = 20;
inline constexpr std::uint16_t kDefaultWindow = 64240;
inline constexpr std::uint8_t kProtocolTcp = 6;

namespace tcp_flags {
inline constexpr std::uint8_t kFin = 0x01;
inline constexpr std::uint8_t kSyn = 0x02;
inline constexpr std::uint8_t kRst = 0x04;
inline constexpr std::uint8_t kPsh = 0x08;
inline constexpr std::uint8_t kAck = 0x10;
inline constexpr std::uint8_t kUrg = 0x20;
}  // namespace tcp_flags

struct Ipv4Address {
  std::uint32_t value = 0;  // host order

  static Ipv4Address parse(std::string_view dotted);
  static constexpr Ipv4Address from_octets(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
    return {(std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) | d};
  }
  std::array<std::uint8_t, 4> octets() const noexcept;
  std::string to_string() const;

  auto operator<=>(const Ipv4Address&) const = default;
};

// One direction of a TCP connection. `seq` is the next sequence number this
// side will send; `ack` the next byte expected from the peer.
struct SessionContext {
  Ipv4Address src_ip;
  Ipv4Address dst_ip;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 1883;
  std::uint32_t seq = 0;
  std::uint32_t ack = 0;
  bool established = false;

  bool operator==(const SessionContext&) const = default;
};

struct TcpSegment {
  SessionContext snapshot;  // addresses and counters at emission
  std::uint8_t flags = 0;
  std::uint16_t window = kDefaultWindow;
  Bytes payload;
  std::uint16_t checksum = 0;

  std::size_t tcp_len() const noexcept { return payload.size(); }
  // Header (checksum filled in) followed by payload.
  Bytes serialize() const;

  bool operator==(const TcpSegment&) const = default;
};

// MQTT remaining length of a PUBLISH: 2-byte topic length, topic, optional
// 2-byte packet identifier, payload.
std::uint32_t compute_mqtt_len(std::size_t topic_bytes, bool msgid_present, std::size_t payload_bytes);

// Two-branch segment size relation: +2 up to 255, +3 above, capped at the MSS.
// One byte below framed_mqtt_size for 128..255.
std::uint32_t compute_tcp_len(std::uint32_t mqtt_len, std::size_t mss = kDefaultMss);

// Exact length of the encoded packet: first byte, varint, body.
std::uint32_t framed_mqtt_size(std::uint32_t mqtt_len);

// Largest whitespace count that keeps the PUBLISH inside one segment. With
// `extended_length` unset the remaining length is also held to two varint
// bytes.
std::size_t max_padding_budget(std::size_t topic_bytes, bool msgid_present, std::size_t base_payload_bytes,
                               std::size_t mss = kDefaultMss, bool extended_length = false);

constexpr std::uint32_t next_seq(std::uint32_t prev_seq, std::size_t prev_len) noexcept {
  return static_cast<std::uint32_t>(prev_seq + static_cast<std::uint32_t>(prev_len));
}

// Folded 16-bit one's-complement sum, not yet complemented.
std::uint16_t ones_complement_sum(ByteView data, std::uint32_t initial = 0);

std::uint16_t tcp_checksum(Ipv4Address src, Ipv4Address dst, ByteView segment_bytes);
inline std::uint16_t tcp_checksum(const SessionContext& ctx, ByteView segment_bytes) {
  return tcp_checksum(ctx.src_ip, ctx.dst_ip, segment_bytes);
}
// Receiver-side check over a segment with its checksum in place.
bool verify_tcp_checksum(Ipv4Address src, Ipv4Address dst, ByteView segment_bytes);

// Builds a segment from the context's current counters without advancing them.
TcpSegment make_segment(const SessionContext& ctx, std::uint8_t flags, Bytes payload = {});

// SYN / SYN-ACK / pure ACK / FIN. SYN and FIN consume one sequence number.
TcpSegment control_segment(SessionContext& ctx, std::uint8_t flags);

// PSH|ACK segment carrying one complete MQTT packet; advances ctx.seq.
TcpSegment wrap_mqtt(SessionContext& ctx, ByteView mqtt_bytes, std::size_t mss = kDefaultMss);

}  // namespace fpaforge::net
