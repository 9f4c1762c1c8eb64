#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "fpaforge/bytes.hpp"
#include "fpaforge/tcp_encap.hpp"

namespace fpaforge::capture {

inline constexpr std::uint32_t kPcapMagic = 0xa1b2c3d4;
inline constexpr std::uint32_t kPcapMagicSwapped = 0xd4c3b2a1;
inline constexpr std::uint16_t kPcapVersionMajor = 2;
inline constexpr std::uint16_t kPcapVersionMinor = 4;
inline constexpr std::uint32_t kPcapSnaplen = 65535;
inline constexpr std::uint32_t kLinktypeEthernet = 1;
inline constexpr std::size_t kPcapGlobalHeaderBytes = 24;
inline constexpr std::size_t kPcapRecordHeaderBytes = 16;

inline constexpr std::size_t kEthernetHeaderBytes = 14;
inline constexpr std::size_t kIpv4HeaderBytes = 20;
inline constexpr std::uint16_t kEthertypeIpv4 = 0x0800;
inline constexpr std::uint8_t kIpTtl = 64;

using MacAddress = std::array<std::uint8_t, 6>;

struct Timestamp {
  std::uint32_t sec = 0;
  std::uint32_t usec = 0;

  static Timestamp from_micros(std::uint64_t micros) {
    return {static_cast<std::uint32_t>(micros / 1'000'000), static_cast<std::uint32_t>(micros % 1'000'000)};
  }
  std::uint64_t micros() const noexcept { return std::uint64_t{sec} * 1'000'000 + usec; }

  auto operator<=>(const Timestamp&) const = default;
};

struct CaptureFrame {
  Timestamp ts;
  Bytes link_bytes;

  bool operator==(const CaptureFrame&) const = default;
};

// Locally administered MAC derived from an IPv4 address: 02:00:a:b:c:d.
MacAddress mac_for(net::Ipv4Address ip) noexcept;

std::uint16_t ipv4_header_checksum(ByteView header);

// Ethernet II + IPv4 (no options, DF, TTL 64) + the segment's TCP bytes.
CaptureFrame frame_packet(const net::TcpSegment& seg, Timestamp ts);

Bytes serialize_pcap(std::span<const CaptureFrame> frames);
std::vector<CaptureFrame> parse_pcap(ByteView file_bytes);

void write_pcap(std::span<const CaptureFrame> frames, const std::filesystem::path& path);
std::vector<CaptureFrame> read_pcap(const std::filesystem::path& path);

struct DissectedFrame {
  MacAddress eth_src{};
  MacAddress eth_dst{};
  std::uint8_t ip_header_len = 0;
  std::uint16_t ip_total_length = 0;
  std::uint16_t ip_id = 0;
  std::uint16_t ip_flags_fragment = 0;
  std::uint8_t ip_ttl = 0;
  std::uint8_t ip_protocol = 0;
  std::uint16_t ip_checksum = 0;
  bool ip_checksum_ok = false;
  net::Ipv4Address ip_src;
  net::Ipv4Address ip_dst;

  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint32_t seq = 0;
  std::uint32_t ack = 0;
  std::uint8_t tcp_header_len = 0;
  std::uint16_t tcp_flags = 0;  // 12 bits including NS/CWR/ECE
  std::uint16_t window = 0;
  std::uint16_t tcp_checksum = 0;
  bool tcp_checksum_ok = false;
  std::uint16_t urgent = 0;
  Bytes tcp_options;
  Bytes payload;
};

// nullopt for frames that are not well-formed Ethernet/IPv4/TCP.
std::optional<DissectedFrame> dissect(const CaptureFrame& frame);

}  // namespace fpaforge::capture
