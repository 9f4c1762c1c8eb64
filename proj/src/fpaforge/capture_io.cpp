#include "fpaforge/capture_io.hpp"

#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "fpaforge/error.hpp"

namespace fpaforge::capture {

MacAddress mac_for(net::Ipv4Address ip) noexcept {
  auto o = ip.octets();
  return {0x02, 0x00, o[0], o[1], o[2], o[3]};
}

std::uint16_t ipv4_header_checksum(ByteView header) {
  return static_cast<std::uint16_t>(~net::ones_complement_sum(header));
}

CaptureFrame frame_packet(const net::TcpSegment& seg, Timestamp ts) {
  const auto& ctx = seg.snapshot;
  const Bytes tcp = seg.serialize();

  Bytes frame;
  frame.reserve(kEthernetHeaderBytes + kIpv4HeaderBytes + tcp.size());
  auto dst_mac = mac_for(ctx.dst_ip);
  auto src_mac = mac_for(ctx.src_ip);
  frame.insert(frame.end(), dst_mac.begin(), dst_mac.end());
  frame.insert(frame.end(), src_mac.begin(), src_mac.end());
  put_u16(frame, kEthertypeIpv4);

  const std::size_t ip_start = frame.size();
  put_u8(frame, 0x45);
  put_u8(frame, 0x00);
  put_u16(frame, static_cast<std::uint16_t>(kIpv4HeaderBytes + tcp.size()));
  put_u16(frame, 0);       // identification
  put_u16(frame, 0x4000);  // DF
  put_u8(frame, kIpTtl);
  put_u8(frame, net::kProtocolTcp);
  put_u16(frame, 0);
  put_u32(frame, ctx.src_ip.value);
  put_u32(frame, ctx.dst_ip.value);
  const std::uint16_t csum = ipv4_header_checksum(ByteView(frame).subspan(ip_start, kIpv4HeaderBytes));
  frame[ip_start + 10] = static_cast<std::uint8_t>(csum >> 8);
  frame[ip_start + 11] = static_cast<std::uint8_t>(csum);

  append(frame, tcp);
  return {ts, std::move(frame)};
}

namespace {

void put_u16_le(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32_le(Bytes& out, std::uint32_t v) {
  put_u16_le(out, static_cast<std::uint16_t>(v));
  put_u16_le(out, static_cast<std::uint16_t>(v >> 16));
}

std::uint32_t get_u32_le(ByteView in, std::size_t at) {
  return std::uint32_t{in[at]} | (std::uint32_t{in[at + 1]} << 8) | (std::uint32_t{in[at + 2]} << 16) |
         (std::uint32_t{in[at + 3]} << 24);
}

}  // namespace

Bytes serialize_pcap(std::span<const CaptureFrame> frames) {
  Bytes out;
  put_u32_le(out, kPcapMagic);
  put_u16_le(out, kPcapVersionMajor);
  put_u16_le(out, kPcapVersionMinor);
  put_u32_le(out, 0);  // thiszone
  put_u32_le(out, 0);  // sigfigs
  put_u32_le(out, kPcapSnaplen);
  put_u32_le(out, kLinktypeEthernet);
  for (const auto& f : frames) {
    if (f.ts.usec >= 1'000'000) fail(ErrorCode::InvalidArgument, "timestamp microseconds out of range");
    const auto len = static_cast<std::uint32_t>(f.link_bytes.size());
    put_u32_le(out, f.ts.sec);
    put_u32_le(out, f.ts.usec);
    put_u32_le(out, len);
    put_u32_le(out, len);
    append(out, f.link_bytes);
  }
  return out;
}

std::vector<CaptureFrame> parse_pcap(ByteView data) {
  if (data.size() < kPcapGlobalHeaderBytes) {
    if (data.size() >= 4 && get_u32_le(data, 0) != kPcapMagic && get_u32_le(data, 0) != kPcapMagicSwapped)
      fail(ErrorCode::BadMagic, fmt::format("unsupported pcap magic 0x{:08x}", get_u32_le(data, 0)));
    fail(ErrorCode::TruncatedRecord, "pcap global header truncated");
  }
  const std::uint32_t magic = get_u32_le(data, 0);
  bool swapped;
  if (magic == kPcapMagic) {
    swapped = false;
  } else if (magic == kPcapMagicSwapped) {
    swapped = true;
  } else {
    fail(ErrorCode::BadMagic, fmt::format("unsupported pcap magic 0x{:08x}", magic));
  }
  auto u32 = [&](std::size_t at) { return swapped ? get_u32(data, at) : get_u32_le(data, at); };

  std::vector<CaptureFrame> frames;
  std::size_t at = kPcapGlobalHeaderBytes;
  while (at < data.size()) {
    const std::size_t index = frames.size();
    if (data.size() - at < kPcapRecordHeaderBytes)
      fail(ErrorCode::TruncatedRecord, fmt::format("record {} header truncated", index));
    CaptureFrame f;
    f.ts.sec = u32(at);
    f.ts.usec = u32(at + 4);
    const std::uint32_t incl = u32(at + 8);
    at += kPcapRecordHeaderBytes;
    if (data.size() - at < incl)
      fail(ErrorCode::TruncatedRecord,
           fmt::format("record {} truncated: {} of {} bytes present", index, data.size() - at, incl));
    f.link_bytes.assign(data.begin() + static_cast<std::ptrdiff_t>(at),
                        data.begin() + static_cast<std::ptrdiff_t>(at + incl));
    at += incl;
    frames.push_back(std::move(f));
  }
  return frames;
}

void write_pcap(std::span<const CaptureFrame> frames, const std::filesystem::path& path) {
  const Bytes bytes = serialize_pcap(frames);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, fmt::format("cannot open '{}' for writing", path.string()));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::Io, fmt::format("write to '{}' failed", path.string()));
}

std::vector<CaptureFrame> read_pcap(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, fmt::format("cannot open '{}'", path.string()));
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorCode::Io, fmt::format("read from '{}' failed", path.string()));
  return parse_pcap(bytes);
}

std::optional<DissectedFrame> dissect(const CaptureFrame& frame) {
  ByteView b = frame.link_bytes;
  if (b.size() < kEthernetHeaderBytes + kIpv4HeaderBytes) return std::nullopt;
  if (get_u16(b, 12) != kEthertypeIpv4) return std::nullopt;

  DissectedFrame d;
  std::copy_n(b.begin(), 6, d.eth_dst.begin());
  std::copy_n(b.begin() + 6, 6, d.eth_src.begin());

  ByteView ip = b.subspan(kEthernetHeaderBytes);
  if ((ip[0] >> 4) != 4) return std::nullopt;
  d.ip_header_len = static_cast<std::uint8_t>((ip[0] & 0x0F) * 4);
  if (d.ip_header_len < kIpv4HeaderBytes || ip.size() < d.ip_header_len) return std::nullopt;
  d.ip_total_length = get_u16(ip, 2);
  if (d.ip_total_length < d.ip_header_len || d.ip_total_length > ip.size()) return std::nullopt;
  d.ip_id = get_u16(ip, 4);
  d.ip_flags_fragment = get_u16(ip, 6);
  d.ip_ttl = ip[8];
  d.ip_protocol = ip[9];
  d.ip_checksum = get_u16(ip, 10);
  d.ip_checksum_ok = net::ones_complement_sum(ip.first(d.ip_header_len)) == 0xFFFF;
  d.ip_src = {get_u32(ip, 12)};
  d.ip_dst = {get_u32(ip, 16)};
  if (d.ip_protocol != net::kProtocolTcp) return std::nullopt;
  if ((d.ip_flags_fragment & 0x3FFF) != 0) return std::nullopt;

  ByteView tcp = ip.subspan(d.ip_header_len, d.ip_total_length - d.ip_header_len);
  if (tcp.size() < net::kTcpHeaderBytes) return std::nullopt;
  d.tcp_header_len = static_cast<std::uint8_t>((tcp[12] >> 4) * 4);
  if (d.tcp_header_len < net::kTcpHeaderBytes || d.tcp_header_len > tcp.size()) return std::nullopt;
  d.src_port = get_u16(tcp, 0);
  d.dst_port = get_u16(tcp, 2);
  d.seq = get_u32(tcp, 4);
  d.ack = get_u32(tcp, 8);
  d.tcp_flags = static_cast<std::uint16_t>(((tcp[12] & 0x01) << 8) | tcp[13]);
  d.window = get_u16(tcp, 14);
  d.tcp_checksum = get_u16(tcp, 16);
  d.urgent = get_u16(tcp, 18);
  d.tcp_checksum_ok = net::verify_tcp_checksum(d.ip_src, d.ip_dst, tcp);
  d.tcp_options.assign(tcp.begin() + net::kTcpHeaderBytes, tcp.begin() + d.tcp_header_len);
  d.payload.assign(tcp.begin() + d.tcp_header_len, tcp.end());
  return d;
}

}  // namespace fpaforge::capture
