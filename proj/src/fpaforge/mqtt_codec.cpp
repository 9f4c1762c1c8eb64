#include "fpaforge/mqtt_codec.hpp"

#include <fmt/format.h>

#include "fpaforge/error.hpp"

namespace fpaforge {

std::string to_hex(ByteView data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0F]);
  }
  return out;
}

}  // namespace fpaforge

namespace fpaforge::mqtt {

namespace {

void put_string(Bytes& out, std::string_view s) {
  if (s.size() > kMaxStringBytes) fail(ErrorCode::TooLong, "string field exceeds 65535 bytes");
  put_u16(out, static_cast<std::uint16_t>(s.size()));
  append(out, as_bytes(s));
}

void put_binary(Bytes& out, ByteView b) {
  if (b.size() > kMaxStringBytes) fail(ErrorCode::TooLong, "binary field exceeds 65535 bytes");
  put_u16(out, static_cast<std::uint16_t>(b.size()));
  append(out, b);
}

// Expected low nibble of the first byte for every type except PUBLISH.
std::uint8_t fixed_flags(PacketType type) {
  switch (type) {
    case PacketType::Pubrel:
    case PacketType::Subscribe:
    case PacketType::Unsubscribe:
      return 0x02;
    default:
      return 0x00;
  }
}

// Reads a length-prefixed field out of `data` starting at `at`.
ByteView read_field(ByteView data, std::size_t& at, const char* what) {
  if (at + 2 > data.size()) fail(ErrorCode::ProtocolViolation, fmt::format("{} length truncated", what));
  const std::size_t len = get_u16(data, at);
  at += 2;
  if (at + len > data.size()) fail(ErrorCode::ProtocolViolation, fmt::format("{} truncated", what));
  auto field = data.subspan(at, len);
  at += len;
  return field;
}

std::size_t variable_header_size(PacketType type, std::uint8_t flags, ByteView body) {
  switch (type) {
    case PacketType::Connect: {
      if (body.size() < 2) fail(ErrorCode::ProtocolViolation, "CONNECT protocol name truncated");
      const std::size_t name_len = get_u16(body, 0);
      const std::size_t size = 2 + name_len + 4;
      if (body.size() < size) fail(ErrorCode::ProtocolViolation, "CONNECT variable header truncated");
      return size;
    }
    case PacketType::Publish: {
      if (body.size() < 2) fail(ErrorCode::ProtocolViolation, "PUBLISH topic length truncated");
      const int qos = (flags >> 1) & 0x03;
      const std::size_t size = 2 + get_u16(body, 0) + (qos > 0 ? 2 : 0);
      if (body.size() < size) fail(ErrorCode::ProtocolViolation, "PUBLISH variable header truncated");
      return size;
    }
    case PacketType::Connack:
    case PacketType::Puback:
    case PacketType::Pubrec:
    case PacketType::Pubrel:
    case PacketType::Pubcomp:
    case PacketType::Unsuback:
      if (body.size() != 2)
        fail(ErrorCode::ProtocolViolation,
             fmt::format("{} must have remaining length 2", to_string(type)));
      return 2;
    case PacketType::Subscribe:
    case PacketType::Suback:
    case PacketType::Unsubscribe:
      if (body.size() < 2)
        fail(ErrorCode::ProtocolViolation, fmt::format("{} packet identifier truncated", to_string(type)));
      return 2;
    case PacketType::Pingreq:
    case PacketType::Pingresp:
    case PacketType::Disconnect:
      if (!body.empty())
        fail(ErrorCode::ProtocolViolation,
             fmt::format("{} must have remaining length 0", to_string(type)));
      return 0;
  }
  fail(ErrorCode::UnknownType, "unknown packet type");
}

Packet assemble(PacketType type, std::uint8_t header, Bytes vh, Bytes payload) {
  const std::uint64_t total = static_cast<std::uint64_t>(vh.size()) + payload.size();
  if (total > kMaxRemainingLength)
    fail(ErrorCode::RangeError, fmt::format("remaining length {} exceeds {}", total, kMaxRemainingLength));
  Packet pkt;
  pkt.type = type;
  pkt.header_flags = header;
  pkt.remaining_length = static_cast<std::uint32_t>(total);
  pkt.variable_header = std::move(vh);
  pkt.payload = std::move(payload);
  return pkt;
}

}  // namespace

std::string_view to_string(PacketType type) noexcept {
  switch (type) {
    case PacketType::Connect: return "CONNECT";
    case PacketType::Connack: return "CONNACK";
    case PacketType::Publish: return "PUBLISH";
    case PacketType::Puback: return "PUBACK";
    case PacketType::Pubrec: return "PUBREC";
    case PacketType::Pubrel: return "PUBREL";
    case PacketType::Pubcomp: return "PUBCOMP";
    case PacketType::Subscribe: return "SUBSCRIBE";
    case PacketType::Suback: return "SUBACK";
    case PacketType::Unsubscribe: return "UNSUBSCRIBE";
    case PacketType::Unsuback: return "UNSUBACK";
    case PacketType::Pingreq: return "PINGREQ";
    case PacketType::Pingresp: return "PINGRESP";
    case PacketType::Disconnect: return "DISCONNECT";
  }
  return "UNKNOWN";
}

Bytes encode_remaining_length(std::uint64_t len) {
  if (len > kMaxRemainingLength)
    fail(ErrorCode::RangeError, fmt::format("remaining length {} exceeds {}", len, kMaxRemainingLength));
  Bytes out;
  do {
    auto digit = static_cast<std::uint8_t>(len % 128);
    len /= 128;
    if (len > 0) digit |= 0x80;
    out.push_back(digit);
  } while (len > 0);
  return out;
}

VarintResult decode_remaining_length(ByteView bytes) {
  std::uint32_t value = 0;
  std::uint32_t multiplier = 1;
  for (std::size_t i = 0; i < 4; ++i) {
    if (i >= bytes.size()) fail(ErrorCode::Incomplete, "remaining length truncated");
    const std::uint8_t b = bytes[i];
    value += (b & 0x7F) * multiplier;
    if ((b & 0x80) == 0) return {value, i + 1};
    multiplier *= 128;
  }
  fail(ErrorCode::MalformedLength, "remaining length continues past 4 bytes");
}

std::size_t remaining_length_size(std::uint32_t len) {
  if (len < 128) return 1;
  if (len < 16'384) return 2;
  if (len < 2'097'152) return 3;
  if (len <= kMaxRemainingLength) return 4;
  fail(ErrorCode::RangeError, fmt::format("remaining length {} exceeds {}", len, kMaxRemainingLength));
}

void validate_utf8(std::string_view text) {
  auto bad = [](std::size_t at) {
    fail(ErrorCode::InvalidUtf8, fmt::format("invalid UTF-8 at byte {}", at));
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t extra = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      if (c == 0) bad(i);
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      bad(i);
    }
    if (i + extra >= text.size()) bad(i);
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xC0) != 0x80) bad(i + k);
      cp = (cp << 6) | (cc & 0x3F);
    }
    static constexpr std::uint32_t kMinForLength[] = {0, 0x80, 0x800, 0x10000};
    if (cp < kMinForLength[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) bad(i);
    i += extra + 1;
  }
}

void validate_topic(std::string_view topic) {
  if (topic.empty()) fail(ErrorCode::Empty, "topic name is empty");
  if (topic.size() > kMaxStringBytes)
    fail(ErrorCode::TooLong, fmt::format("topic name is {} bytes, limit 65535", topic.size()));
  validate_utf8(topic);
  if (topic.find_first_of("+#") != std::string_view::npos)
    fail(ErrorCode::WildcardInTopic, fmt::format("topic '{}' contains a wildcard", topic));
  if (topic.front() == '$') fail(ErrorCode::LeadingDollar, fmt::format("topic '{}' starts with '$'", topic));
}

std::uint8_t connect_flags(const ConnectOptions& o) noexcept {
  return static_cast<std::uint8_t>((o.username_flag << 7) | (o.password_flag << 6) | (o.will_retain << 5) |
                                   ((o.will_qos & 0x03) << 3) | (o.will_flag << 2) |
                                   (o.clean_session << 1) | (o.reserved ? 1 : 0));
}

Packet build_connect(const ConnectOptions& o) {
  if (o.reserved) fail(ErrorCode::ProtocolViolation, "CONNECT reserved flag must be zero");
  if (o.will_qos > 2) fail(ErrorCode::ProtocolViolation, "will QoS 3 is not a valid level");
  if (!o.will_flag && (o.will_qos != 0 || o.will_retain))
    fail(ErrorCode::ProtocolViolation, "will QoS and will retain require the will flag");
  if (o.password_flag && !o.username_flag)
    fail(ErrorCode::ProtocolViolation, "password flag requires the user name flag");

  Bytes vh;
  put_string(vh, "MQTT");
  put_u8(vh, kProtocolLevel);
  put_u8(vh, connect_flags(o));
  put_u16(vh, o.keep_alive);

  Bytes payload;
  validate_utf8(o.client_id);
  put_string(payload, o.client_id);
  if (o.will_flag) {
    validate_topic(o.will_topic);
    put_string(payload, o.will_topic);
    put_binary(payload, o.will_message);
  }
  if (o.username_flag) {
    validate_utf8(o.username);
    put_string(payload, o.username);
  }
  if (o.password_flag) put_binary(payload, o.password);
  return assemble(PacketType::Connect, 0x10, std::move(vh), std::move(payload));
}

Packet build_publish(const PublishOptions& o) {
  if (o.qos == 2) fail(ErrorCode::UnsupportedQoS, "QoS 2 publishes are not supported");
  if (o.qos < 0 || o.qos > 2) fail(ErrorCode::ProtocolViolation, fmt::format("QoS {} is not a valid level", o.qos));
  validate_topic(o.topic);
  if (o.qos == 1 && !o.msgid) fail(ErrorCode::ProtocolViolation, "QoS 1 publish requires a packet identifier");
  if (o.qos == 0 && o.msgid) fail(ErrorCode::ProtocolViolation, "QoS 0 publish must not carry a packet identifier");
  if (o.msgid && *o.msgid == 0) fail(ErrorCode::ProtocolViolation, "packet identifier must be non-zero");

  Bytes vh;
  put_string(vh, o.topic);
  if (o.msgid) put_u16(vh, *o.msgid);
  const auto header = static_cast<std::uint8_t>(0x30 | (o.dup << 3) | (o.qos << 1) | (o.retain ? 1 : 0));
  return assemble(PacketType::Publish, header, std::move(vh), o.payload);
}

Packet build_pingreq() { return assemble(PacketType::Pingreq, 0xC0, {}, {}); }

namespace server {

Packet build_connack(bool session_present, std::uint8_t return_code) {
  return assemble(PacketType::Connack, 0x20, Bytes{static_cast<std::uint8_t>(session_present ? 1 : 0), return_code},
                  {});
}

Packet build_puback(std::uint16_t msgid) {
  Bytes vh;
  put_u16(vh, msgid);
  return assemble(PacketType::Puback, 0x40, std::move(vh), {});
}

}  // namespace server

Bytes encode_packet(const Packet& pkt) {
  const auto type_nibble = static_cast<std::uint8_t>(pkt.header_flags >> 4);
  if (type_nibble != static_cast<std::uint8_t>(pkt.type))
    fail(ErrorCode::EncodeError, "header byte does not match packet type");
  if (pkt.remaining_length != pkt.variable_header.size() + pkt.payload.size())
    fail(ErrorCode::EncodeError, fmt::format("remaining length {} disagrees with {} header + {} payload bytes",
                                             pkt.remaining_length, pkt.variable_header.size(), pkt.payload.size()));
  if (pkt.remaining_length > kMaxRemainingLength) fail(ErrorCode::EncodeError, "remaining length out of range");
  if (pkt.type == PacketType::Publish) {
    if (((pkt.header_flags >> 1) & 0x03) == 0x03) fail(ErrorCode::EncodeError, "both QoS bits set");
  } else if ((pkt.header_flags & 0x0F) != fixed_flags(pkt.type)) {
    fail(ErrorCode::EncodeError, "reserved fixed-header flags are wrong");
  }
  Bytes out;
  out.reserve(1 + 4 + pkt.remaining_length);
  out.push_back(pkt.header_flags);
  append(out, encode_remaining_length(pkt.remaining_length));
  append(out, pkt.variable_header);
  append(out, pkt.payload);
  return out;
}

std::optional<DecodeResult> try_decode_packet(ByteView bytes) {
  if (bytes.empty()) return std::nullopt;
  const std::uint8_t first = bytes[0];
  const std::uint8_t type_nibble = first >> 4;
  if (type_nibble == 0 || type_nibble == 15)
    fail(ErrorCode::UnknownType, fmt::format("control packet type {} is reserved", type_nibble));
  const auto type = static_cast<PacketType>(type_nibble);
  if (type == PacketType::Publish) {
    if (((first >> 1) & 0x03) == 0x03) fail(ErrorCode::ProtocolViolation, "PUBLISH with both QoS bits set");
  } else if ((first & 0x0F) != fixed_flags(type)) {
    fail(ErrorCode::ProtocolViolation, fmt::format("{} has invalid fixed-header flags", to_string(type)));
  }

  VarintResult len;
  try {
    len = decode_remaining_length(bytes.subspan(1));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Incomplete) return std::nullopt;
    throw;
  }
  const std::size_t total = 1 + len.consumed + len.value;
  if (bytes.size() < total) return std::nullopt;

  auto body = bytes.subspan(1 + len.consumed, len.value);
  const std::size_t vh_size = variable_header_size(type, first, body);
  DecodeResult result;
  result.packet.type = type;
  result.packet.header_flags = first;
  result.packet.remaining_length = len.value;
  result.packet.variable_header.assign(body.begin(), body.begin() + static_cast<std::ptrdiff_t>(vh_size));
  result.packet.payload.assign(body.begin() + static_cast<std::ptrdiff_t>(vh_size), body.end());
  result.consumed = total;
  return result;
}

Packet decode_packet(ByteView bytes) {
  auto result = try_decode_packet(bytes);
  if (!result) fail(ErrorCode::Incomplete, "packet truncated");
  if (result->consumed != bytes.size())
    fail(ErrorCode::ProtocolViolation,
         fmt::format("{} trailing bytes after packet", bytes.size() - result->consumed));
  return std::move(result->packet);
}

PublishView parse_publish(const Packet& pkt) {
  if (pkt.type != PacketType::Publish) fail(ErrorCode::InvalidArgument, "not a PUBLISH packet");
  PublishView view;
  view.dup = (pkt.header_flags & 0x08) != 0;
  view.qos = (pkt.header_flags >> 1) & 0x03;
  view.retain = (pkt.header_flags & 0x01) != 0;
  std::size_t at = 0;
  view.topic = fpaforge::to_string(read_field(pkt.variable_header, at, "topic"));
  if (view.qos > 0) {
    if (at + 2 > pkt.variable_header.size()) fail(ErrorCode::ProtocolViolation, "packet identifier truncated");
    view.msgid = get_u16(pkt.variable_header, at);
  }
  view.payload = pkt.payload;
  return view;
}

ConnectView parse_connect(const Packet& pkt) {
  if (pkt.type != PacketType::Connect) fail(ErrorCode::InvalidArgument, "not a CONNECT packet");
  ConnectView view;
  std::size_t at = 0;
  const ByteView vh = pkt.variable_header;
  view.protocol_name = fpaforge::to_string(read_field(vh, at, "protocol name"));
  view.protocol_level = vh[at];
  view.flags = vh[at + 1];
  view.keep_alive = get_u16(vh, at + 2);

  const ByteView body = pkt.payload;
  at = 0;
  view.client_id = fpaforge::to_string(read_field(body, at, "client identifier"));
  if (view.flags & 0x04) {
    read_field(body, at, "will topic");
    read_field(body, at, "will message");
  }
  if (view.flags & 0x80) view.username = fpaforge::to_string(read_field(body, at, "user name"));
  if (view.flags & 0x40) {
    auto pw = read_field(body, at, "password");
    view.password = Bytes(pw.begin(), pw.end());
  }
  return view;
}

std::uint8_t connack_flags(const Packet& pkt) {
  if (pkt.type != PacketType::Connack) fail(ErrorCode::InvalidArgument, "not a CONNACK packet");
  return pkt.variable_header.at(0);
}

std::uint8_t connack_return_code(const Packet& pkt) {
  if (pkt.type != PacketType::Connack) fail(ErrorCode::InvalidArgument, "not a CONNACK packet");
  return pkt.variable_header.at(1);
}

std::uint16_t packet_identifier(const Packet& pkt) {
  switch (pkt.type) {
    case PacketType::Puback:
    case PacketType::Pubrec:
    case PacketType::Pubrel:
    case PacketType::Pubcomp:
    case PacketType::Subscribe:
    case PacketType::Suback:
    case PacketType::Unsubscribe:
    case PacketType::Unsuback:
      return get_u16(pkt.variable_header, 0);
    case PacketType::Publish:
      if (auto id = parse_publish(pkt).msgid) return *id;
      fail(ErrorCode::InvalidArgument, "QoS 0 PUBLISH has no packet identifier");
    default:
      fail(ErrorCode::InvalidArgument, fmt::format("{} has no packet identifier", to_string(pkt.type)));
  }
}

}  // namespace fpaforge::mqtt
