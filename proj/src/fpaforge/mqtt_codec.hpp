#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "fpaforge/bytes.hpp"

// MQTT v3.1.1 control packets at the byte level.
namespace fpaforge::mqtt {

inline constexpr std::uint32_t kMaxRemainingLength = 268'435'455;
inline constexpr std::size_t kMaxStringBytes = 65'535;
inline constexpr std::uint16_t kDefaultPort = 1883;
inline constexpr std::uint16_t kTlsPort = 8883;
inline constexpr std::uint8_t kProtocolLevel = 0x04;

enum class PacketType : std::uint8_t {
  Connect = 1,
  Connack = 2,
  Publish = 3,
  Puback = 4,
  Pubrec = 5,
  Pubrel = 6,
  Pubcomp = 7,
  Subscribe = 8,
  Suback = 9,
  Unsubscribe = 10,
  Unsuback = 11,
  Pingreq = 12,
  Pingresp = 13,
  Disconnect = 14,
};

std::string_view to_string(PacketType type) noexcept;

struct Packet {
  PacketType type = PacketType::Pingreq;
  std::uint8_t header_flags = 0;  // the whole first fixed-header byte
  std::uint32_t remaining_length = 0;
  Bytes variable_header;
  Bytes payload;

  bool operator==(const Packet&) const = default;
};

struct ConnectOptions {
  bool username_flag = false;
  bool password_flag = false;
  bool will_retain = false;
  std::uint8_t will_qos = 0;
  bool will_flag = false;
  bool clean_session = true;
  // Must stay false; set only to build an invalid packet.
  bool reserved = false;
  std::uint16_t keep_alive = 0;
  std::string client_id;
  std::string username;
  Bytes password;
  std::string will_topic;
  Bytes will_message;
};

struct PublishOptions {
  bool dup = false;
  int qos = 0;
  bool retain = false;
  std::string topic;
  std::optional<std::uint16_t> msgid;
  Bytes payload;
};

struct VarintResult {
  std::uint32_t value = 0;
  std::size_t consumed = 0;
};

Bytes encode_remaining_length(std::uint64_t len);
VarintResult decode_remaining_length(ByteView bytes);
std::size_t remaining_length_size(std::uint32_t len);

// Rejects malformed sequences, overlong forms, surrogates and U+0000.
void validate_utf8(std::string_view text);
void validate_topic(std::string_view topic);

std::uint8_t connect_flags(const ConnectOptions& opts) noexcept;

Packet build_connect(const ConnectOptions& opts);
Packet build_publish(const PublishOptions& opts);
Packet build_pingreq();

Bytes encode_packet(const Packet& pkt);

struct DecodeResult {
  Packet packet;
  std::size_t consumed = 0;
};

// Streaming form: nullopt when more bytes are needed, throws when malformed.
std::optional<DecodeResult> try_decode_packet(ByteView bytes);
// Exactly one complete packet.
Packet decode_packet(ByteView bytes);

struct PublishView {
  bool dup = false;
  int qos = 0;
  bool retain = false;
  std::string topic;
  std::optional<std::uint16_t> msgid;
  Bytes payload;
};

struct ConnectView {
  std::string protocol_name;
  std::uint8_t protocol_level = 0;
  std::uint8_t flags = 0;
  std::uint16_t keep_alive = 0;
  std::string client_id;
  std::optional<std::string> username;
  std::optional<Bytes> password;
};

PublishView parse_publish(const Packet& pkt);
ConnectView parse_connect(const Packet& pkt);
std::uint8_t connack_flags(const Packet& pkt);
std::uint8_t connack_return_code(const Packet& pkt);
// Packet identifier of PUBACK/PUBREC/PUBREL/PUBCOMP/SUBACK/UNSUBACK/SUBSCRIBE/UNSUBSCRIBE.
std::uint16_t packet_identifier(const Packet& pkt);

// Server-side packets for synthesized broker responses.
namespace server {
Packet build_connack(bool session_present, std::uint8_t return_code);
Packet build_puback(std::uint16_t msgid);
}  // namespace server

}  // namespace fpaforge::mqtt
