#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fpaforge/bytes.hpp"
#include "fpaforge/capture_io.hpp"
#include "fpaforge/kv_config.hpp"
#include "fpaforge/mqtt_codec.hpp"
#include "fpaforge/rng.hpp"
#include "fpaforge/tcp_encap.hpp"

namespace fpaforge::craft {

enum class Permission { Read, Write, ReadWrite };

struct AclRule {
  Permission permission = Permission::ReadWrite;
  std::string pattern;

  // "topic [read|write|readwrite] <pattern>" or a bare pattern (readwrite).
  static AclRule parse(std::string_view line);
  std::string to_string() const;
  bool operator==(const AclRule&) const = default;
};

// Rejects '#' and any '+' that does not occupy a whole level.
void validate_acl_pattern(std::string_view pattern);
bool acl_match(const AclRule& rule, std::string_view topic);
bool acl_allows_publish(const AclRule& rule, std::string_view topic);

std::string pad_topic(std::string_view base, std::size_t n);
Bytes pad_payload(ByteView base, std::size_t n_spaces, std::size_t budget);

// Splits names on '/', '_' and whitespace; unique tokens in first-seen order.
std::vector<std::string> tokenize_topics(std::span<const std::string> names);
std::string random_topic_from_tokens(std::span<const std::string> pool, std::size_t levels, Rng& rng);
// Pattern levels kept, each '+' level replaced by a token from the pool.
std::string random_topic_for_pattern(std::span<const std::string> pool, std::string_view pattern, Rng& rng);

struct CraftSpec {
  std::string base_topic = "Building1/Floor3/Sensor1";
  std::size_t topic_pad_min = 0;
  std::size_t topic_pad_max = 3;
  Bytes base_payload = to_bytes("27.5C 61%");
  std::vector<std::size_t> payload_pad_counts{0};
  double qos1_probability = 1.0;
  double retain_probability = 0.0;
  std::size_t publish_count = 10;
  std::size_t session_count = 1;
  std::optional<AclRule> acl;
  std::vector<std::string> topic_tokens;  // non-empty: base topics drawn per publish
  std::size_t topic_levels = 3;

  std::size_t mss = net::kDefaultMss;
  bool extended_length = false;
  net::Ipv4Address client_ip = net::Ipv4Address::from_octets(192, 168, 1, 10);
  net::Ipv4Address broker_ip = net::Ipv4Address::from_octets(192, 168, 1, 1);
  std::uint16_t broker_port = mqtt::kDefaultPort;
  std::uint16_t client_port = 0;  // 0: drawn from 49152..65535
  std::uint64_t gap_us = 1000;
  std::uint64_t start_time_us = 1'700'000'000ULL * 1'000'000ULL;

  mqtt::ConnectOptions connect = default_connect();

  static mqtt::ConnectOptions default_connect();
};

// Throws ConfigError on inconsistent fields.
void validate_spec(const CraftSpec& spec);

enum class Direction { ClientToServer, ServerToClient };

struct SessionPacket {
  Direction direction = Direction::ClientToServer;
  std::string kind;  // SYN, SYN-ACK, ACK, CONNECT, CONNACK, PUBLISH, PUBACK
  net::TcpSegment segment;
  capture::Timestamp ts;
};

struct PublishRecord {
  std::size_t packet_index = 0;
  std::string base_topic;
  std::string topic;
  std::size_t topic_pad = 0;
  std::size_t payload_pad = 0;
  int qos = 0;
  bool retain = false;
  std::optional<std::uint16_t> msgid;
  Bytes payload;
  std::uint32_t mqtt_len = 0;
  std::uint32_t tcp_len = 0;
  std::uint32_t seq = 0;
  std::uint32_t relative_seq = 0;
};

struct Session {
  std::vector<SessionPacket> packets;
  std::vector<PublishRecord> publishes;
  std::uint32_t client_isn = 0;
  std::uint32_t server_isn = 0;
  std::uint16_t client_port = 0;
  mqtt::ConnectOptions connect;
};

// One crafted PUBLISH: padded topic and payload, QoS/retain drawn per mix.
mqtt::PublishOptions craft_publish(const CraftSpec& spec, Rng& rng, std::uint16_t& next_msgid,
                                   PublishRecord* record = nullptr);

Session generate_session(const CraftSpec& spec, std::uint64_t seed, std::uint64_t start_time_us);
inline Session generate_session(const CraftSpec& spec, std::uint64_t seed) {
  return generate_session(spec, seed, spec.start_time_us);
}

struct Campaign {
  std::vector<Session> sessions;
};

// Sessions run back to back; session i is seeded from derive_seed(seed, i).
Campaign generate_campaign(const CraftSpec& spec, std::uint64_t seed);
std::vector<capture::CaptureFrame> campaign_frames(const Campaign& campaign);

// One row per PUBLISH: generator-side fields keyed by frame index in the capture.
std::string publish_manifest_csv(const Campaign& campaign);

std::set<std::string> craft_config_keys();
CraftSpec craft_spec_from_config(const KvConfig& cfg);

}  // namespace fpaforge::craft
