#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fpaforge/capture_io.hpp"
#include "fpaforge/craft_engine.hpp"

namespace fpaforge::live {

struct LiveEndpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = mqtt::kDefaultPort;
  double timeout_s = 5.0;
};

// test.mosquitto.org and broker.hivemq.com.
bool is_public_broker(const std::string& host);

// Rejects port 0, port 8883, non-positive timeouts, and public brokers unless allowed.
void validate_endpoint(const LiveEndpoint& endpoint, bool allow_public = false);

struct LiveOptions {
  std::optional<std::filesystem::path> capture_path;
  bool allow_public = false;
  // Raise PubackTimeout after the session when any QoS 1 PUBLISH went unacknowledged.
  bool throw_on_timeout = true;
};

struct ExchangedPacket {
  craft::Direction direction = craft::Direction::ClientToServer;
  std::string kind;
  Bytes bytes;
  std::uint64_t time_us = 0;
};

struct LiveReport {
  int connack_rc = -1;
  std::size_t sent_count = 0;
  std::size_t qos1_count = 0;
  std::size_t puback_count = 0;
  std::vector<std::uint16_t> unacked;
  bool peer_closed = false;
  std::string capture_path;
  std::vector<craft::PublishRecord> publishes;
  std::vector<ExchangedPacket> exchanged;
};

// One real TCP session: CONNECT, wait for CONNACK, then each crafted PUBLISH
// followed (for QoS 1) by a wait for the PUBACK carrying its msgid. Every
// outgoing packet is decoded and validated before it is sent.
LiveReport live_send(const craft::CraftSpec& spec, const LiveEndpoint& endpoint, std::uint64_t seed,
                     const LiveOptions& options = {});

// Ethernet frames built from the bytes actually exchanged, with a synthetic
// handshake and per-packet TCP counters for the given 4-tuple.
std::vector<capture::CaptureFrame> synthesize_capture(const std::vector<ExchangedPacket>& packets,
                                                      net::Ipv4Address client_ip, std::uint16_t client_port,
                                                      net::Ipv4Address broker_ip, std::uint16_t broker_port,
                                                      std::uint64_t seed, std::size_t mss = net::kDefaultMss);

}  // namespace fpaforge::live
