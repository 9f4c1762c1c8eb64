#include "fpaforge/live.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>

#include <fmt/format.h>

#include "fpaforge/error.hpp"
#include "fpaforge/rng.hpp"

namespace fpaforge::live {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t wall_us() {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::system_clock::now().time_since_epoch())
          .count());
}

class Socket {
 public:
  explicit Socket(int fd) : fd_(fd) {}
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() {
    if (fd_ >= 0) ::close(fd_);
  }
  int fd() const { return fd_; }

 private:
  int fd_;
};

int poll_ms(double seconds) { return static_cast<int>(std::max(0.0, std::ceil(seconds * 1000.0))); }

sockaddr_in resolve(const LiveEndpoint& ep) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const int rc = ::getaddrinfo(ep.host.c_str(), nullptr, &hints, &res);
  if (rc != 0 || !res)
    fail(ErrorCode::ConnectRefused, fmt::format("cannot resolve '{}': {}", ep.host, ::gai_strerror(rc)));
  sockaddr_in addr{};
  std::memcpy(&addr, res->ai_addr, sizeof(addr));
  ::freeaddrinfo(res);
  addr.sin_port = htons(ep.port);
  return addr;
}

int connect_with_timeout(const sockaddr_in& addr, double timeout_s, const std::string& label) {
  const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) fail(ErrorCode::Io, fmt::format("socket: {}", std::strerror(errno)));
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
  int rc = ::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr));
  if (rc != 0 && errno != EINPROGRESS) {
    const int err = errno;
    ::close(fd);
    fail(ErrorCode::ConnectRefused, fmt::format("connect to {}: {}", label, std::strerror(err)));
  }
  if (rc != 0) {
    pollfd p{fd, POLLOUT, 0};
    rc = ::poll(&p, 1, poll_ms(timeout_s));
    int soerr = 0;
    socklen_t len = sizeof(soerr);
    if (rc <= 0) {
      ::close(fd);
      fail(ErrorCode::ConnectRefused, fmt::format("connect to {}: timed out", label));
    }
    ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &soerr, &len);
    if (soerr != 0) {
      ::close(fd);
      fail(ErrorCode::ConnectRefused, fmt::format("connect to {}: {}", label, std::strerror(soerr)));
    }
  }
  ::fcntl(fd, F_SETFL, flags);
  return fd;
}

void send_all(int fd, ByteView data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(ErrorCode::Io, fmt::format("send: {}", std::strerror(errno)));
    }
    off += static_cast<std::size_t>(n);
  }
}

// Reassembles MQTT packets from the stream.
class Reader {
 public:
  explicit Reader(int fd) : fd_(fd) {}

  // Next complete packet, or nullopt on deadline or peer close.
  std::optional<std::pair<mqtt::Packet, Bytes>> next(Clock::time_point deadline) {
    for (;;) {
      if (auto d = mqtt::try_decode_packet(buf_)) {
        Bytes raw(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(d->consumed));
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(d->consumed));
        return std::make_pair(std::move(d->packet), std::move(raw));
      }
      if (closed_) return std::nullopt;
      const auto left = std::chrono::duration<double>(deadline - Clock::now()).count();
      if (left <= 0) return std::nullopt;
      pollfd p{fd_, POLLIN, 0};
      const int rc = ::poll(&p, 1, poll_ms(left));
      if (rc < 0 && errno == EINTR) continue;
      if (rc <= 0) return std::nullopt;
      std::uint8_t tmp[4096];
      const ssize_t n = ::recv(fd_, tmp, sizeof(tmp), 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        closed_ = true;
        continue;
      }
      buf_.insert(buf_.end(), tmp, tmp + n);
    }
  }

  bool closed() const { return closed_; }

 private:
  int fd_;
  Bytes buf_;
  bool closed_ = false;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  while (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

}  // namespace

bool is_public_broker(const std::string& host) {
  const std::string h = lower(host);
  return h == "test.mosquitto.org" || h == "broker.hivemq.com";
}

void validate_endpoint(const LiveEndpoint& endpoint, bool allow_public) {
  if (endpoint.host.empty()) fail(ErrorCode::ConfigError, "endpoint host is empty");
  if (endpoint.port == 0) fail(ErrorCode::ConfigError, "endpoint port must be non-zero");
  if (endpoint.port == 8883) fail(ErrorCode::ConfigError, "port 8883 (MQTT over TLS) is not supported");
  if (!(endpoint.timeout_s > 0.0) || !std::isfinite(endpoint.timeout_s))
    fail(ErrorCode::ConfigError, "endpoint timeout must be positive");
  if (is_public_broker(endpoint.host) && !allow_public)
    fail(ErrorCode::ConfigError, fmt::format("'{}' is a public broker; pass --allow-public to use it", endpoint.host));
}

std::vector<capture::CaptureFrame> synthesize_capture(const std::vector<ExchangedPacket>& packets,
                                                      net::Ipv4Address client_ip, std::uint16_t client_port,
                                                      net::Ipv4Address broker_ip, std::uint16_t broker_port,
                                                      std::uint64_t seed, std::size_t mss) {
  using namespace net::tcp_flags;
  Rng rng(seed);
  net::SessionContext client{client_ip, broker_ip, client_port, broker_port, static_cast<std::uint32_t>(rng.next_u64()),
                             0, false};
  net::SessionContext server{broker_ip, client_ip, broker_port, client_port, static_cast<std::uint32_t>(rng.next_u64()),
                             0, false};
  std::vector<capture::CaptureFrame> frames;
  const std::uint64_t t0 = packets.empty() ? wall_us() : packets.front().time_us;
  auto emit = [&](const net::TcpSegment& seg, std::uint64_t t) {
    frames.push_back(capture::frame_packet(seg, capture::Timestamp::from_micros(t)));
  };
  emit(net::control_segment(client, kSyn), t0 > 2 ? t0 - 2 : t0);
  server.ack = client.seq;
  emit(net::control_segment(server, kSyn | kAck), t0 > 1 ? t0 - 1 : t0);
  client.ack = server.seq;
  emit(net::control_segment(client, kAck), t0);
  client.established = server.established = true;

  for (const auto& p : packets) {
    const bool c2s = p.direction == craft::Direction::ClientToServer;
    auto& self = c2s ? client : server;
    auto& peer = c2s ? server : client;
    emit(net::wrap_mqtt(self, p.bytes, mss), p.time_us);
    peer.ack = self.seq;
    if (c2s && p.kind == "PUBLISH") emit(net::control_segment(server, kAck), p.time_us);
  }
  return frames;
}

LiveReport live_send(const craft::CraftSpec& spec, const LiveEndpoint& endpoint, std::uint64_t seed,
                     const LiveOptions& options) {
  validate_endpoint(endpoint, options.allow_public);
  craft::validate_spec(spec);
  const std::string label = fmt::format("{}:{}", endpoint.host, endpoint.port);
  const sockaddr_in addr = resolve(endpoint);
  Socket sock(connect_with_timeout(addr, endpoint.timeout_s, label));

  sockaddr_in local{};
  socklen_t llen = sizeof(local);
  ::getsockname(sock.fd(), reinterpret_cast<sockaddr*>(&local), &llen);

  LiveReport report;
  Reader reader(sock.fd());
  const auto timeout = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(endpoint.timeout_s));

  auto send_packet = [&](const std::string& kind, const mqtt::Packet& pkt) {
    const Bytes wire = mqtt::encode_packet(pkt);
    if (!(mqtt::decode_packet(wire) == pkt)) fail(ErrorCode::EncodeError, fmt::format("{} failed to round-trip", kind));
    if (pkt.type == mqtt::PacketType::Publish) mqtt::parse_publish(pkt);
    if (pkt.type == mqtt::PacketType::Connect) mqtt::parse_connect(pkt);
    send_all(sock.fd(), wire);
    report.exchanged.push_back({craft::Direction::ClientToServer, kind, wire, wall_us()});
    ++report.sent_count;
  };
  auto record_in = [&](const mqtt::Packet& pkt, Bytes raw) {
    report.exchanged.push_back(
        {craft::Direction::ServerToClient, std::string(mqtt::to_string(pkt.type)), std::move(raw), wall_us()});
  };

  auto finish_capture = [&] {
    if (!options.capture_path) return;
    const auto frames = synthesize_capture(report.exchanged, net::Ipv4Address{ntohl(local.sin_addr.s_addr)},
                                           ntohs(local.sin_port), net::Ipv4Address{ntohl(addr.sin_addr.s_addr)},
                                           endpoint.port, derive_seed(seed, 0x11fe), spec.mss);
    capture::write_pcap(frames, *options.capture_path);
    report.capture_path = options.capture_path->string();
  };

  send_packet("CONNECT", mqtt::build_connect(spec.connect));
  const auto connack_deadline = Clock::now() + timeout;
  for (;;) {
    auto got = reader.next(connack_deadline);
    if (!got) {
      report.peer_closed = reader.closed();
      finish_capture();
      fail(ErrorCode::ConnectRefused,
           fmt::format("no CONNACK from {} ({})", label, reader.closed() ? "connection closed" : "timed out"));
    }
    record_in(got->first, std::move(got->second));
    if (got->first.type != mqtt::PacketType::Connack) continue;
    report.connack_rc = mqtt::connack_return_code(got->first);
    break;
  }
  if (report.connack_rc != 0) {
    finish_capture();
    fail(ErrorCode::ConnackNonZero, fmt::format("CONNACK return code {} from {}", report.connack_rc, label));
  }

  Rng rng(seed);
  std::uint16_t next_msgid = 1;
  for (std::size_t i = 0; i < spec.publish_count; ++i) {
    craft::PublishRecord rec;
    const auto opts = craft::craft_publish(spec, rng, next_msgid, &rec);
    const auto pkt = mqtt::build_publish(opts);
    rec.packet_index = report.exchanged.size();
    rec.mqtt_len = pkt.remaining_length;
    rec.tcp_len = net::framed_mqtt_size(pkt.remaining_length);
    report.publishes.push_back(rec);
    if (reader.closed()) {
      report.peer_closed = true;
      if (opts.qos == 1) {
        ++report.qos1_count;
        report.unacked.push_back(*opts.msgid);
      }
      continue;
    }
    send_packet("PUBLISH", pkt);
    if (opts.qos != 1) continue;
    ++report.qos1_count;
    const auto deadline = Clock::now() + timeout;
    bool acked = false;
    while (!acked) {
      auto got = reader.next(deadline);
      if (!got) break;
      const bool match =
          got->first.type == mqtt::PacketType::Puback && mqtt::packet_identifier(got->first) == *opts.msgid;
      record_in(got->first, std::move(got->second));
      if (match) acked = true;
    }
    if (acked)
      ++report.puback_count;
    else
      report.unacked.push_back(*opts.msgid);
    if (reader.closed()) report.peer_closed = true;
  }
  ::shutdown(sock.fd(), SHUT_WR);
  finish_capture();
  if (!report.unacked.empty() && options.throw_on_timeout)
    fail(ErrorCode::PubackTimeout, fmt::format("no PUBACK for msgid {} ({} of {} QoS 1 PUBLISH unacknowledged{})",
                                               report.unacked.front(), report.unacked.size(), report.qos1_count,
                                               report.peer_closed ? ", broker closed the connection" : ""));
  return report;
}

}  // namespace fpaforge::live
