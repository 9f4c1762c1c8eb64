#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <functional>
#include <thread>

#include "fpaforge/capture_io.hpp"
#include "fpaforge/error.hpp"
#include "fpaforge/feature_extract.hpp"
#include "fpaforge/live.hpp"
#include "fpaforge/mqtt_codec.hpp"
#include "support.hpp"

using namespace fpaforge;
using namespace fpaforge::live;

namespace {

enum class BrokerMode { Normal, RefuseConnack, NoPuback, CloseAfterConnect };

class FakeBroker {
 public:
  explicit FakeBroker(BrokerMode mode) : mode_(mode) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    ::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
    ::listen(listen_fd_, 1);
    socklen_t len = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    thread_ = std::thread([this] { serve(); });
  }
  ~FakeBroker() {
    ::shutdown(listen_fd_, SHUT_RDWR);
    thread_.join();
    ::close(listen_fd_);
  }
  std::uint16_t port() const { return port_; }
  std::size_t publishes() const { return publishes_; }

 private:
  void send(int fd, const mqtt::Packet& pkt) {
    const Bytes wire = mqtt::encode_packet(pkt);
    (void)::send(fd, wire.data(), wire.size(), MSG_NOSIGNAL);
  }
  void serve() {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) return;
    Bytes buf;
    std::uint8_t chunk[4096];
    bool open = true;
    while (open) {
      const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
      if (n <= 0) break;
      buf.insert(buf.end(), chunk, chunk + n);
      while (auto got = mqtt::try_decode_packet(buf)) {
        buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(got->consumed));
        const auto& pkt = got->packet;
        if (pkt.type == mqtt::PacketType::Connect) {
          if (mode_ == BrokerMode::CloseAfterConnect) {
            open = false;
            break;
          }
          send(fd, mqtt::server::build_connack(false, mode_ == BrokerMode::RefuseConnack ? 5 : 0));
        } else if (pkt.type == mqtt::PacketType::Publish) {
          ++publishes_;
          const auto p = mqtt::parse_publish(pkt);
          if (p.qos == 1 && mode_ != BrokerMode::NoPuback) send(fd, mqtt::server::build_puback(*p.msgid));
        }
      }
    }
    ::close(fd);
  }

  BrokerMode mode_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<std::size_t> publishes_{0};
  std::thread thread_;
};

craft::CraftSpec small_spec(double qos1) {
  craft::CraftSpec spec;
  spec.publish_count = 4;
  spec.qos1_probability = qos1;
  spec.payload_pad_counts = {0, 20};
  return spec;
}

LiveEndpoint local(std::uint16_t port, double timeout = 2.0) { return {"127.0.0.1", port, timeout}; }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Ok;
}

}  // namespace

TEST(Endpoint, Validation) {
  EXPECT_NO_THROW(validate_endpoint(local(1883)));
  EXPECT_EQ(code_of([] { validate_endpoint(local(8883)); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { validate_endpoint(local(0)); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { validate_endpoint(local(1883, 0.0)); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { validate_endpoint({"", 1883, 1.0}); }), ErrorCode::ConfigError);
  EXPECT_TRUE(is_public_broker("Test.Mosquitto.org"));
  EXPECT_TRUE(is_public_broker("broker.hivemq.com"));
  EXPECT_FALSE(is_public_broker("127.0.0.1"));
  EXPECT_EQ(code_of([] { validate_endpoint({"test.mosquitto.org", 1883, 1.0}); }), ErrorCode::ConfigError);
  EXPECT_NO_THROW(validate_endpoint({"test.mosquitto.org", 1883, 1.0}, true));
}

TEST(Live, PublicBrokerRejectedBeforeConnect) {
  EXPECT_EQ(code_of([] { live_send(small_spec(1), {"broker.hivemq.com", 1883, 1.0}, 1); }), ErrorCode::ConfigError);
}

TEST(Live, ConnectRefused) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  const std::uint16_t port = ntohs(addr.sin_port);
  ::close(fd);
  EXPECT_EQ(code_of([&] { live_send(small_spec(1), local(port), 1); }), ErrorCode::ConnectRefused);
}

TEST(Live, FullSessionAgainstFakeBroker) {
  FakeBroker broker(BrokerMode::Normal);
  LiveOptions opts;
  opts.capture_path = fpaforge::testing::temp_dir() / "live.pcap";
  const auto r = live_send(small_spec(1), local(broker.port()), 42, opts);
  EXPECT_EQ(r.connack_rc, 0);
  EXPECT_EQ(r.sent_count, 5u);
  EXPECT_EQ(r.qos1_count, 4u);
  EXPECT_EQ(r.puback_count, 4u);
  EXPECT_TRUE(r.unacked.empty());
  ASSERT_EQ(r.publishes.size(), 4u);
  for (const auto& p : r.publishes) EXPECT_EQ(r.exchanged[p.packet_index].kind, "PUBLISH");

  const auto frames = capture::read_pcap(*opts.capture_path);
  ASSERT_EQ(frames.size(), 3u + r.exchanged.size() + 4u);
  for (const auto& f : frames) {
    const auto d = capture::dissect(f);
    ASSERT_TRUE(d);
    EXPECT_TRUE(d->tcp_checksum_ok);
    EXPECT_TRUE(d->ip_checksum_ok);
  }
  const auto feats = features::extract_features(frames);
  EXPECT_EQ(feats.mqtt_decode_errors, 0u);
}

TEST(Live, ConnackNonZero) {
  FakeBroker broker(BrokerMode::RefuseConnack);
  EXPECT_EQ(code_of([&] { live_send(small_spec(1), local(broker.port()), 1); }), ErrorCode::ConnackNonZero);
  EXPECT_EQ(broker.publishes(), 0u);
}

TEST(Live, PubackTimeout) {
  FakeBroker broker(BrokerMode::NoPuback);
  EXPECT_EQ(code_of([&] { live_send(small_spec(1), local(broker.port(), 0.3), 1); }), ErrorCode::PubackTimeout);
}

TEST(Live, UnackedReportedWithoutThrow) {
  FakeBroker broker(BrokerMode::NoPuback);
  LiveOptions opts;
  opts.throw_on_timeout = false;
  const auto r = live_send(small_spec(1), local(broker.port(), 0.2), 1, opts);
  EXPECT_EQ(r.puback_count, 0u);
  EXPECT_EQ(r.unacked.size(), 4u);
}

TEST(Live, Qos0NeedsNoPuback) {
  FakeBroker broker(BrokerMode::NoPuback);
  const auto r = live_send(small_spec(0), local(broker.port(), 0.5), 3);
  EXPECT_EQ(r.qos1_count, 0u);
  EXPECT_EQ(r.sent_count, 5u);
}

TEST(Live, ClosedBeforeConnack) {
  FakeBroker broker(BrokerMode::CloseAfterConnect);
  EXPECT_EQ(code_of([&] { live_send(small_spec(1), local(broker.port()), 1); }), ErrorCode::ConnectRefused);
}

TEST(Synthesize, CountersAdvanceWithPayload) {
  std::vector<ExchangedPacket> pkts;
  pkts.push_back({craft::Direction::ClientToServer, "CONNECT",
                  mqtt::encode_packet(mqtt::build_connect(craft::CraftSpec::default_connect())), 10});
  pkts.push_back({craft::Direction::ServerToClient, "CONNACK",
                  mqtt::encode_packet(mqtt::server::build_connack(false, 0)), 20});
  const auto a = net::Ipv4Address::from_octets(10, 0, 0, 1), b = net::Ipv4Address::from_octets(10, 0, 0, 2);
  const auto frames = synthesize_capture(pkts, a, 50000, b, 1883, 9);
  ASSERT_EQ(frames.size(), 5u);
  const auto syn = capture::dissect(frames[0]);
  const auto conn = capture::dissect(frames[3]);
  const auto ack = capture::dissect(frames[4]);
  EXPECT_EQ(conn->seq, syn->seq + 1);
  EXPECT_EQ(ack->ack, conn->seq + pkts[0].bytes.size());
  EXPECT_EQ(conn->payload, pkts[0].bytes);
  EXPECT_EQ(synthesize_capture(pkts, a, 50000, b, 1883, 9).size(), frames.size());
}
