#include <gtest/gtest.h>

#include <algorithm>

#include "fpaforge/craft_engine.hpp"
#include "fpaforge/csv.hpp"
#include "fpaforge/error.hpp"
#include "fpaforge/mqtt_codec.hpp"

using namespace fpaforge;
using namespace fpaforge::craft;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Ok;
}

std::string rstrip_spaces(std::string s) {
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

Bytes rstrip_spaces(Bytes b) {
  while (!b.empty() && b.back() == 0x20) b.pop_back();
  return b;
}

CraftSpec acl_spec() {
  CraftSpec spec;
  spec.acl = AclRule::parse("topic write Building1/Floor3/+");
  return spec;
}

std::vector<std::string> kinds(const Session& s) {
  std::vector<std::string> out;
  for (const auto& p : s.packets) out.push_back(p.kind);
  return out;
}

}  // namespace

TEST(PadTopic, Examples) {
  EXPECT_EQ(pad_topic("Building1/Floor3/Sensor1", 2), "Building1/Floor3/Sensor1  ");
  EXPECT_EQ(pad_topic("a/b", 0), "a/b");
  const std::string t = pad_topic("Building1/Floor3/Sensor1", 3);
  const auto pkt = mqtt::build_publish({false, 0, false, t, std::nullopt, {}});
  EXPECT_EQ(pkt.variable_header[0] << 8 | pkt.variable_header[1], 27);
}

TEST(PadTopic, TooLong) {
  EXPECT_EQ(code_of([] { pad_topic(std::string(65534, 'a'), 2); }), ErrorCode::TooLong);
  EXPECT_EQ(pad_topic(std::string(65534, 'a'), 1).size(), 65535u);
}

TEST(PadTopic, LevelsUnchanged) {
  const std::string padded = pad_topic("x/y/z", 3);
  EXPECT_EQ(std::count(padded.begin(), padded.end(), '/'), 2);
}

TEST(Tokens, SplitsAndDeduplicates) {
  const std::vector<std::string> names{"Soil_Sensor", "Soil/Moisture level"};
  EXPECT_EQ(tokenize_topics(names), (std::vector<std::string>{"Soil", "Sensor", "Moisture", "level"}));
}

TEST(Tokens, RandomTopicFromPool) {
  Rng rng(1);
  const std::vector<std::string> one{"a"};
  EXPECT_EQ(random_topic_from_tokens(one, 3, rng), "a/a/a");
  const std::vector<std::string> pool = tokenize_topics(std::vector<std::string>{"Soil_Sensor"});
  for (int i = 0; i < 50; ++i) {
    const auto t = random_topic_from_tokens(pool, 2, rng);
    EXPECT_TRUE(t == "Soil/Sensor" || t == "Sensor/Soil" || t == "Soil/Soil" || t == "Sensor/Sensor") << t;
  }
  EXPECT_EQ(code_of([&] { random_topic_from_tokens({}, 2, rng); }), ErrorCode::EmptyPool);
}

TEST(Tokens, SeededSequenceRepeats) {
  const std::vector<std::string> pool{"a", "b", "c", "d"};
  Rng r1(99), r2(99);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(random_topic_from_tokens(pool, 3, r1), random_topic_from_tokens(pool, 3, r2));
}

TEST(Tokens, PatternFillKeepsLiteralLevels) {
  Rng rng(4);
  const std::vector<std::string> pool{"Sensor1", "Sensor2"};
  for (int i = 0; i < 20; ++i) {
    const auto t = random_topic_for_pattern(pool, "Building1/+/x", rng);
    EXPECT_TRUE(t == "Building1/Sensor1/x" || t == "Building1/Sensor2/x") << t;
  }
}

TEST(Acl, Examples) {
  const auto rule = AclRule::parse("topic write Building1/Floor3/+");
  EXPECT_EQ(rule.permission, Permission::Write);
  EXPECT_TRUE(acl_match(rule, "Building1/Floor3/Sensor1  "));
  EXPECT_FALSE(acl_match(rule, "Building1/Floor3/a/b"));
  EXPECT_FALSE(acl_match(AclRule::parse("factory/+/humidity"), "factory/humidity"));
  EXPECT_TRUE(acl_match(AclRule::parse("factory/+/humidity"), "factory/line1/humidity"));
  EXPECT_TRUE(acl_match(AclRule::parse("+"), ""));
  EXPECT_FALSE(acl_match(rule, "Building1/Floor4/Sensor1"));
}

TEST(Acl, ParseAndPermissions) {
  EXPECT_EQ(AclRule::parse("a/+").permission, Permission::ReadWrite);
  const auto ro = AclRule::parse("topic read a/+");
  EXPECT_EQ(ro.permission, Permission::Read);
  EXPECT_EQ(ro.pattern, "a/+");
  EXPECT_FALSE(acl_allows_publish(ro, "a/b"));
  EXPECT_EQ(AclRule::parse(ro.to_string()), ro);
  EXPECT_EQ(code_of([] { AclRule::parse("a/#"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { AclRule::parse("a/b+"); }), ErrorCode::ConfigError);
}

TEST(PadPayload, Examples) {
  const Bytes base = to_bytes("27.5C 61%");
  const Bytes p = pad_payload(base, 100, 1397);
  EXPECT_EQ(p.size(), 109u);
  EXPECT_TRUE(std::equal(base.begin(), base.end(), p.begin()));
  EXPECT_TRUE(std::all_of(p.begin() + 9, p.end(), [](auto b) { return b == 0x20; }));
  EXPECT_EQ(pad_payload(base, 0, 5), base);
  EXPECT_EQ(code_of([&] { pad_payload(base, 6, 5); }), ErrorCode::BudgetExceeded);
}

TEST(Session, QosOneFlowHasEightSegments) {
  CraftSpec spec = acl_spec();
  spec.publish_count = 1;
  spec.qos1_probability = 1.0;
  const auto s = generate_session(spec, 5);
  EXPECT_EQ(kinds(s),
            (std::vector<std::string>{"SYN", "SYN-ACK", "ACK", "CONNECT", "CONNACK", "PUBLISH", "ACK", "PUBACK"}));
  using D = Direction;
  const std::vector<D> dirs{D::ClientToServer, D::ServerToClient, D::ClientToServer, D::ClientToServer,
                            D::ServerToClient, D::ClientToServer, D::ServerToClient, D::ServerToClient};
  for (std::size_t i = 0; i < dirs.size(); ++i) EXPECT_EQ(s.packets[i].direction, dirs[i]) << i;
  const auto connack = mqtt::decode_packet(s.packets[4].segment.payload);
  EXPECT_EQ(mqtt::connack_return_code(connack), 0);
  const auto puback = mqtt::decode_packet(s.packets[7].segment.payload);
  EXPECT_EQ(mqtt::packet_identifier(puback), *s.publishes[0].msgid);
}

TEST(Session, ZeroPublishes) {
  CraftSpec spec;
  spec.publish_count = 0;
  EXPECT_EQ(kinds(generate_session(spec, 1)), (std::vector<std::string>{"SYN", "SYN-ACK", "ACK", "CONNECT", "CONNACK"}));
}

TEST(Session, QosZeroHasNoPuback) {
  CraftSpec spec;
  spec.publish_count = 3;
  spec.qos1_probability = 0.0;
  const auto s = generate_session(spec, 2);
  for (const auto& p : s.packets) EXPECT_NE(p.kind, "PUBACK");
  for (const auto& r : s.publishes) EXPECT_FALSE(r.msgid);
}

TEST(Session, SequenceAndAckCoupling) {
  CraftSpec spec = acl_spec();
  spec.publish_count = 20;
  spec.qos1_probability = 0.5;
  spec.payload_pad_counts = {0, 10, 500, 1300};
  const auto s = generate_session(spec, 21);
  std::uint32_t client_next = s.client_isn, server_next = s.server_isn;
  for (const auto& p : s.packets) {
    const auto& seg = p.segment;
    const bool c2s = p.direction == Direction::ClientToServer;
    std::uint32_t& next = c2s ? client_next : server_next;
    ASSERT_EQ(seg.snapshot.seq, next) << p.kind;
    next = net::next_seq(next, seg.tcp_len() + ((seg.flags & net::tcp_flags::kSyn) ? 1 : 0));
    if (seg.flags & net::tcp_flags::kAck) ASSERT_EQ(seg.snapshot.ack, c2s ? server_next : client_next) << p.kind;
  }
  for (const auto& r : s.publishes) {
    EXPECT_EQ(r.relative_seq, r.seq - s.client_isn);
    EXPECT_EQ(r.tcp_len, net::framed_mqtt_size(r.mqtt_len));
    EXPECT_EQ(r.mqtt_len, net::compute_mqtt_len(r.topic.size(), r.msgid.has_value(), r.payload.size()));
  }
}

TEST(Session, TimestampsAdvanceByGap) {
  CraftSpec spec;
  spec.gap_us = 250;
  const auto s = generate_session(spec, 3);
  for (std::size_t i = 1; i < s.packets.size(); ++i)
    EXPECT_EQ(s.packets[i].ts.micros() - s.packets[i - 1].ts.micros(), 250u);
  EXPECT_EQ(s.packets[0].ts.micros(), spec.start_time_us);
}

TEST(Session, PaddingBeyondBudgetFails) {
  CraftSpec spec;
  spec.payload_pad_counts = {1500};
  EXPECT_EQ(code_of([&] { generate_session(spec, 1); }), ErrorCode::BudgetExceeded);
}

TEST(Spec, ValidationErrors) {
  auto bad = [](auto mutate) {
    CraftSpec s;
    mutate(s);
    return code_of([&] { validate_spec(s); });
  };
  EXPECT_EQ(bad([](CraftSpec& s) { s.topic_pad_min = 4; }), ErrorCode::ConfigError);
  EXPECT_EQ(bad([](CraftSpec& s) { s.qos1_probability = 1.5; }), ErrorCode::ConfigError);
  EXPECT_EQ(bad([](CraftSpec& s) { s.payload_pad_counts.clear(); }), ErrorCode::ConfigError);
  EXPECT_EQ(bad([](CraftSpec& s) { s.broker_port = 8883; }), ErrorCode::ConfigError);
  EXPECT_EQ(bad([](CraftSpec& s) { s.acl = AclRule::parse("Other/+"); }), ErrorCode::ConfigError);
  EXPECT_EQ(bad([](CraftSpec& s) { s.acl = AclRule::parse("topic read Building1/Floor3/+"); }), ErrorCode::ConfigError);
  EXPECT_EQ(bad([](CraftSpec& s) { s.base_topic = "a/#"; }), ErrorCode::WildcardInTopic);
  EXPECT_EQ(bad([](CraftSpec&) {}), ErrorCode::Ok);
}

TEST(Config, BuildsSpec) {
  const auto cfg = KvConfig::parse(R"(
[campaign]
base_topic = "Building1/Floor3/Sensor1"
topic_pad_range = [1, 2]
payload_pad_counts = [0, 50]
qos1_probability = 0.25
publish_count = 7
session_count = 2
acl = "topic write Building1/Floor3/+"
topic_names = [Soil_Sensor]
[network]
mss = 1000
broker_port = 1884
)");
  const auto spec = craft_spec_from_config(cfg);
  EXPECT_EQ(spec.topic_pad_min, 1u);
  EXPECT_EQ(spec.topic_pad_max, 2u);
  EXPECT_EQ(spec.payload_pad_counts, (std::vector<std::size_t>{0, 50}));
  EXPECT_DOUBLE_EQ(spec.qos1_probability, 0.25);
  EXPECT_EQ(spec.publish_count, 7u);
  EXPECT_EQ(spec.session_count, 2u);
  ASSERT_TRUE(spec.acl);
  EXPECT_EQ(spec.acl->pattern, "Building1/Floor3/+");
  EXPECT_EQ(spec.topic_tokens, (std::vector<std::string>{"Soil", "Sensor"}));
  EXPECT_EQ(spec.mss, 1000u);
  EXPECT_EQ(spec.broker_port, 1884);
  EXPECT_EQ(code_of([] { craft_spec_from_config(KvConfig::parse("[campaign]\nbogus = 1")); }), ErrorCode::ConfigError);
}

TEST(Campaign, ManifestMatchesFrames) {
  CraftSpec spec = acl_spec();
  spec.publish_count = 4;
  spec.session_count = 3;
  const auto c = generate_campaign(spec, 77);
  const auto frames = campaign_frames(c);
  const auto table = parse_table(publish_manifest_csv(c));
  ASSERT_EQ(table.rows.size(), 12u);
  for (const auto& row : table.rows) {
    const auto idx = std::stoul(row[table.column("frame_index")]);
    ASSERT_LT(idx, frames.size());
    const auto d = capture::dissect(frames[idx]);
    ASSERT_TRUE(d);
    const auto pub = mqtt::parse_publish(mqtt::decode_packet(d->payload));
    EXPECT_EQ(pub.topic, row[table.column("topic")]);
    EXPECT_EQ(std::to_string(d->seq), row[table.column("seq")]);
    EXPECT_EQ(std::to_string(d->payload.size()), row[table.column("tcp_len")]);
  }
}

TEST(CraftProperty, DeterministicPerSeed) {
  CraftSpec spec = acl_spec();
  spec.publish_count = 30;
  spec.session_count = 2;
  spec.qos1_probability = 0.5;
  spec.retain_probability = 0.3;
  spec.payload_pad_counts = {0, 3, 800};
  const auto a = capture::serialize_pcap(campaign_frames(generate_campaign(spec, 1234)));
  const auto b = capture::serialize_pcap(campaign_frames(generate_campaign(spec, 1234)));
  const auto c = capture::serialize_pcap(campaign_frames(generate_campaign(spec, 1235)));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(CraftProperty, BenignValidAndWithinAcl) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    CraftSpec spec = acl_spec();
    spec.publish_count = 25;
    spec.qos1_probability = 0.5;
    spec.retain_probability = 0.5;
    spec.payload_pad_counts = {0, 1, 64, 700, 1380};
    if (seed % 2) spec.topic_tokens = {"Sensor1", "Sensor2", "Hum"};
    const auto s = generate_session(spec, seed);
    for (const auto& p : s.packets) {
      if (p.segment.payload.empty()) continue;
      ASSERT_NO_THROW(mqtt::decode_packet(p.segment.payload)) << p.kind;
    }
    for (const auto& r : s.publishes) {
      const auto pub = mqtt::parse_publish(mqtt::decode_packet(s.packets[r.packet_index].segment.payload));
      ASSERT_NO_THROW(mqtt::validate_topic(pub.topic));
      ASSERT_TRUE(acl_match(*spec.acl, pub.topic)) << pub.topic;
      ASSERT_EQ(rstrip_spaces(pub.topic), rstrip_spaces(r.base_topic));
      ASSERT_EQ(pub.topic.size() - r.base_topic.size(), r.topic_pad);
      ASSERT_LE(r.topic_pad, 3u);
      ASSERT_EQ(rstrip_spaces(pub.payload), spec.base_payload);
      ASSERT_EQ(pub.payload.size(), spec.base_payload.size() + r.payload_pad);
      ASSERT_LE(r.payload_pad, net::max_padding_budget(pub.topic.size(), pub.msgid.has_value(), spec.base_payload.size()));
      ASSERT_EQ(pub.qos, r.qos);
      ASSERT_EQ(pub.retain, r.retain);
      ASSERT_LE(s.packets[r.packet_index].segment.tcp_len(), net::kDefaultMss);
    }
  }
}
