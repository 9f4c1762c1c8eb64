#include "fpaforge/craft_engine.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include <fmt/format.h>

#include "fpaforge/csv.hpp"
#include "fpaforge/error.hpp"

namespace fpaforge::craft {

namespace {

std::vector<std::string_view> split_levels(std::string_view topic) {
  std::vector<std::string_view> levels;
  std::size_t start = 0;
  while (true) {
    auto slash = topic.find('/', start);
    if (slash == std::string_view::npos) {
      levels.push_back(topic.substr(start));
      return levels;
    }
    levels.push_back(topic.substr(start, slash - start));
    start = slash + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

AclRule AclRule::parse(std::string_view line) {
  std::string_view s = trim(line);
  AclRule rule;
  if (s.substr(0, 6) == "topic ") {
    s = trim(s.substr(6));
    auto space = s.find(' ');
    std::string_view word = s.substr(0, space);
    if (space != std::string_view::npos) {
      bool matched = true;
      if (word == "read") {
        rule.permission = Permission::Read;
      } else if (word == "write") {
        rule.permission = Permission::Write;
      } else if (word == "readwrite") {
        rule.permission = Permission::ReadWrite;
      } else {
        matched = false;
      }
      if (matched) s = trim(s.substr(space + 1));
    }
  }
  rule.pattern = std::string(s);
  validate_acl_pattern(rule.pattern);
  return rule;
}

std::string AclRule::to_string() const {
  const char* perm = permission == Permission::Read ? "read" : permission == Permission::Write ? "write" : "readwrite";
  return fmt::format("topic {} {}", perm, pattern);
}

void validate_acl_pattern(std::string_view pattern) {
  if (pattern.empty()) fail(ErrorCode::ConfigError, "ACL pattern is empty");
  if (pattern.find('#') != std::string_view::npos)
    fail(ErrorCode::ConfigError, fmt::format("ACL pattern '{}' uses the multi-level wildcard", pattern));
  for (auto level : split_levels(pattern))
    if (level.find('+') != std::string_view::npos && level != "+")
      fail(ErrorCode::ConfigError, fmt::format("ACL pattern '{}' has '+' inside a level", pattern));
}

bool acl_match(const AclRule& rule, std::string_view topic) {
  auto want = split_levels(rule.pattern);
  auto have = split_levels(topic);
  if (want.size() != have.size()) return false;
  for (std::size_t i = 0; i < want.size(); ++i)
    if (want[i] != "+" && want[i] != have[i]) return false;
  return true;
}

bool acl_allows_publish(const AclRule& rule, std::string_view topic) {
  return rule.permission != Permission::Read && acl_match(rule, topic);
}

std::string pad_topic(std::string_view base, std::size_t n) {
  if (base.size() + n > mqtt::kMaxStringBytes)
    fail(ErrorCode::TooLong, fmt::format("padded topic would be {} bytes, limit 65535", base.size() + n));
  std::string out(base);
  out.append(n, ' ');
  mqtt::validate_topic(out);
  return out;
}

Bytes pad_payload(ByteView base, std::size_t n_spaces, std::size_t budget) {
  if (n_spaces > budget)
    fail(ErrorCode::BudgetExceeded, fmt::format("{} padding bytes exceed budget {}", n_spaces, budget));
  Bytes out(base.begin(), base.end());
  out.insert(out.end(), n_spaces, 0x20);
  return out;
}

std::vector<std::string> tokenize_topics(std::span<const std::string> names) {
  std::vector<std::string> tokens;
  std::unordered_set<std::string> seen;
  for (const auto& name : names) {
    std::string cur;
    auto flush = [&] {
      if (!cur.empty() && seen.insert(cur).second) tokens.push_back(cur);
      cur.clear();
    };
    for (char ch : name) {
      if (ch == '/' || ch == '_' || std::isspace(static_cast<unsigned char>(ch))) {
        flush();
      } else {
        cur.push_back(ch);
      }
    }
    flush();
  }
  return tokens;
}

std::string random_topic_from_tokens(std::span<const std::string> pool, std::size_t levels, Rng& rng) {
  if (pool.empty()) fail(ErrorCode::EmptyPool, "token pool is empty");
  if (levels == 0) fail(ErrorCode::InvalidArgument, "topic needs at least one level");
  std::string topic;
  for (std::size_t i = 0; i < levels; ++i) {
    if (i) topic.push_back('/');
    topic += pool[rng.uniform_index(pool.size())];
  }
  mqtt::validate_topic(topic);
  return topic;
}

std::string random_topic_for_pattern(std::span<const std::string> pool, std::string_view pattern, Rng& rng) {
  if (pool.empty()) fail(ErrorCode::EmptyPool, "token pool is empty");
  std::string topic;
  bool first = true;
  for (auto level : split_levels(pattern)) {
    if (!first) topic.push_back('/');
    first = false;
    if (level == "+") {
      topic += pool[rng.uniform_index(pool.size())];
    } else {
      topic += level;
    }
  }
  mqtt::validate_topic(topic);
  return topic;
}

mqtt::ConnectOptions CraftSpec::default_connect() {
  mqtt::ConnectOptions c;
  c.username_flag = true;
  c.password_flag = true;
  c.clean_session = false;
  c.keep_alive = 0;
  c.client_id = "fpaforge-sensor";
  c.username = "sensor";
  c.password = to_bytes("sensor");
  return c;
}

void validate_spec(const CraftSpec& spec) {
  auto bad = [](std::string msg) { fail(ErrorCode::ConfigError, std::move(msg)); };
  if (spec.topic_pad_min > spec.topic_pad_max)
    bad(fmt::format("topic pad range [{}, {}] is empty", spec.topic_pad_min, spec.topic_pad_max));
  if (!(spec.qos1_probability >= 0.0 && spec.qos1_probability <= 1.0))
    bad("qos1_probability must lie in [0, 1]");
  if (!(spec.retain_probability >= 0.0 && spec.retain_probability <= 1.0))
    bad("retain_probability must lie in [0, 1]");
  if (spec.payload_pad_counts.empty()) bad("payload_pad_counts must not be empty");
  if (spec.session_count == 0) bad("session_count must be at least 1");
  if (spec.mss < 2 || spec.mss > 65495) bad(fmt::format("MSS {} is out of range", spec.mss));
  if (spec.broker_port == mqtt::kTlsPort) bad("port 8883 (MQTT over TLS) is not supported");
  if (spec.broker_port == 0) bad("broker port must be non-zero");
  if (spec.topic_tokens.empty()) {
    mqtt::validate_topic(spec.base_topic);
  } else if (spec.topic_levels == 0 && !spec.acl) {
    bad("topic_levels must be at least 1");
  }
  if (spec.acl) {
    validate_acl_pattern(spec.acl->pattern);
    if (spec.acl->permission == Permission::Read)
      bad(fmt::format("ACL '{}' does not grant publish", spec.acl->to_string()));
    if (spec.topic_tokens.empty()) {
      for (std::size_t n = spec.topic_pad_min; n <= spec.topic_pad_max; ++n)
        if (!acl_match(*spec.acl, pad_topic(spec.base_topic, n)))
          bad(fmt::format("topic '{}' padded by {} does not match ACL '{}'", spec.base_topic, n, spec.acl->pattern));
    }
  }
  if (spec.connect.reserved) bad("CONNECT reserved flag must be zero");
}

mqtt::PublishOptions craft_publish(const CraftSpec& spec, Rng& rng, std::uint16_t& next_msgid,
                                   PublishRecord* record) {
  std::string base;
  if (spec.topic_tokens.empty()) {
    base = spec.base_topic;
  } else if (spec.acl) {
    base = random_topic_for_pattern(spec.topic_tokens, spec.acl->pattern, rng);
  } else {
    base = random_topic_from_tokens(spec.topic_tokens, spec.topic_levels, rng);
  }
  const std::size_t n_topic = spec.topic_pad_min + rng.uniform_index(spec.topic_pad_max - spec.topic_pad_min + 1);

  mqtt::PublishOptions opts;
  opts.topic = pad_topic(base, n_topic);
  if (spec.acl && !acl_allows_publish(*spec.acl, opts.topic))
    fail(ErrorCode::ConfigError, fmt::format("topic '{}' is outside ACL '{}'", opts.topic, spec.acl->pattern));
  opts.qos = rng.bernoulli(spec.qos1_probability) ? 1 : 0;
  opts.retain = rng.bernoulli(spec.retain_probability);
  if (opts.qos == 1) {
    if (next_msgid == 0) next_msgid = 1;
    opts.msgid = next_msgid++;
  }
  const std::size_t n_payload = spec.payload_pad_counts[rng.uniform_index(spec.payload_pad_counts.size())];
  const std::size_t budget = net::max_padding_budget(opts.topic.size(), opts.msgid.has_value(), spec.base_payload.size(),
                                                     spec.mss, spec.extended_length);
  opts.payload = pad_payload(spec.base_payload, n_payload, budget);

  if (record) {
    record->base_topic = base;
    record->topic = opts.topic;
    record->topic_pad = n_topic;
    record->payload_pad = n_payload;
    record->qos = opts.qos;
    record->retain = opts.retain;
    record->msgid = opts.msgid;
    record->payload = opts.payload;
  }
  return opts;
}

Session generate_session(const CraftSpec& spec, std::uint64_t seed, std::uint64_t start_time_us) {
  validate_spec(spec);
  Rng rng(seed);
  Session s;
  s.client_isn = static_cast<std::uint32_t>(rng.next_u64());
  s.server_isn = static_cast<std::uint32_t>(rng.next_u64());
  s.client_port = spec.client_port ? spec.client_port : static_cast<std::uint16_t>(49152 + rng.uniform_index(16384));
  s.connect = spec.connect;

  net::SessionContext client{spec.client_ip, spec.broker_ip, s.client_port, spec.broker_port, s.client_isn, 0, false};
  net::SessionContext server{spec.broker_ip, spec.client_ip, spec.broker_port, s.client_port, s.server_isn, 0, false};

  std::uint64_t now = start_time_us;
  auto emit = [&](Direction dir, std::string kind, net::TcpSegment seg) {
    s.packets.push_back({dir, std::move(kind), std::move(seg), capture::Timestamp::from_micros(now)});
    now += spec.gap_us;
  };
  using namespace net::tcp_flags;

  emit(Direction::ClientToServer, "SYN", net::control_segment(client, kSyn));
  server.ack = client.seq;
  emit(Direction::ServerToClient, "SYN-ACK", net::control_segment(server, kSyn | kAck));
  client.ack = server.seq;
  emit(Direction::ClientToServer, "ACK", net::control_segment(client, kAck));
  client.established = server.established = true;

  emit(Direction::ClientToServer, "CONNECT",
       net::wrap_mqtt(client, mqtt::encode_packet(mqtt::build_connect(spec.connect)), spec.mss));
  server.ack = client.seq;
  emit(Direction::ServerToClient, "CONNACK",
       net::wrap_mqtt(server, mqtt::encode_packet(mqtt::server::build_connack(false, 0)), spec.mss));
  client.ack = server.seq;

  std::uint16_t next_msgid = 1;
  for (std::size_t i = 0; i < spec.publish_count; ++i) {
    PublishRecord rec;
    mqtt::PublishOptions opts = craft_publish(spec, rng, next_msgid, &rec);
    const mqtt::Packet pkt = mqtt::build_publish(opts);
    const Bytes wire = mqtt::encode_packet(pkt);
    rec.packet_index = s.packets.size();
    rec.mqtt_len = pkt.remaining_length;
    rec.seq = client.seq;
    rec.relative_seq = client.seq - s.client_isn;
    net::TcpSegment seg = net::wrap_mqtt(client, wire, spec.mss);
    rec.tcp_len = static_cast<std::uint32_t>(seg.tcp_len());
    emit(Direction::ClientToServer, "PUBLISH", std::move(seg));
    server.ack = client.seq;
    emit(Direction::ServerToClient, "ACK", net::control_segment(server, kAck));
    if (opts.qos == 1) {
      emit(Direction::ServerToClient, "PUBACK",
           net::wrap_mqtt(server, mqtt::encode_packet(mqtt::server::build_puback(*opts.msgid)), spec.mss));
      client.ack = server.seq;
    }
    s.publishes.push_back(std::move(rec));
  }
  return s;
}

Campaign generate_campaign(const CraftSpec& spec, std::uint64_t seed) {
  validate_spec(spec);
  Campaign c;
  std::uint64_t start = spec.start_time_us;
  for (std::size_t i = 0; i < spec.session_count; ++i) {
    c.sessions.push_back(generate_session(spec, derive_seed(seed, i), start));
    start += (c.sessions.back().packets.size() + 1) * spec.gap_us;
  }
  return c;
}

std::vector<capture::CaptureFrame> campaign_frames(const Campaign& campaign) {
  std::vector<capture::CaptureFrame> frames;
  for (const auto& s : campaign.sessions)
    for (const auto& p : s.packets) frames.push_back(capture::frame_packet(p.segment, p.ts));
  return frames;
}

std::string publish_manifest_csv(const Campaign& campaign) {
  std::string out;
  append_csv_row(out, std::vector<std::string>{"session", "frame_index", "base_topic", "topic", "topic_pad",
                                               "payload_pad", "qos", "retain", "msgid", "mqtt_len", "tcp_len", "seq",
                                               "relative_seq", "payload_hex"});
  std::size_t base = 0;
  for (std::size_t si = 0; si < campaign.sessions.size(); ++si) {
    const auto& s = campaign.sessions[si];
    for (const auto& r : s.publishes)
      append_csv_row(out, std::vector<std::string>{
                              std::to_string(si), std::to_string(base + r.packet_index), r.base_topic, r.topic,
                              std::to_string(r.topic_pad), std::to_string(r.payload_pad), std::to_string(r.qos),
                              r.retain ? "1" : "0", r.msgid ? std::to_string(*r.msgid) : "", std::to_string(r.mqtt_len),
                              std::to_string(r.tcp_len), std::to_string(r.seq), std::to_string(r.relative_seq),
                              to_hex(r.payload)});
    base += s.packets.size();
  }
  return out;
}

std::set<std::string> craft_config_keys() {
  return {"campaign.base_topic",        "campaign.topic_pad_range",  "campaign.base_payload",
          "campaign.payload_pad_counts", "campaign.qos1_probability", "campaign.retain_probability",
          "campaign.publish_count",     "campaign.session_count",    "campaign.acl",
          "campaign.topic_tokens",      "campaign.topic_names",      "campaign.topic_levels",
          "campaign.seed",              "network.mss",               "network.extended_length",
          "network.client_ip",          "network.broker_ip",         "network.broker_port",
          "network.client_port",        "network.gap_us",            "network.start_time_us",
          "connect.client_id",          "connect.username",          "connect.password",
          "connect.username_flag",      "connect.password_flag",     "connect.clean_session",
          "connect.keep_alive",         "connect.will_flag",         "connect.will_qos",
          "connect.will_retain",        "connect.will_topic",        "connect.will_message"};
}

namespace {

std::size_t non_negative(std::int64_t v, std::string_view what) {
  if (v < 0) fail(ErrorCode::ConfigError, fmt::format("{} must be non-negative", what));
  return static_cast<std::size_t>(v);
}

std::uint16_t port_value(std::int64_t v, std::string_view what) {
  if (v < 0 || v > 65535) fail(ErrorCode::ConfigError, fmt::format("{} {} is not a TCP port", what, v));
  return static_cast<std::uint16_t>(v);
}

}  // namespace

CraftSpec craft_spec_from_config(const KvConfig& cfg) {
  cfg.require_known(craft_config_keys());
  CraftSpec spec;
  spec.base_topic = cfg.get_string("campaign.base_topic", spec.base_topic);
  if (cfg.has("campaign.topic_pad_range")) {
    auto r = cfg.get_int_list("campaign.topic_pad_range");
    if (r.size() != 2) fail(ErrorCode::ConfigError, "topic_pad_range must be [min, max]");
    spec.topic_pad_min = non_negative(r[0], "topic_pad_range");
    spec.topic_pad_max = non_negative(r[1], "topic_pad_range");
  }
  if (auto p = cfg.find_string("campaign.base_payload")) spec.base_payload = to_bytes(*p);
  if (cfg.has("campaign.payload_pad_counts")) {
    spec.payload_pad_counts.clear();
    for (auto v : cfg.get_int_list("campaign.payload_pad_counts"))
      spec.payload_pad_counts.push_back(non_negative(v, "payload_pad_counts"));
  }
  spec.qos1_probability = cfg.get_double("campaign.qos1_probability", spec.qos1_probability);
  spec.retain_probability = cfg.get_double("campaign.retain_probability", spec.retain_probability);
  spec.publish_count = non_negative(cfg.get_int("campaign.publish_count", 10), "publish_count");
  spec.session_count = non_negative(cfg.get_int("campaign.session_count", 1), "session_count");
  if (auto acl = cfg.find_string("campaign.acl")) spec.acl = AclRule::parse(*acl);
  spec.topic_tokens = cfg.get_list("campaign.topic_tokens");
  if (cfg.has("campaign.topic_names")) {
    auto names = cfg.get_list("campaign.topic_names");
    for (auto& t : tokenize_topics(names))
      if (std::find(spec.topic_tokens.begin(), spec.topic_tokens.end(), t) == spec.topic_tokens.end())
        spec.topic_tokens.push_back(t);
  }
  spec.topic_levels = non_negative(cfg.get_int("campaign.topic_levels", 3), "topic_levels");

  spec.mss = non_negative(cfg.get_int("network.mss", static_cast<std::int64_t>(spec.mss)), "mss");
  spec.extended_length = cfg.get_bool("network.extended_length", false);
  if (auto ip = cfg.find_string("network.client_ip")) spec.client_ip = net::Ipv4Address::parse(*ip);
  if (auto ip = cfg.find_string("network.broker_ip")) spec.broker_ip = net::Ipv4Address::parse(*ip);
  spec.broker_port = port_value(cfg.get_int("network.broker_port", spec.broker_port), "broker_port");
  spec.client_port = port_value(cfg.get_int("network.client_port", 0), "client_port");
  spec.gap_us = non_negative(cfg.get_int("network.gap_us", static_cast<std::int64_t>(spec.gap_us)), "gap_us");
  spec.start_time_us =
      non_negative(cfg.get_int("network.start_time_us", static_cast<std::int64_t>(spec.start_time_us)), "start_time_us");

  auto& c = spec.connect;
  c.client_id = cfg.get_string("connect.client_id", c.client_id);
  if (auto u = cfg.find_string("connect.username")) c.username = *u;
  if (auto p = cfg.find_string("connect.password")) c.password = to_bytes(*p);
  c.username_flag = cfg.get_bool("connect.username_flag", c.username_flag);
  c.password_flag = cfg.get_bool("connect.password_flag", c.password_flag);
  c.clean_session = cfg.get_bool("connect.clean_session", c.clean_session);
  c.keep_alive = port_value(cfg.get_int("connect.keep_alive", c.keep_alive), "keep_alive");
  c.will_flag = cfg.get_bool("connect.will_flag", c.will_flag);
  auto wq = cfg.get_int("connect.will_qos", c.will_qos);
  if (wq < 0 || wq > 2) fail(ErrorCode::ConfigError, "will_qos must be 0, 1 or 2");
  c.will_qos = static_cast<std::uint8_t>(wq);
  c.will_retain = cfg.get_bool("connect.will_retain", c.will_retain);
  c.will_topic = cfg.get_string("connect.will_topic", c.will_topic);
  if (auto m = cfg.find_string("connect.will_message")) c.will_message = to_bytes(*m);

  validate_spec(spec);
  return spec;
}

}  // namespace fpaforge::craft
