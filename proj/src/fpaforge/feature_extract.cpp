#include "fpaforge/feature_extract.hpp"

#include <ctime>
#include <map>
#include <tuple>

#include <fmt/format.h>

#include "fpaforge/csv.hpp"
#include "fpaforge/error.hpp"
#include "fpaforge/mqtt_codec.hpp"

namespace fpaforge::features {

namespace {

using K = ColumnKind;
using R = MlRole;

constexpr std::array<Column, kFeatureCount> kSchema{{
    {1, "frame.time", K::Text, R::Drop},
    {2, "ip.src_host", K::Text, R::Drop},
    {3, "ip.dst_host", K::Text, R::Drop},
    {4, "arp.dst.proto_ipv4", K::Text, R::Drop},
    {5, "arp.opcode", K::Numeric, R::Numeric},
    {6, "arp.hw.size", K::Numeric, R::Numeric},
    {7, "arp.src.proto_ipv4", K::Text, R::Drop},
    {8, "icmp.checksum", K::Numeric, R::Numeric},
    {9, "icmp.seq_le", K::Numeric, R::Numeric},
    {10, "icmp.transmit_timestamp", K::Numeric, R::Drop},
    {11, "icmp.unused", K::Numeric, R::Numeric},
    {12, "http.file_data", K::Text, R::Drop},
    {13, "http.content_length", K::Numeric, R::Numeric},
    {14, "http.request.uri.query", K::Text, R::Drop},
    {15, "http.request.method", K::Text, R::Categorical},
    {16, "http.referer", K::Text, R::Categorical},
    {17, "http.request.full_uri", K::Text, R::Drop},
    {18, "http.request.version", K::Text, R::Categorical},
    {19, "http.response", K::Numeric, R::Numeric},
    {20, "http.tls_port", K::Numeric, R::Numeric},
    {21, "tcp.ack", K::Numeric, R::Numeric},
    {22, "tcp.ack_raw", K::Numeric, R::Numeric},
    {23, "tcp.checksum", K::Hex, R::Numeric},
    {24, "tcp.connection.fin", K::Numeric, R::Numeric},
    {25, "tcp.connection.rst", K::Numeric, R::Numeric},
    {26, "tcp.connection.syn", K::Numeric, R::Numeric},
    {27, "tcp.connection.synack", K::Numeric, R::Numeric},
    {28, "tcp.dstport", K::Numeric, R::Drop},
    {29, "tcp.flags", K::Hex, R::Numeric},
    {30, "tcp.flags.ack", K::Numeric, R::Numeric},
    {31, "tcp.len", K::Numeric, R::Numeric},
    {32, "tcp.options", K::Text, R::Drop},
    {33, "tcp.payload", K::Text, R::Drop},
    {34, "tcp.seq", K::Numeric, R::Numeric},
    {35, "tcp.srcport", K::Numeric, R::Drop},
    {36, "udp.port", K::Numeric, R::Drop},
    {37, "udp.stream", K::Numeric, R::Numeric},
    {38, "udp.time_delta", K::Numeric, R::Numeric},
    {39, "dns.qry.name", K::Numeric, R::Numeric},
    {40, "dns.qry.name.len", K::Numeric, R::Categorical},
    {41, "dns.qry.qu", K::Numeric, R::Numeric},
    {42, "dns.qry.type", K::Numeric, R::Numeric},
    {43, "dns.retransmission", K::Numeric, R::Numeric},
    {44, "dns.retransmit_request", K::Numeric, R::Numeric},
    {45, "dns.retransmit_request_in", K::Numeric, R::Numeric},
    {46, "mqtt.conack.flags", K::Hex, R::Categorical},
    {47, "mqtt.conflag.cleansess", K::Numeric, R::Numeric},
    {48, "mqtt.conflags", K::Hex, R::Numeric},
    {49, "mqtt.hdrflags", K::Hex, R::Numeric},
    {50, "mqtt.len", K::Numeric, R::Numeric},
    {51, "mqtt.msg_decoded_as", K::Numeric, R::Numeric},
    {52, "mqtt.msg", K::Text, R::Drop},
    {53, "mqtt.msgtype", K::Numeric, R::Numeric},
    {54, "mqtt.proto_len", K::Numeric, R::Numeric},
    {55, "mqtt.protoname", K::Text, R::Categorical},
    {56, "mqtt.topic", K::Text, R::Categorical},
    {57, "mqtt.topic_len", K::Numeric, R::Numeric},
    {58, "mqtt.ver", K::Numeric, R::Numeric},
    {59, "mbtcp.len", K::Numeric, R::Numeric},
    {60, "mbtcp.trans_id", K::Numeric, R::Numeric},
    {61, "mbtcp.unit_id", K::Numeric, R::Numeric},
}};

std::vector<int> id_range(int first, int last) {
  std::vector<int> ids;
  for (int i = first; i <= last; ++i) ids.push_back(i);
  return ids;
}

const std::vector<int> kTcpCore{21, 22, 23, 24, 25, 26, 27, 29, 30, 31, 34};
const std::vector<int> kMqttUsed{46, 47, 48, 49, 50, 51, 53, 54, 55, 56, 57, 58};

FeatureRecord null_record() {
  FeatureRecord r;
  for (std::size_t i = 0; i < kFeatureCount; ++i) r[i] = kSchema[i].kind == K::Numeric ? "0" : "";
  return r;
}

void set(FeatureRecord& r, int id, std::string value) { r[static_cast<std::size_t>(id - 1)] = std::move(value); }
template <typename T>
void set_num(FeatureRecord& r, int id, T value) {
  set(r, id, fmt::format("{}", value));
}

using FlowKey = std::tuple<std::uint32_t, std::uint16_t, std::uint32_t, std::uint16_t>;

}  // namespace

const std::array<Column, kFeatureCount>& schema() { return kSchema; }

std::optional<std::size_t> column_index(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureCount; ++i)
    if (kSchema[i].name == name) return i;
  return std::nullopt;
}

const Column& column_by_name(std::string_view name) {
  auto idx = column_index(name);
  if (!idx) fail(ErrorCode::InvalidArgument, fmt::format("'{}' is not a schema column", name));
  return kSchema[*idx];
}

Profile profile_by_name(std::string_view raw) {
  std::string name(raw);
  for (auto& ch : name)
    if (ch == '-') ch = '_';
  if (name == "full61" || name == "full") return {"full61", id_range(1, 61)};
  if (name == "tcp") return {"tcp", id_range(21, 35)};
  if (name == "mqtt") return {"mqtt", id_range(46, 58)};
  if (name == "tcp_core") return {"tcp_core", kTcpCore};
  if (name == "tcp_mqtt") {
    auto ids = kTcpCore;
    ids.insert(ids.end(), kMqttUsed.begin(), kMqttUsed.end());
    return {"tcp_mqtt", ids};
  }
  if (name == "tcp_mqtt_port") {
    std::vector<int> ids{21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31, 34};
    ids.insert(ids.end(), kMqttUsed.begin(), kMqttUsed.end());
    return {"tcp_mqtt_port", ids};
  }
  fail(ErrorCode::InvalidArgument, fmt::format("unknown feature profile '{}'", raw));
}

std::vector<std::string> profile_names() { return {"full61", "tcp", "mqtt", "tcp_mqtt", "tcp_mqtt_port", "tcp_core"}; }

std::string format_frame_time(capture::Timestamp ts) {
  std::time_t t = static_cast<std::time_t>(ts.sec);
  std::tm tm{};
  gmtime_r(&t, &tm);
  return fmt::format("{:04}-{:02}-{:02} {:02}:{:02}:{:02}.{:06}", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                     tm.tm_hour, tm.tm_min, tm.tm_sec, ts.usec);
}

ExtractResult extract_features(std::span<const capture::CaptureFrame> frames) {
  ExtractResult result;
  std::map<FlowKey, std::uint32_t> base_seq;
  for (const auto& frame : frames) {
    auto d = capture::dissect(frame);
    if (!d) {
      ++result.skipped_frames;
      continue;
    }
    FeatureRecord r = null_record();
    set(r, 1, format_frame_time(frame.ts));
    set(r, 2, d->ip_src.to_string());
    set(r, 3, d->ip_dst.to_string());

    using namespace net::tcp_flags;
    const FlowKey fwd{d->ip_src.value, d->src_port, d->ip_dst.value, d->dst_port};
    const FlowKey rev{d->ip_dst.value, d->dst_port, d->ip_src.value, d->src_port};
    const bool syn = d->tcp_flags & kSyn;
    const bool ack = d->tcp_flags & kAck;
    auto fwd_it = base_seq.find(fwd);
    if (fwd_it == base_seq.end() || syn) fwd_it = base_seq.insert_or_assign(fwd, syn ? d->seq : d->seq - 1).first;
    set_num(r, 34, static_cast<std::uint32_t>(d->seq - fwd_it->second));
    if (ack) {
      auto rev_it = base_seq.find(rev);
      if (rev_it == base_seq.end()) rev_it = base_seq.emplace(rev, d->ack - 1).first;
      set_num(r, 21, static_cast<std::uint32_t>(d->ack - rev_it->second));
      set_num(r, 22, d->ack);
    }
    set(r, 23, fmt::format("0x{:04x}", d->tcp_checksum));
    set_num(r, 24, (d->tcp_flags & kFin) ? 1 : 0);
    set_num(r, 25, (d->tcp_flags & kRst) ? 1 : 0);
    set_num(r, 26, (syn && !ack) ? 1 : 0);
    set_num(r, 27, (syn && ack) ? 1 : 0);
    set_num(r, 28, d->dst_port);
    set(r, 29, fmt::format("0x{:03x}", d->tcp_flags));
    set_num(r, 30, ack ? 1 : 0);
    set_num(r, 31, d->payload.size());
    set(r, 32, to_hex(d->tcp_options));
    set(r, 33, to_hex(d->payload));
    set_num(r, 35, d->src_port);

    const bool mqtt_port = d->src_port == mqtt::kDefaultPort || d->dst_port == mqtt::kDefaultPort;
    if (mqtt_port && !d->payload.empty()) {
      try {
        auto decoded = mqtt::try_decode_packet(d->payload);
        if (!decoded) fail(ErrorCode::Incomplete, "segment holds a partial MQTT packet");
        const mqtt::Packet& pkt = decoded->packet;
        set(r, 49, fmt::format("0x{:02x}", pkt.header_flags));
        set_num(r, 50, pkt.remaining_length);
        set_num(r, 53, static_cast<int>(pkt.type));
        switch (pkt.type) {
          case mqtt::PacketType::Connect: {
            auto c = mqtt::parse_connect(pkt);
            set_num(r, 47, (c.flags >> 1) & 1);
            set(r, 48, fmt::format("0x{:02x}", c.flags));
            set_num(r, 54, c.protocol_name.size());
            set(r, 55, c.protocol_name);
            set_num(r, 58, c.protocol_level);
            break;
          }
          case mqtt::PacketType::Connack:
            set(r, 46, fmt::format("0x{:02x}", mqtt::connack_flags(pkt)));
            break;
          case mqtt::PacketType::Publish: {
            auto p = mqtt::parse_publish(pkt);
            set(r, 52, to_hex(p.payload));
            set(r, 56, p.topic);
            set_num(r, 57, p.topic.size());
            break;
          }
          default:
            break;
        }
      } catch (const Error&) {
        ++result.mqtt_decode_errors;
        for (int id = 46; id <= 58; ++id) set(r, id, kSchema[static_cast<std::size_t>(id - 1)].kind == K::Numeric ? "0" : "");
      }
    }
    result.records.push_back(std::move(r));
  }
  return result;
}

std::vector<std::string> csv_header(const Profile& profile, const std::optional<LabelSpec>& label) {
  std::vector<std::string> header;
  for (int id : profile.ids) header.emplace_back(kSchema.at(static_cast<std::size_t>(id - 1)).name);
  if (label) {
    header.emplace_back("Attack_label");
    header.emplace_back("Attack_type");
  }
  return header;
}

std::string render_feature_csv(std::span<const FeatureRecord> records, const Profile& profile,
                               const std::optional<LabelSpec>& label) {
  for (int id : profile.ids)
    if (id < 1 || id > static_cast<int>(kFeatureCount))
      fail(ErrorCode::InvalidArgument, fmt::format("profile '{}' names feature F{}", profile.name, id));
  std::string out;
  append_csv_row(out, csv_header(profile, label));
  std::vector<std::string> row;
  for (const auto& rec : records) {
    row.clear();
    for (int id : profile.ids) row.push_back(rec[static_cast<std::size_t>(id - 1)]);
    if (label) {
      row.emplace_back(label->attack_type == "Normal" ? "0" : "1");
      row.push_back(label->attack_type);
    }
    append_csv_row(out, row);
  }
  return out;
}

void write_feature_csv(std::span<const FeatureRecord> records, const std::filesystem::path& path,
                       const Profile& profile, const std::optional<LabelSpec>& label) {
  write_text_file(path, render_feature_csv(records, profile, label));
}

}  // namespace fpaforge::features
