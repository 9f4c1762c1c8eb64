#include "fpaforge/fpaforge.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "fpaforge/analysis.hpp"
#include "fpaforge/capture_io.hpp"
#include "fpaforge/craft_engine.hpp"
#include "fpaforge/csv.hpp"
#include "fpaforge/error.hpp"
#include "fpaforge/feature_extract.hpp"
#include "fpaforge/kv_config.hpp"
#include "fpaforge/live.hpp"
#include "fpaforge/mqtt_codec.hpp"
#include "fpaforge/plot.hpp"
#include "fpaforge/soc_sim.hpp"
#include "fpaforge/stats.hpp"
#include "fpaforge/surrogate.hpp"
#include "fpaforge/tcp_encap.hpp"

using namespace fpaforge;

struct fpa_config {
  KvConfig kv;
};

struct fpa_campaign {
  craft::Campaign campaign;
  std::vector<capture::CaptureFrame> frames;
  struct Entry {
    std::size_t session;
    std::size_t frame_index;
    const craft::PublishRecord* record;
  };
  std::vector<Entry> entries;
  Bytes base_payload;
};

struct fpa_results {
  std::vector<soc::CellResult> cells;
};

namespace {

thread_local std::string g_last_error;

template <class F>
fpa_status guard(F&& f) {
  try {
    g_last_error.clear();
    f();
    return FPA_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<fpa_status>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return FPA_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return FPA_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return FPA_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) fail(ErrorCode::InvalidArgument, fmt::format("{} must not be NULL", what));
}

stats::Vector vec(const double* x, std::size_t n) {
  need(x, "vector");
  return Eigen::Map<const stats::Vector>(x, static_cast<Eigen::Index>(n));
}

void to_buffer(const Bytes& bytes, fpa_buffer* out) {
  need(out, "out");
  out->data = nullptr;
  out->size = 0;
  if (bytes.empty()) return;
  auto* p = static_cast<std::uint8_t*>(std::malloc(bytes.size()));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, bytes.data(), bytes.size());
  out->data = p;
  out->size = bytes.size();
}

}  // namespace

extern "C" {

const char* fpa_version(void) { return "0.1.0"; }

const char* fpa_status_name(fpa_status status) {
  static thread_local std::string name;
  name = std::string(error_name(static_cast<ErrorCode>(status)));
  return name.c_str();
}

const char* fpa_last_error(void) { return g_last_error.c_str(); }

void fpa_buffer_free(fpa_buffer* buffer) {
  if (!buffer) return;
  std::free(buffer->data);
  buffer->data = nullptr;
  buffer->size = 0;
}

fpa_status fpa_mqtt_encode_publish(const char* topic, const uint8_t* payload, size_t payload_len, int qos, int retain,
                                   uint16_t msgid, fpa_buffer* out) {
  return guard([&] {
    need(topic, "topic");
    if (payload_len) need(payload, "payload");
    mqtt::PublishOptions o;
    o.topic = topic;
    o.qos = qos;
    o.retain = retain != 0;
    if (qos > 0) o.msgid = msgid;
    o.payload.assign(payload, payload + payload_len);
    to_buffer(mqtt::encode_packet(mqtt::build_publish(o)), out);
  });
}

fpa_status fpa_mqtt_decode_publish(const uint8_t* bytes, size_t len, fpa_publish_fields* fields, char* topic_out,
                                   size_t topic_cap) {
  return guard([&] {
    need(bytes, "bytes");
    need(fields, "fields");
    const auto pkt = mqtt::decode_packet(ByteView(bytes, len));
    if (pkt.type != mqtt::PacketType::Publish)
      fail(ErrorCode::ProtocolViolation, fmt::format("packet is {}, not PUBLISH", mqtt::to_string(pkt.type)));
    const auto v = mqtt::parse_publish(pkt);
    fields->qos = v.qos;
    fields->retain = v.retain ? 1 : 0;
    fields->dup = v.dup ? 1 : 0;
    fields->msgid = v.msgid.value_or(0);
    fields->remaining_length = pkt.remaining_length;
    fields->topic_length = v.topic.size();
    fields->payload_length = v.payload.size();
    if (topic_out && topic_cap) {
      const std::size_t n = std::min(topic_cap - 1, v.topic.size());
      std::memcpy(topic_out, v.topic.data(), n);
      topic_out[n] = '\0';
    }
  });
}

fpa_status fpa_mqtt_peek(const uint8_t* bytes, size_t len, int* packet_type, size_t* packet_size) {
  return guard([&] {
    if (len) need(bytes, "bytes");
    auto r = mqtt::try_decode_packet(ByteView(bytes, len));
    if (!r) fail(ErrorCode::Incomplete, "more bytes needed");
    if (packet_type) *packet_type = static_cast<int>(r->packet.type);
    if (packet_size) *packet_size = r->consumed;
  });
}

fpa_status fpa_mqtt_validate_topic(const char* topic) {
  return guard([&] {
    need(topic, "topic");
    mqtt::validate_topic(topic);
  });
}

fpa_status fpa_compute_mqtt_len(size_t topic_bytes, int msgid_present, size_t payload_bytes, uint32_t* out) {
  return guard([&] {
    need(out, "out");
    *out = net::compute_mqtt_len(topic_bytes, msgid_present != 0, payload_bytes);
  });
}

fpa_status fpa_compute_tcp_len(uint32_t mqtt_len, size_t mss, uint32_t* out) {
  return guard([&] {
    need(out, "out");
    *out = net::compute_tcp_len(mqtt_len, mss);
  });
}

uint32_t fpa_framed_mqtt_size(uint32_t mqtt_len) { return net::framed_mqtt_size(mqtt_len); }

fpa_status fpa_max_padding_budget(size_t topic_bytes, int msgid_present, size_t base_payload_bytes, size_t mss,
                                  int extended_length, size_t* out) {
  return guard([&] {
    need(out, "out");
    *out = net::max_padding_budget(topic_bytes, msgid_present != 0, base_payload_bytes, mss, extended_length != 0);
  });
}

fpa_status fpa_tcp_checksum(const char* src_ip, const char* dst_ip, const uint8_t* segment, size_t len,
                            uint16_t* out) {
  return guard([&] {
    need(src_ip, "src_ip");
    need(dst_ip, "dst_ip");
    need(segment, "segment");
    need(out, "out");
    if (len < net::kTcpHeaderBytes) fail(ErrorCode::InvalidArgument, "segment shorter than a TCP header");
    Bytes copy(segment, segment + len);
    copy[16] = copy[17] = 0;
    *out = net::tcp_checksum(net::Ipv4Address::parse(src_ip), net::Ipv4Address::parse(dst_ip), copy);
  });
}

fpa_status fpa_config_new(fpa_config** out) {
  return guard([&] {
    need(out, "out");
    *out = new fpa_config{};
  });
}

fpa_status fpa_config_load(const char* path, fpa_config** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new fpa_config{KvConfig::load(path)};
  });
}

fpa_status fpa_config_parse(const char* text, fpa_config** out) {
  return guard([&] {
    need(text, "text");
    need(out, "out");
    *out = new fpa_config{KvConfig::parse(text)};
  });
}

fpa_status fpa_config_set(fpa_config* config, const char* assignment) {
  return guard([&] {
    need(config, "config");
    need(assignment, "assignment");
    config->kv.set(assignment);
  });
}

int fpa_config_has(const fpa_config* config, const char* key) {
  return config && key && config->kv.has(key) ? 1 : 0;
}

fpa_status fpa_config_get_int(const fpa_config* config, const char* key, int64_t* out) {
  return guard([&] {
    need(config, "config");
    need(key, "key");
    need(out, "out");
    if (!config->kv.has(key)) fail(ErrorCode::ConfigError, fmt::format("missing key '{}'", key));
    *out = config->kv.get_int(key, 0);
  });
}

void fpa_config_free(fpa_config* config) { delete config; }

fpa_status fpa_campaign_generate(const fpa_config* config, uint64_t seed, fpa_campaign** out) {
  return guard([&] {
    need(config, "config");
    need(out, "out");
    const KvConfig kv = config->kv.subset({"campaign.", "network.", "connect."});
    kv.require_known(craft::craft_config_keys());
    const auto spec = craft::craft_spec_from_config(kv);
    auto c = std::make_unique<fpa_campaign>();
    c->campaign = craft::generate_campaign(spec, seed);
    c->frames = craft::campaign_frames(c->campaign);
    c->base_payload = spec.base_payload;
    std::size_t base = 0;
    for (std::size_t si = 0; si < c->campaign.sessions.size(); ++si) {
      const auto& s = c->campaign.sessions[si];
      for (const auto& r : s.publishes) c->entries.push_back({si, base + r.packet_index, &r});
      base += s.packets.size();
    }
    *out = c.release();
  });
}

size_t fpa_campaign_session_count(const fpa_campaign* c) { return c ? c->campaign.sessions.size() : 0; }
size_t fpa_campaign_frame_count(const fpa_campaign* c) { return c ? c->frames.size() : 0; }
size_t fpa_campaign_publish_count(const fpa_campaign* c) { return c ? c->entries.size() : 0; }

fpa_status fpa_campaign_publish(const fpa_campaign* c, size_t index, fpa_publish_info* out) {
  return guard([&] {
    need(c, "campaign");
    need(out, "out");
    if (index >= c->entries.size()) fail(ErrorCode::RangeError, fmt::format("publish index {} out of range", index));
    const auto& e = c->entries[index];
    const auto& r = *e.record;
    *out = fpa_publish_info{};
    out->session = e.session;
    out->frame_index = e.frame_index;
    out->base_topic = r.base_topic.c_str();
    out->topic = r.topic.c_str();
    out->topic_pad = r.topic_pad;
    out->payload_pad = r.payload_pad;
    out->qos = r.qos;
    out->retain = r.retain ? 1 : 0;
    out->has_msgid = r.msgid ? 1 : 0;
    out->msgid = r.msgid.value_or(0);
    out->payload = r.payload.data();
    out->payload_len = r.payload.size();
    out->mqtt_len = r.mqtt_len;
    out->tcp_len = r.tcp_len;
    out->seq = r.seq;
    out->relative_seq = r.relative_seq;
    out->base_payload = c->base_payload.data();
    out->base_payload_len = c->base_payload.size();
  });
}

fpa_status fpa_campaign_write_pcap(const fpa_campaign* c, const char* path) {
  return guard([&] {
    need(c, "campaign");
    need(path, "path");
    capture::write_pcap(c->frames, path);
  });
}

fpa_status fpa_campaign_pcap_bytes(const fpa_campaign* c, fpa_buffer* out) {
  return guard([&] {
    need(c, "campaign");
    to_buffer(capture::serialize_pcap(c->frames), out);
  });
}

fpa_status fpa_campaign_write_manifest(const fpa_campaign* c, const char* path) {
  return guard([&] {
    need(c, "campaign");
    need(path, "path");
    write_text_file(path, craft::publish_manifest_csv(c->campaign));
  });
}

void fpa_campaign_free(fpa_campaign* c) { delete c; }

fpa_status fpa_extract_pcap(const char* pcap_path, const char* csv_path, const char* profile,
                            const char* attack_type, fpa_extract_summary* summary) {
  return guard([&] {
    need(pcap_path, "pcap_path");
    need(csv_path, "csv_path");
    const auto prof = features::profile_by_name(profile ? profile : "full61");
    const auto frames = capture::read_pcap(pcap_path);
    const auto res = features::extract_features(frames);
    std::optional<features::LabelSpec> label;
    if (attack_type) label = features::LabelSpec{attack_type};
    features::write_feature_csv(res.records, csv_path, prof, label);
    if (summary) {
      summary->frames = frames.size();
      summary->records = res.records.size();
      summary->skipped_frames = res.skipped_frames;
      summary->mqtt_decode_errors = res.mqtt_decode_errors;
      summary->columns = features::csv_header(prof, label).size();
    }
  });
}

fpa_status fpa_simulate(const fpa_config* config, fpa_results** out) {
  return guard([&] {
    need(config, "config");
    need(out, "out");
    const KvConfig kv = config->kv.subset({"experiment."});
    kv.require_known(soc::experiment_config_keys());
    auto r = std::make_unique<fpa_results>();
    r->cells = soc::run_experiment(soc::experiment_from_config(kv));
    *out = r.release();
  });
}

size_t fpa_results_count(const fpa_results* r) { return r ? r->cells.size() : 0; }

fpa_status fpa_results_get(const fpa_results* r, size_t index, fpa_cell* out) {
  return guard([&] {
    need(r, "results");
    need(out, "out");
    if (index >= r->cells.size()) fail(ErrorCode::RangeError, fmt::format("cell index {} out of range", index));
    const auto& c = r->cells[index];
    *out = fpa_cell{c.fp_pct,  c.eta,           c.mu,          c.servers,       c.horizon_h,     c.rho,
                    c.repeats, c.mean_cum_wait_s, c.mean_wait_s, c.mean_tp_count, c.mean_fp_count, c.mean_truncated};
  });
}

fpa_status fpa_results_write_csv(const fpa_results* r, const char* path) {
  return guard([&] {
    need(r, "results");
    need(path, "path");
    write_text_file(path, soc::results_csv(r->cells));
  });
}

fpa_status fpa_results_csv(const fpa_results* r, fpa_buffer* out) {
  return guard([&] {
    need(r, "results");
    to_buffer(to_bytes(soc::results_csv(r->cells)), out);
  });
}

void fpa_results_free(fpa_results* r) { delete r; }

fpa_status fpa_md1_wait(double rho, double mu, double* out_hours) {
  return guard([&] {
    need(out_hours, "out");
    *out_hours = soc::analytic_md1_wq(rho, mu);
  });
}

fpa_status fpa_parse_horizon(const char* text, double* out_hours) {
  return guard([&] {
    need(text, "text");
    need(out_hours, "out");
    *out_hours = soc::parse_horizon(text);
  });
}

fpa_status fpa_cosine(const double* x, const double* y, size_t n, double* out) {
  return guard([&] {
    need(out, "out");
    *out = stats::cosine(vec(x, n), vec(y, n));
  });
}

fpa_status fpa_pearson(const double* x, const double* y, size_t n, double* out) {
  return guard([&] {
    need(out, "out");
    *out = stats::pearson(vec(x, n), vec(y, n));
  });
}

fpa_status fpa_euclidean(const double* x, const double* y, size_t n, double* out) {
  return guard([&] {
    need(out, "out");
    *out = stats::euclidean(vec(x, n), vec(y, n));
  });
}

fpa_status fpa_mahalanobis(const double* x, const double* mean, const double* cov, size_t n, int regularize,
                           double* out) {
  return guard([&] {
    need(cov, "cov");
    need(out, "out");
    const auto d = static_cast<Eigen::Index>(n);
    const stats::Matrix c = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(cov, d, d);
    const auto ref = stats::ReferenceDistribution::from_moments(vec(mean, n), c, regularize != 0);
    *out = stats::mahalanobis(vec(x, n), ref);
  });
}

fpa_status fpa_kl_discrete(const double* p, const double* q, size_t n, double* out) {
  return guard([&] {
    need(p, "p");
    need(q, "q");
    need(out, "out");
    *out = stats::kl_discrete(std::span<const double>(p, n), std::span<const double>(q, n));
  });
}

fpa_status fpa_kl_kde_1d(const double* p, size_t np, const double* q, size_t nq, double* out) {
  return guard([&] {
    need(out, "out");
    *out = stats::kl_divergence(vec(p, np), vec(q, nq));
  });
}

fpa_status fpa_attack_success_rate(size_t successes, size_t total, double* out_percent) {
  return guard([&] {
    need(out_percent, "out");
    *out_percent = stats::attack_success_rate(successes, total);
  });
}

fpa_status fpa_confidence_entropy_of(const double* probs, size_t k, fpa_confidence_entropy* out) {
  return guard([&] {
    need(probs, "probs");
    need(out, "out");
    const auto ce = stats::confidence_entropy(std::span<const double>(probs, k));
    *out = fpa_confidence_entropy{ce.confidence, ce.entropy, ce.high_confidence, ce.low_entropy, ce.high_entropy};
  });
}

void fpa_analyze_options_default(fpa_analyze_options* o) {
  if (!o) return;
  const analysis::AnalysisOptions d;
  *o = fpa_analyze_options{0, d.pca_dims, 1, 1, 1, 1, d.max_pairs};
}

fpa_status fpa_analyze_csv(const char* reference_csv, const char* crafted_csv, const char* out_csv,
                           const fpa_analyze_options* options) {
  return guard([&] {
    need(reference_csv, "reference_csv");
    need(crafted_csv, "crafted_csv");
    need(out_csv, "out_csv");
    fpa_analyze_options o;
    fpa_analyze_options_default(&o);
    if (options) o = *options;
    analysis::AnalysisOptions a;
    a.encoding = o.strict_encoding ? model::VocabMode::Strict : model::VocabMode::Extended;
    a.pca_dims = o.pca_dims;
    a.centroid = o.centroid != 0;
    a.paired = o.paired != 0;
    a.pairwise = o.pairwise != 0;
    a.kl = o.kl != 0;
    a.max_pairs = o.max_pairs;
    const auto rows = analysis::analyze(read_table(reference_csv), read_table(crafted_csv), a);
    write_text_file(out_csv, analysis::metrics_csv(rows));
  });
}

void fpa_train_options_default(fpa_train_options* o) {
  if (!o) return;
  const model::TrainParams d;
  *o = fpa_train_options{d.epochs, d.learning_rate, d.l2, d.seed, 0};
}

fpa_status fpa_surrogate_fit(const char* train_csv, const char* label_column, const char* model_path,
                             const fpa_train_options* options, fpa_fit_summary* summary) {
  return guard([&] {
    need(train_csv, "train_csv");
    need(model_path, "model_path");
    fpa_train_options o;
    fpa_train_options_default(&o);
    if (options) o = *options;
    model::TrainParams p{o.epochs, o.learning_rate, o.l2, o.seed};
    const Table t = read_table(train_csv);
    const auto fit = analysis::fit_surrogate(t, label_column ? label_column : "Attack_type",
                                             o.strict_encoding ? model::VocabMode::Strict : model::VocabMode::Extended,
                                             p);
    model::save_model(model_path, fit.model, fit.vocab);
    if (summary) {
      summary->samples = t.rows.size();
      summary->classes = fit.model.classes();
      summary->dimension = fit.model.dimension();
      summary->initial_loss = fit.model.loss_history.front();
      summary->final_loss = fit.model.loss_history.back();
      summary->train_accuracy = fit.train_accuracy;
      summary->step_used = fit.model.step_used;
    }
  });
}

fpa_status fpa_surrogate_eval(const char* model_path, const char* crafted_csv, const char* benign_label,
                              const char* report_csv, fpa_fpa_summary* summary) {
  return guard([&] {
    need(model_path, "model_path");
    need(crafted_csv, "crafted_csv");
    const auto [m, vocab] = model::load_model(model_path);
    const auto r = model::evaluate_fpa(m, vocab, read_table(crafted_csv), benign_label ? benign_label : "Normal");
    if (report_csv) write_text_file(report_csv, model::fpa_report_csv(r));
    if (summary)
      *summary = fpa_fpa_summary{r.samples,        r.misclassified,   r.asr,         r.mean_confidence,
                                 r.mean_entropy,   r.high_confidence, r.low_entropy, r.high_entropy};
  });
}

void fpa_live_options_default(fpa_live_options* o) {
  if (!o) return;
  const live::LiveEndpoint d;
  *o = fpa_live_options{nullptr, d.port, d.timeout_s, nullptr, 0};
}

fpa_status fpa_live_send(const fpa_config* config, uint64_t seed, const fpa_live_options* options,
                         fpa_live_report* report) {
  return guard([&] {
    need(config, "config");
    need(options, "options");
    const KvConfig kv = config->kv.subset({"campaign.", "network.", "connect."});
    kv.require_known(craft::craft_config_keys());
    auto spec = craft::craft_spec_from_config(kv);
    spec.session_count = 1;
    live::LiveEndpoint ep;
    ep.host = options->host ? options->host : "127.0.0.1";
    ep.port = options->port;
    ep.timeout_s = options->timeout_s;
    spec.broker_port = ep.port;
    live::LiveOptions lo;
    if (options->capture_path) lo.capture_path = options->capture_path;
    lo.allow_public = options->allow_public != 0;
    lo.throw_on_timeout = false;
    const auto r = live::live_send(spec, ep, seed, lo);
    if (report)
      *report = fpa_live_report{r.connack_rc,
                                r.sent_count,
                                r.qos1_count,
                                r.puback_count,
                                r.unacked.size(),
                                r.unacked.empty() ? std::uint16_t{0} : r.unacked.front(),
                                r.peer_closed ? 1 : 0};
    if (!r.unacked.empty())
      fail(ErrorCode::PubackTimeout, fmt::format("no PUBACK for msgid {} ({} of {} QoS 1 PUBLISH unacknowledged)",
                                                 r.unacked.front(), r.unacked.size(), r.qos1_count));
  });
}

fpa_status fpa_plot_csv(const char* csv_path, const char* kind, const char* x, const char* y, const char* group,
                        const char* title, const char* svg_path) {
  return guard([&] {
    need(csv_path, "csv_path");
    need(x, "x");
    need(y, "y");
    need(svg_path, "svg_path");
    const std::string k = kind ? kind : "line";
    const Table t = read_table(csv_path);
    plot::ChartSpec spec{title ? title : "", x, y};
    if (k == "line")
      plot::write_svg(svg_path, plot::line_chart_svg(spec, plot::series_from_table(t, x, y, group ? group : "")));
    else if (k == "bar")
      plot::write_svg(svg_path, plot::bar_chart_svg(spec, plot::bars_from_table(t, x, y)));
    else
      fail(ErrorCode::InvalidArgument, fmt::format("plot kind '{}' is not line or bar", k));
  });
}

}  // extern "C"
