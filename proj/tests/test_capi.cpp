#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fpaforge/fpaforge.h"

namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  auto dir = fs::path(FPAFORGE_TEST_TMP) / (std::string("capi.") + info->name());
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Config {
  fpa_config* cfg = nullptr;
  explicit Config(const char* text) { EXPECT_EQ(fpa_config_parse(text, &cfg), FPA_OK) << fpa_last_error(); }
  ~Config() { fpa_config_free(cfg); }
};

const char* kCampaign =
    "[campaign]\n"
    "base_topic = Building1/Floor3/Sensor1\n"
    "topic_pad_range = [0, 3]\n"
    "payload_pad_counts = [0, 40]\n"
    "qos1_probability = 0.5\n"
    "publish_count = 12\n"
    "[network]\n"
    "mss = 1460\n";

}  // namespace

TEST(CApi, VersionAndStatusNames) {
  EXPECT_STREQ(fpa_version(), "0.1.0");
  EXPECT_STREQ(fpa_status_name(FPA_OK), "Ok");
  EXPECT_STREQ(fpa_status_name(FPA_MSS_EXCEEDED), "MssExceeded");
  EXPECT_STREQ(fpa_last_error(), "");
}

TEST(CApi, PublishRoundTrip) {
  const uint8_t payload[] = {'2', '7', '.', '5'};
  fpa_buffer buf{};
  ASSERT_EQ(fpa_mqtt_encode_publish("a/b", payload, 4, 1, 0, 7, &buf), FPA_OK);
  EXPECT_EQ(buf.data[0], 0x32);
  int type = 0;
  size_t size = 0;
  ASSERT_EQ(fpa_mqtt_peek(buf.data, buf.size, &type, &size), FPA_OK);
  EXPECT_EQ(type, 3);
  EXPECT_EQ(size, buf.size);
  EXPECT_EQ(fpa_mqtt_peek(buf.data, buf.size - 1, &type, &size), FPA_INCOMPLETE);
  fpa_publish_fields f{};
  char topic[16];
  ASSERT_EQ(fpa_mqtt_decode_publish(buf.data, buf.size, &f, topic, sizeof(topic)), FPA_OK);
  EXPECT_STREQ(topic, "a/b");
  EXPECT_EQ(f.qos, 1);
  EXPECT_EQ(f.msgid, 7);
  EXPECT_EQ(f.payload_length, 4u);
  EXPECT_EQ(f.remaining_length, 2u + 3u + 2u + 4u);
  fpa_buffer_free(&buf);
  EXPECT_EQ(buf.data, nullptr);
}

TEST(CApi, ErrorCodesAndMessages) {
  fpa_buffer buf{};
  EXPECT_EQ(fpa_mqtt_encode_publish("a/+", nullptr, 0, 0, 0, 0, &buf), FPA_WILDCARD_IN_TOPIC);
  EXPECT_STRNE(fpa_last_error(), "");
  EXPECT_EQ(fpa_mqtt_encode_publish("a", nullptr, 0, 2, 0, 1, &buf), FPA_UNSUPPORTED_QOS);
  EXPECT_EQ(fpa_mqtt_encode_publish("a", nullptr, 0, 3, 0, 1, &buf), FPA_PROTOCOL_VIOLATION);
  EXPECT_EQ(fpa_mqtt_validate_topic("$SYS/x"), FPA_LEADING_DOLLAR);
  EXPECT_EQ(fpa_mqtt_validate_topic("ok/topic"), FPA_OK);
  EXPECT_STREQ(fpa_last_error(), "");
  EXPECT_EQ(fpa_mqtt_encode_publish(nullptr, nullptr, 0, 0, 0, 0, &buf), FPA_INVALID_ARGUMENT);
}

TEST(CApi, LengthArithmetic) {
  uint32_t v = 0;
  ASSERT_EQ(fpa_compute_mqtt_len(24, 1, 9, &v), FPA_OK);
  EXPECT_EQ(v, 37u);
  EXPECT_EQ(fpa_framed_mqtt_size(37), 39u);
  EXPECT_EQ(fpa_framed_mqtt_size(200), 203u);
  ASSERT_EQ(fpa_compute_tcp_len(37, 1460, &v), FPA_OK);
  EXPECT_EQ(v, 39u);
  EXPECT_EQ(fpa_compute_tcp_len(1459, 1460, &v), FPA_MSS_EXCEEDED);
  size_t budget = 0;
  ASSERT_EQ(fpa_max_padding_budget(24, 1, 9, 1460, 0, &budget), FPA_OK);
  EXPECT_GT(budget, 0u);
  uint16_t sum = 0;
  const uint8_t seg[20] = {0x04, 0xd2, 0x07, 0x5b, 0, 0, 0, 1, 0, 0, 0, 0, 0x50, 0x02, 0xff, 0xff, 0, 0, 0, 0};
  ASSERT_EQ(fpa_tcp_checksum("10.0.0.1", "10.0.0.2", seg, sizeof(seg), &sum), FPA_OK);
  EXPECT_NE(sum, 0);
  EXPECT_EQ(fpa_tcp_checksum("10.0.0", "10.0.0.2", seg, sizeof(seg), &sum), FPA_INVALID_ARGUMENT);
}

TEST(CApi, ConfigAccessors) {
  Config c("[campaign]\npublish_count = 5\n");
  int64_t v = 0;
  ASSERT_EQ(fpa_config_get_int(c.cfg, "campaign.publish_count", &v), FPA_OK);
  EXPECT_EQ(v, 5);
  EXPECT_TRUE(fpa_config_has(c.cfg, "campaign.publish_count"));
  ASSERT_EQ(fpa_config_set(c.cfg, "campaign.publish_count=9"), FPA_OK);
  fpa_config_get_int(c.cfg, "campaign.publish_count", &v);
  EXPECT_EQ(v, 9);
  EXPECT_EQ(fpa_config_set(c.cfg, "novalue"), FPA_CONFIG_ERROR);
  fpa_config* bad = nullptr;
  EXPECT_EQ(fpa_config_parse("[x\n", &bad), FPA_CONFIG_ERROR);
  EXPECT_EQ(bad, nullptr);
  EXPECT_EQ(fpa_config_load("/nonexistent/file.conf", &bad), FPA_IO);
}

TEST(CApi, CampaignPcapExtractPipeline) {
  const auto dir = temp_dir();
  Config c(kCampaign);
  fpa_campaign* camp = nullptr;
  ASSERT_EQ(fpa_campaign_generate(c.cfg, 7, &camp), FPA_OK) << fpa_last_error();
  EXPECT_EQ(fpa_campaign_session_count(camp), 1u);
  EXPECT_EQ(fpa_campaign_publish_count(camp), 12u);
  const size_t frames = fpa_campaign_frame_count(camp);
  EXPECT_GE(frames, 5u + 12u * 2u);
  fpa_publish_info info{};
  for (size_t i = 0; i < 12; ++i) {
    ASSERT_EQ(fpa_campaign_publish(camp, i, &info), FPA_OK);
    EXPECT_EQ(std::strncmp(info.topic, info.base_topic, std::strlen(info.base_topic)), 0);
    EXPECT_EQ(info.tcp_len, fpa_framed_mqtt_size(info.mqtt_len));
    EXPECT_EQ(info.payload_len, info.base_payload_len + info.payload_pad);
  }
  EXPECT_EQ(fpa_campaign_publish(camp, 12, &info), FPA_RANGE_ERROR);
  const auto pcap = dir / "c.pcap";
  ASSERT_EQ(fpa_campaign_write_pcap(camp, pcap.c_str()), FPA_OK);
  fpa_buffer bytes{};
  ASSERT_EQ(fpa_campaign_pcap_bytes(camp, &bytes), FPA_OK);
  EXPECT_EQ(std::string(reinterpret_cast<char*>(bytes.data), bytes.size), slurp(pcap));
  fpa_buffer_free(&bytes);
  ASSERT_EQ(fpa_campaign_write_manifest(camp, (dir / "m.csv").c_str()), FPA_OK);
  fpa_campaign_free(camp);

  fpa_extract_summary sum{};
  ASSERT_EQ(fpa_extract_pcap(pcap.c_str(), (dir / "f.csv").c_str(), "full61", "MQTT_FPA", &sum), FPA_OK);
  EXPECT_EQ(sum.frames, frames);
  EXPECT_EQ(sum.records, frames);
  EXPECT_EQ(sum.columns, 63u);
  EXPECT_EQ(sum.mqtt_decode_errors, 0u);
  EXPECT_EQ(fpa_extract_pcap(pcap.c_str(), (dir / "g.csv").c_str(), "bogus", nullptr, &sum), FPA_INVALID_ARGUMENT);
}

TEST(CApi, CampaignDeterministic) {
  Config c(kCampaign);
  fpa_campaign *a = nullptr, *b = nullptr;
  ASSERT_EQ(fpa_campaign_generate(c.cfg, 11, &a), FPA_OK);
  ASSERT_EQ(fpa_campaign_generate(c.cfg, 11, &b), FPA_OK);
  fpa_buffer x{}, y{};
  fpa_campaign_pcap_bytes(a, &x);
  fpa_campaign_pcap_bytes(b, &y);
  ASSERT_EQ(x.size, y.size);
  EXPECT_EQ(std::memcmp(x.data, y.data, x.size), 0);
  fpa_buffer_free(&x);
  fpa_buffer_free(&y);
  fpa_campaign_free(a);
  fpa_campaign_free(b);
}

TEST(CApi, CampaignRejectsUnknownKey) {
  Config c("[campaign]\nbogus = 1\n");
  fpa_campaign* camp = nullptr;
  EXPECT_EQ(fpa_campaign_generate(c.cfg, 1, &camp), FPA_CONFIG_ERROR);
  EXPECT_EQ(camp, nullptr);
}

TEST(CApi, SimulateAndMd1) {
  Config c("[experiment]\neta = [117]\nmu = [120]\nfp = [0, 8.012]\nhorizon = 1h\nrepeats = 2\nseed = 3\n");
  fpa_results* r = nullptr;
  ASSERT_EQ(fpa_simulate(c.cfg, &r), FPA_OK) << fpa_last_error();
  ASSERT_EQ(fpa_results_count(r), 2u);
  fpa_cell cell{};
  ASSERT_EQ(fpa_results_get(r, 1, &cell), FPA_OK);
  EXPECT_DOUBLE_EQ(cell.fp_pct, 8.012);
  EXPECT_EQ(cell.repeats, 2u);
  EXPECT_EQ(fpa_results_get(r, 2, &cell), FPA_RANGE_ERROR);
  fpa_buffer csv{};
  ASSERT_EQ(fpa_results_csv(r, &csv), FPA_OK);
  EXPECT_EQ(std::string(reinterpret_cast<char*>(csv.data), 6), "fp,eta");
  fpa_buffer_free(&csv);
  fpa_results_free(r);
  double w = 0;
  ASSERT_EQ(fpa_md1_wait(0.975, 120, &w), FPA_OK);
  EXPECT_NEAR(w * 3600, 585.0, 1e-9);
  EXPECT_EQ(fpa_md1_wait(1.0, 120, &w), FPA_UNSTABLE);
  ASSERT_EQ(fpa_parse_horizon("2d", &w), FPA_OK);
  EXPECT_EQ(w, 48.0);
}

TEST(CApi, Statistics) {
  const double x[] = {1, 2, 3}, y[] = {2, 4, 6}, z[] = {0, 0, 0};
  double v = 0;
  ASSERT_EQ(fpa_cosine(x, y, 3, &v), FPA_OK);
  EXPECT_NEAR(v, 1.0, 1e-12);
  EXPECT_EQ(fpa_cosine(x, z, 3, &v), FPA_ZERO_VECTOR);
  ASSERT_EQ(fpa_pearson(x, y, 3, &v), FPA_OK);
  EXPECT_NEAR(v, 1.0, 1e-12);
  EXPECT_EQ(fpa_pearson(x, z, 3, &v), FPA_ZERO_VARIANCE);
  ASSERT_EQ(fpa_euclidean(x, y, 3, &v), FPA_OK);
  EXPECT_NEAR(v, std::sqrt(14.0), 1e-12);
  const double id[] = {1, 0, 0, 1}, sing[] = {1, 1, 1, 1}, a[] = {3, 4}, m[] = {0, 0};
  ASSERT_EQ(fpa_mahalanobis(a, m, id, 2, 0, &v), FPA_OK);
  EXPECT_NEAR(v, 5.0, 1e-12);
  EXPECT_EQ(fpa_mahalanobis(a, m, sing, 2, 0, &v), FPA_SINGULAR_COVARIANCE);
  EXPECT_EQ(fpa_mahalanobis(a, m, sing, 2, 1, &v), FPA_OK);
  const double p[] = {0.5, 0.5}, q[] = {0.25, 0.75};
  ASSERT_EQ(fpa_kl_discrete(p, q, 2, &v), FPA_OK);
  EXPECT_NEAR(v, 0.14384, 1e-5);
  ASSERT_EQ(fpa_kl_kde_1d(x, 3, x, 3, &v), FPA_OK);
  EXPECT_NEAR(v, 0.0, 1e-9);
  ASSERT_EQ(fpa_attack_success_rate(81, 101, &v), FPA_OK);
  EXPECT_NEAR(v, 80.198, 1e-3);
  EXPECT_EQ(fpa_attack_success_rate(2, 1, &v), FPA_INVALID_ARGUMENT);
  const double probs[] = {0.96, 0.02, 0.02};
  fpa_confidence_entropy ce{};
  ASSERT_EQ(fpa_confidence_entropy_of(probs, 3, &ce), FPA_OK);
  EXPECT_DOUBLE_EQ(ce.confidence, 0.96);
  EXPECT_TRUE(ce.high_confidence);
}

TEST(CApi, AnalyzeSurrogateAndPlot) {
  const auto dir = temp_dir();
  Config ref("[campaign]\ntopic_pad_range = [0, 0]\npublish_count = 30\nqos1_probability = 0.5\n");
  Config crafted(kCampaign);
  fpa_campaign *a = nullptr, *b = nullptr;
  ASSERT_EQ(fpa_campaign_generate(ref.cfg, 1, &a), FPA_OK);
  ASSERT_EQ(fpa_campaign_generate(crafted.cfg, 2, &b), FPA_OK);
  fpa_campaign_write_pcap(a, (dir / "a.pcap").c_str());
  fpa_campaign_write_pcap(b, (dir / "b.pcap").c_str());
  fpa_campaign_free(a);
  fpa_campaign_free(b);
  fpa_extract_summary s{};
  ASSERT_EQ(fpa_extract_pcap((dir / "a.pcap").c_str(), (dir / "a.csv").c_str(), "full61", nullptr, &s), FPA_OK);
  ASSERT_EQ(fpa_extract_pcap((dir / "b.pcap").c_str(), (dir / "b.csv").c_str(), "full61", nullptr, &s), FPA_OK);

  fpa_analyze_options ao;
  fpa_analyze_options_default(&ao);
  ao.pairwise = 0;
  ASSERT_EQ(fpa_analyze_csv((dir / "a.csv").c_str(), (dir / "b.csv").c_str(), (dir / "m.csv").c_str(), &ao), FPA_OK)
      << fpa_last_error();
  EXPECT_EQ(slurp(dir / "m.csv").rfind("metric,mode,value", 0), 0u);

  std::ofstream train(dir / "train.csv");
  train << "x,y,Attack_type\n";
  for (int i = 0; i < 40; ++i) train << i % 7 << "," << i % 5 << ",Normal\n" << 50 + i % 7 << ",1,DDoS\n";
  train.close();
  std::ofstream probe(dir / "probe.csv");
  probe << "x,y\n1,1\n60,1\n";
  probe.close();
  fpa_train_options to;
  fpa_train_options_default(&to);
  fpa_fit_summary fit{};
  ASSERT_EQ(fpa_surrogate_fit((dir / "train.csv").c_str(), "Attack_type", (dir / "model.txt").c_str(), &to, &fit),
            FPA_OK)
      << fpa_last_error();
  EXPECT_EQ(fit.classes, 2u);
  EXPECT_LE(fit.final_loss, fit.initial_loss);
  fpa_fpa_summary ev{};
  ASSERT_EQ(fpa_surrogate_eval((dir / "model.txt").c_str(), (dir / "probe.csv").c_str(), "Normal",
                               (dir / "report.csv").c_str(), &ev),
            FPA_OK)
      << fpa_last_error();
  EXPECT_EQ(ev.samples, 2u);
  EXPECT_EQ(ev.misclassified, 1u);
  EXPECT_DOUBLE_EQ(ev.asr_percent, 50.0);

  ASSERT_EQ(fpa_plot_csv((dir / "m.csv").c_str(), "bar", "metric", "value", nullptr, "metrics",
                         (dir / "m.svg").c_str()),
            FPA_OK)
      << fpa_last_error();
  EXPECT_EQ(slurp(dir / "m.svg").rfind("<svg", 0), 0u);
  EXPECT_EQ(fpa_plot_csv((dir / "m.csv").c_str(), "pie", "metric", "value", nullptr, "", (dir / "p.svg").c_str()),
            FPA_INVALID_ARGUMENT);
}

TEST(CApi, LiveRejectsTlsPortAndPublicHost) {
  Config c("[campaign]\npublish_count = 1\n");
  fpa_live_options o;
  fpa_live_options_default(&o);
  EXPECT_EQ(o.host, nullptr);
  EXPECT_EQ(o.port, 1883);
  fpa_live_report rep{};
  o.port = 8883;
  EXPECT_EQ(fpa_live_send(c.cfg, 1, &o, &rep), FPA_CONFIG_ERROR);
  o.port = 1883;
  o.host = "test.mosquitto.org";
  EXPECT_EQ(fpa_live_send(c.cfg, 1, &o, &rep), FPA_CONFIG_ERROR);
}

TEST(CApi, NullArguments) {
  double v;
  EXPECT_EQ(fpa_cosine(nullptr, nullptr, 1, &v), FPA_INVALID_ARGUMENT);
  EXPECT_EQ(fpa_simulate(nullptr, nullptr), FPA_INVALID_ARGUMENT);
  fpa_config_free(nullptr);
  fpa_campaign_free(nullptr);
  fpa_results_free(nullptr);
  fpa_buffer_free(nullptr);
  EXPECT_EQ(fpa_results_count(nullptr), 0u);
}
