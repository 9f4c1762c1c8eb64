#ifndef FPAFORGE_FPAFORGE_H
#define FPAFORGE_FPAFORGE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define FPA_API __attribute__((visibility("default")))
#else
#define FPA_API
#endif

/* Status codes. Every function returning fpa_status sets a thread-local
   message readable with fpa_last_error() on failure. */
typedef enum fpa_status {
  FPA_OK = 0,
  FPA_RANGE_ERROR = 1,
  FPA_MALFORMED_LENGTH = 2,
  FPA_PROTOCOL_VIOLATION = 3,
  FPA_UNSUPPORTED_QOS = 4,
  FPA_WILDCARD_IN_TOPIC = 5,
  FPA_LEADING_DOLLAR = 6,
  FPA_TOO_LONG = 7,
  FPA_EMPTY = 8,
  FPA_INVALID_UTF8 = 9,
  FPA_ENCODE_ERROR = 10,
  FPA_INCOMPLETE = 11,
  FPA_UNKNOWN_TYPE = 12,
  FPA_MSS_EXCEEDED = 13,
  FPA_NOT_ESTABLISHED = 14,
  FPA_BAD_MAGIC = 15,
  FPA_TRUNCATED_RECORD = 16,
  FPA_IO = 17,
  FPA_BUDGET_EXCEEDED = 18,
  FPA_EMPTY_POOL = 19,
  FPA_CONFIG_ERROR = 20,
  FPA_UNSTABLE = 21,
  FPA_ZERO_VECTOR = 22,
  FPA_ZERO_VARIANCE = 23,
  FPA_DIM_MISMATCH = 24,
  FPA_SINGULAR_COVARIANCE = 25,
  FPA_DEGENERATE_SAMPLES = 26,
  FPA_DEGENERATE_LABELS = 27,
  FPA_CONNECT_REFUSED = 28,
  FPA_CONNACK_NONZERO = 29,
  FPA_PUBACK_TIMEOUT = 30,
  FPA_INVALID_ARGUMENT = 31,
  FPA_INTERNAL = 32
} fpa_status;

FPA_API const char* fpa_version(void);
FPA_API const char* fpa_status_name(fpa_status status);
/* Message of the last failure on this thread; "" after success. */
FPA_API const char* fpa_last_error(void);

/* ---- Byte buffers returned by the library ---- */

typedef struct fpa_buffer {
  uint8_t* data;
  size_t size;
} fpa_buffer;

FPA_API void fpa_buffer_free(fpa_buffer* buffer);

/* ---- MQTT codec and segment arithmetic ---- */

typedef struct fpa_publish_fields {
  int qos;
  int retain;
  int dup;
  uint16_t msgid;
  uint32_t remaining_length;
  size_t topic_length;
  size_t payload_length;
} fpa_publish_fields;

/* msgid is ignored for QoS 0. */
FPA_API fpa_status fpa_mqtt_encode_publish(const char* topic, const uint8_t* payload, size_t payload_len, int qos,
                                           int retain, uint16_t msgid, fpa_buffer* out);
/* Decodes exactly one PUBLISH; `topic_out` receives a NUL-terminated copy
   (truncated to topic_cap-1 bytes) when non-NULL. */
FPA_API fpa_status fpa_mqtt_decode_publish(const uint8_t* bytes, size_t len, fpa_publish_fields* fields,
                                           char* topic_out, size_t topic_cap);
/* Type (1..14) and total size of the first packet in `bytes`.
   FPA_INCOMPLETE when more bytes are needed. */
FPA_API fpa_status fpa_mqtt_peek(const uint8_t* bytes, size_t len, int* packet_type, size_t* packet_size);
FPA_API fpa_status fpa_mqtt_validate_topic(const char* topic);

FPA_API fpa_status fpa_compute_mqtt_len(size_t topic_bytes, int msgid_present, size_t payload_bytes, uint32_t* out);
FPA_API fpa_status fpa_compute_tcp_len(uint32_t mqtt_len, size_t mss, uint32_t* out);
FPA_API uint32_t fpa_framed_mqtt_size(uint32_t mqtt_len);
FPA_API fpa_status fpa_max_padding_budget(size_t topic_bytes, int msgid_present, size_t base_payload_bytes, size_t mss,
                                          int extended_length, size_t* out);
/* src/dst are dotted IPv4 strings; the checksum field inside `segment` is
   treated as zero. */
FPA_API fpa_status fpa_tcp_checksum(const char* src_ip, const char* dst_ip, const uint8_t* segment, size_t len,
                                    uint16_t* out);

/* ---- Configuration (campaign and experiment files) ---- */

typedef struct fpa_config fpa_config;

FPA_API fpa_status fpa_config_new(fpa_config** out);
FPA_API fpa_status fpa_config_load(const char* path, fpa_config** out);
FPA_API fpa_status fpa_config_parse(const char* text, fpa_config** out);
/* "section.key=value"; later assignments override earlier ones. */
FPA_API fpa_status fpa_config_set(fpa_config* config, const char* assignment);
FPA_API int fpa_config_has(const fpa_config* config, const char* key);
FPA_API fpa_status fpa_config_get_int(const fpa_config* config, const char* key, int64_t* out);
FPA_API void fpa_config_free(fpa_config* config);

/* ---- Crafting ---- */

typedef struct fpa_campaign fpa_campaign;

typedef struct fpa_publish_info {
  size_t session;
  size_t frame_index;
  const char* base_topic;
  const char* topic;
  size_t topic_pad;
  size_t payload_pad;
  int qos;
  int retain;
  int has_msgid;
  uint16_t msgid;
  const uint8_t* payload;
  size_t payload_len;
  uint32_t mqtt_len;
  uint32_t tcp_len;
  uint32_t seq;
  uint32_t relative_seq;
  const uint8_t* base_payload;
  size_t base_payload_len;
} fpa_publish_info;

/* Validates the campaign, network and connect sections and generates every
   session from `seed`. */
FPA_API fpa_status fpa_campaign_generate(const fpa_config* config, uint64_t seed, fpa_campaign** out);
FPA_API size_t fpa_campaign_session_count(const fpa_campaign* campaign);
FPA_API size_t fpa_campaign_frame_count(const fpa_campaign* campaign);
FPA_API size_t fpa_campaign_publish_count(const fpa_campaign* campaign);
/* Pointers stay valid until the campaign is freed. */
FPA_API fpa_status fpa_campaign_publish(const fpa_campaign* campaign, size_t index, fpa_publish_info* out);
FPA_API fpa_status fpa_campaign_write_pcap(const fpa_campaign* campaign, const char* path);
FPA_API fpa_status fpa_campaign_pcap_bytes(const fpa_campaign* campaign, fpa_buffer* out);
FPA_API fpa_status fpa_campaign_write_manifest(const fpa_campaign* campaign, const char* path);
FPA_API void fpa_campaign_free(fpa_campaign* campaign);

/* ---- Feature extraction ---- */

typedef struct fpa_extract_summary {
  size_t frames;
  size_t records;
  size_t skipped_frames;
  size_t mqtt_decode_errors;
  size_t columns;
} fpa_extract_summary;

/* profile: full61, tcp, mqtt, tcp_mqtt, tcp_mqtt_port, tcp_core.
   attack_type NULL omits the label columns. */
FPA_API fpa_status fpa_extract_pcap(const char* pcap_path, const char* csv_path, const char* profile,
                                    const char* attack_type, fpa_extract_summary* summary);

/* ---- SOC simulation ---- */

typedef struct fpa_results fpa_results;

typedef struct fpa_cell {
  double fp_pct;
  double eta;
  double mu;
  size_t servers;
  double horizon_h;
  double rho;
  size_t repeats;
  double mean_cum_wait_s;
  double mean_wait_s;
  double mean_tp_count;
  double mean_fp_count;
  double mean_truncated;
} fpa_cell;

/* Reads the experiment section of `config`. */
FPA_API fpa_status fpa_simulate(const fpa_config* config, fpa_results** out);
FPA_API size_t fpa_results_count(const fpa_results* results);
FPA_API fpa_status fpa_results_get(const fpa_results* results, size_t index, fpa_cell* out);
FPA_API fpa_status fpa_results_write_csv(const fpa_results* results, const char* path);
FPA_API fpa_status fpa_results_csv(const fpa_results* results, fpa_buffer* out);
FPA_API void fpa_results_free(fpa_results* results);
/* Mean M/D/1 queueing delay in hours. */
FPA_API fpa_status fpa_md1_wait(double rho, double mu, double* out_hours);
FPA_API fpa_status fpa_parse_horizon(const char* text, double* out_hours);

/* ---- Statistics ---- */

FPA_API fpa_status fpa_cosine(const double* x, const double* y, size_t n, double* out);
FPA_API fpa_status fpa_pearson(const double* x, const double* y, size_t n, double* out);
FPA_API fpa_status fpa_euclidean(const double* x, const double* y, size_t n, double* out);
/* cov is row-major n×n. regularize adds 1e-6·trace/n to the diagonal. */
FPA_API fpa_status fpa_mahalanobis(const double* x, const double* mean, const double* cov, size_t n, int regularize,
                                   double* out);
FPA_API fpa_status fpa_kl_discrete(const double* p, const double* q, size_t n, double* out);
/* Scott rule Gaussian KDE over an automatic grid; samples are 1-D. */
FPA_API fpa_status fpa_kl_kde_1d(const double* p, size_t np, const double* q, size_t nq, double* out);
/* Percentage in [0, 100]. */
FPA_API fpa_status fpa_attack_success_rate(size_t successes, size_t total, double* out_percent);

typedef struct fpa_confidence_entropy {
  double confidence;
  double entropy;
  int high_confidence;
  int low_entropy;
  int high_entropy;
} fpa_confidence_entropy;

FPA_API fpa_status fpa_confidence_entropy_of(const double* probs, size_t k, fpa_confidence_entropy* out);

typedef struct fpa_analyze_options {
  int strict_encoding;
  size_t pca_dims;
  int centroid;
  int paired;
  int pairwise;
  int kl;
  size_t max_pairs;
} fpa_analyze_options;

FPA_API void fpa_analyze_options_default(fpa_analyze_options* options);
/* Writes a metric,mode,value CSV. */
FPA_API fpa_status fpa_analyze_csv(const char* reference_csv, const char* crafted_csv, const char* out_csv,
                                   const fpa_analyze_options* options);

/* ---- Surrogate NIDS ---- */

typedef struct fpa_train_options {
  size_t epochs;
  double learning_rate;
  double l2;
  uint64_t seed;
  int strict_encoding;
} fpa_train_options;

typedef struct fpa_fit_summary {
  size_t samples;
  size_t classes;
  size_t dimension;
  double initial_loss;
  double final_loss;
  double train_accuracy;
  double step_used;
} fpa_fit_summary;

typedef struct fpa_fpa_summary {
  size_t samples;
  size_t misclassified;
  double asr_percent;
  double mean_confidence;
  double mean_entropy;
  size_t high_confidence;
  size_t low_entropy;
  size_t high_entropy;
} fpa_fpa_summary;

FPA_API void fpa_train_options_default(fpa_train_options* options);
FPA_API fpa_status fpa_surrogate_fit(const char* train_csv, const char* label_column, const char* model_path,
                                     const fpa_train_options* options, fpa_fit_summary* summary);
/* Every crafted row counts as benign; predictions other than `benign_label`
   are successes. report_csv may be NULL. */
FPA_API fpa_status fpa_surrogate_eval(const char* model_path, const char* crafted_csv, const char* benign_label,
                                      const char* report_csv, fpa_fpa_summary* summary);

/* ---- Live broker session ---- */

typedef struct fpa_live_options {
  const char* host;
  uint16_t port;
  double timeout_s;
  const char* capture_path;
  int allow_public;
} fpa_live_options;

typedef struct fpa_live_report {
  int connack_rc;
  size_t sent_count;
  size_t qos1_count;
  size_t puback_count;
  size_t unacked_count;
  uint16_t first_unacked_msgid;
  int peer_closed;
} fpa_live_report;

FPA_API void fpa_live_options_default(fpa_live_options* options);
/* Uses the campaign and connect sections of `config` for one session. The
   report is filled even when FPA_PUBACK_TIMEOUT is returned. */
FPA_API fpa_status fpa_live_send(const fpa_config* config, uint64_t seed, const fpa_live_options* options,
                                 fpa_live_report* report);

/* ---- Plotting ---- */

/* kind "line": one series per distinct group value (group may be NULL).
   kind "bar": x names the label column, y the value column. */
FPA_API fpa_status fpa_plot_csv(const char* csv_path, const char* kind, const char* x, const char* y,
                                const char* group, const char* title, const char* svg_path);

#ifdef __cplusplus
}
#endif

#endif
