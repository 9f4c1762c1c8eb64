#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fpaforge/fpaforge.h"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct RuntimeFailure {
  fpa_status status;
  std::string message;
};

void check(fpa_status st, const char* what) {
  if (st != FPA_OK) throw RuntimeFailure{st, std::string(what) + ": " + fpa_last_error()};
}

std::string number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string list_literal(const std::vector<double>& xs) {
  std::string s = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + number(xs[i]);
  return s + "]";
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::optional<std::uint64_t> env_seed() {
  const char* env = std::getenv("FPA_FORGE_SEED");
  if (!env || !*env) return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 0);
  if (*end != '\0') throw CLI::ValidationError("FPA_FORGE_SEED", std::string("not an integer: ") + env);
  return v;
}

class Config {
 public:
  Config() { check(fpa_config_new(&cfg_), "config"); }
  explicit Config(const std::string& path) {
    if (path.empty())
      check(fpa_config_new(&cfg_), "config");
    else
      check(fpa_config_load(path.c_str(), &cfg_), "config");
  }
  Config(const Config&) = delete;
  Config& operator=(const Config&) = delete;
  ~Config() { fpa_config_free(cfg_); }

  void set(const std::string& assignment) { check(fpa_config_set(cfg_, assignment.c_str()), "override"); }
  void set(const std::string& key, const std::string& literal) { set(key + "=" + literal); }
  fpa_config* get() const { return cfg_; }

  // --seed, then the config key, then FPA_FORGE_SEED, then 0.
  std::uint64_t seed(const std::optional<std::uint64_t>& flag, const char* key) const {
    if (flag) return *flag;
    if (fpa_config_has(cfg_, key)) {
      std::int64_t v = 0;
      check(fpa_config_get_int(cfg_, key, &v), "seed");
      return static_cast<std::uint64_t>(v);
    }
    return env_seed().value_or(0);
  }

 private:
  fpa_config* cfg_ = nullptr;
};

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c, bool with_config = true) {
  if (with_config) {
    cmd->add_option("--config", c.config, "Campaign or experiment file")->check(CLI::ExistingFile);
    cmd->add_option("--set", c.sets, "Override a config key: section.key=value (repeatable)");
  }
  cmd->add_option("--seed", c.seed, "Seed for every random draw (default: FPA_FORGE_SEED, else 0)");
}

void apply_sets(Config& cfg, const Common& c) {
  for (const auto& s : c.sets) cfg.set(s);
}

struct CraftArgs {
  Common common;
  std::string out;
  std::string manifest;
  std::optional<long> publish_count;
  std::optional<long> sessions;
  std::optional<std::string> base_topic;
  std::optional<double> qos1;
};

int run_craft(const CraftArgs& a) {
  Config cfg(a.common.config);
  apply_sets(cfg, a.common);
  if (a.publish_count) cfg.set("campaign.publish_count", std::to_string(*a.publish_count));
  if (a.sessions) cfg.set("campaign.session_count", std::to_string(*a.sessions));
  if (a.base_topic) cfg.set("campaign.base_topic", quoted(*a.base_topic));
  if (a.qos1) cfg.set("campaign.qos1_probability", number(*a.qos1));
  const std::uint64_t seed = cfg.seed(a.common.seed, "campaign.seed");
  fpa_campaign* c = nullptr;
  check(fpa_campaign_generate(cfg.get(), seed, &c), "craft");
  struct Free {
    fpa_campaign* c;
    ~Free() { fpa_campaign_free(c); }
  } guard{c};
  check(fpa_campaign_write_pcap(c, a.out.c_str()), "write pcap");
  if (!a.manifest.empty()) check(fpa_campaign_write_manifest(c, a.manifest.c_str()), "write manifest");
  std::printf("crafted %zu sessions, %zu PUBLISH, %zu frames -> %s (seed %" PRIu64 ")\n", fpa_campaign_session_count(c),
              fpa_campaign_publish_count(c), fpa_campaign_frame_count(c), a.out.c_str(), seed);
  return 0;
}

struct LiveArgs {
  Common common;
  std::string host = "127.0.0.1";
  std::uint16_t port = 1883;
  double timeout = 5.0;
  std::string capture;
  bool allow_public = false;
  std::optional<long> publish_count;
  std::optional<std::string> topic;
};

int run_live(const LiveArgs& a) {
  Config cfg(a.common.config);
  apply_sets(cfg, a.common);
  if (a.publish_count) cfg.set("campaign.publish_count", std::to_string(*a.publish_count));
  if (a.topic) cfg.set("campaign.base_topic", quoted(*a.topic));
  const std::uint64_t seed = cfg.seed(a.common.seed, "campaign.seed");
  fpa_live_options o;
  fpa_live_options_default(&o);
  o.host = a.host.c_str();
  o.port = a.port;
  o.timeout_s = a.timeout;
  o.capture_path = a.capture.empty() ? nullptr : a.capture.c_str();
  o.allow_public = a.allow_public ? 1 : 0;
  fpa_live_report r{};
  r.connack_rc = -1;
  const fpa_status st = fpa_live_send(cfg.get(), seed, &o, &r);
  const std::string err = fpa_last_error();
  if (r.connack_rc >= 0 || st == FPA_OK || st == FPA_PUBACK_TIMEOUT)
    std::printf("connack_rc=%d sent=%zu qos1=%zu puback=%zu unacked=%zu%s%s\n", r.connack_rc, r.sent_count,
                r.qos1_count, r.puback_count, r.unacked_count, r.peer_closed ? " peer_closed" : "",
                a.capture.empty() ? "" : (" capture=" + a.capture).c_str());
  if (st != FPA_OK) throw RuntimeFailure{st, "live-send: " + err};
  return 0;
}

struct ExtractArgs {
  std::string in;
  std::string out;
  std::string profile = "full61";
  std::optional<std::string> attack_type;
};

int run_extract(const ExtractArgs& a) {
  fpa_extract_summary s{};
  check(fpa_extract_pcap(a.in.c_str(), a.out.c_str(), a.profile.c_str(),
                         a.attack_type ? a.attack_type->c_str() : nullptr, &s),
        "extract");
  std::printf("extracted %zu rows x %zu columns from %zu frames (skipped %zu, mqtt decode errors %zu) -> %s\n",
              s.records, s.columns, s.frames, s.skipped_frames, s.mqtt_decode_errors, a.out.c_str());
  return 0;
}

struct SimArgs {
  Common common;
  std::vector<double> budget;
  std::vector<double> eta;
  std::vector<double> rho;
  std::vector<double> fp;
  std::optional<long> servers;
  std::optional<std::string> horizon;
  std::optional<long> repeats;
  std::optional<std::string> pairing;
  std::optional<long> threads;
  std::string out;
};

int run_simulate(const SimArgs& a) {
  Config cfg(a.common.config);
  apply_sets(cfg, a.common);
  if (!a.budget.empty()) cfg.set("experiment.mu", list_literal(a.budget));
  if (!a.eta.empty()) cfg.set("experiment.eta", list_literal(a.eta));
  if (!a.rho.empty()) cfg.set("experiment.rho", list_literal(a.rho));
  if (!a.fp.empty()) cfg.set("experiment.fp", list_literal(a.fp));
  if (a.servers) cfg.set("experiment.servers", std::to_string(*a.servers));
  if (a.horizon) cfg.set("experiment.horizon", quoted(*a.horizon));
  if (a.repeats) cfg.set("experiment.repeats", std::to_string(*a.repeats));
  if (a.pairing) cfg.set("experiment.pairing", quoted(*a.pairing));
  if (a.threads) cfg.set("experiment.threads", std::to_string(*a.threads));
  cfg.set("experiment.seed", std::to_string(cfg.seed(a.common.seed, "experiment.seed")));
  fpa_results* r = nullptr;
  check(fpa_simulate(cfg.get(), &r), "simulate");
  struct Free {
    fpa_results* r;
    ~Free() { fpa_results_free(r); }
  } guard{r};
  if (a.out.empty() || a.out == "-") {
    fpa_buffer b{};
    check(fpa_results_csv(r, &b), "simulate");
    std::fwrite(b.data, 1, b.size, stdout);
    fpa_buffer_free(&b);
  } else {
    check(fpa_results_write_csv(r, a.out.c_str()), "write results");
    std::printf("simulated %zu cells -> %s\n", fpa_results_count(r), a.out.c_str());
  }
  return 0;
}

struct AnalyzeArgs {
  std::string reference;
  std::string crafted;
  std::string out;
  bool strict = false;
  std::size_t pca_dims = 2;
  bool no_kl = false;
  bool no_pairwise = false;
  std::size_t max_pairs = 0;
};

int run_analyze(const AnalyzeArgs& a) {
  fpa_analyze_options o;
  fpa_analyze_options_default(&o);
  o.strict_encoding = a.strict ? 1 : 0;
  o.pca_dims = a.pca_dims;
  o.kl = a.no_kl ? 0 : 1;
  o.pairwise = a.no_pairwise ? 0 : 1;
  if (a.max_pairs) o.max_pairs = a.max_pairs;
  check(fpa_analyze_csv(a.reference.c_str(), a.crafted.c_str(), a.out.c_str(), &o), "analyze");
  std::printf("metrics -> %s\n", a.out.c_str());
  return 0;
}

struct FitArgs {
  std::string train;
  std::string label = "Attack_type";
  std::string model;
  std::size_t epochs = 300;
  double lr = 0.5;
  double l2 = 1e-4;
  bool strict = false;
  Common common;
};

int run_fit(const FitArgs& a) {
  fpa_train_options o;
  fpa_train_options_default(&o);
  o.epochs = a.epochs;
  o.learning_rate = a.lr;
  o.l2 = a.l2;
  o.strict_encoding = a.strict ? 1 : 0;
  o.seed = a.common.seed ? *a.common.seed : env_seed().value_or(0);
  fpa_fit_summary s{};
  check(fpa_surrogate_fit(a.train.c_str(), a.label.c_str(), a.model.c_str(), &o, &s), "surrogate fit");
  std::printf("trained on %zu rows, %zu classes, dimension %zu: loss %.6g -> %.6g, accuracy %.4f, step %.4g -> %s\n",
              s.samples, s.classes, s.dimension, s.initial_loss, s.final_loss, s.train_accuracy, s.step_used,
              a.model.c_str());
  return 0;
}

struct EvalArgs {
  std::string model;
  std::string crafted;
  std::string benign = "Normal";
  std::string out;
};

int run_eval(const EvalArgs& a) {
  fpa_fpa_summary s{};
  check(fpa_surrogate_eval(a.model.c_str(), a.crafted.c_str(), a.benign.c_str(), a.out.empty() ? nullptr : a.out.c_str(),
                           &s),
        "surrogate eval");
  std::printf("samples=%zu misclassified=%zu asr=%.2f%% mean_confidence=%.4f mean_entropy=%.4f%s%s\n", s.samples,
              s.misclassified, s.asr_percent, s.mean_confidence, s.mean_entropy, a.out.empty() ? "" : " report=",
              a.out.c_str());
  return 0;
}

struct PlotArgs {
  std::string in;
  std::string kind = "line";
  std::string x;
  std::string y;
  std::string group;
  std::string title;
  std::string out;
};

int run_plot(const PlotArgs& a) {
  check(fpa_plot_csv(a.in.c_str(), a.kind.c_str(), a.x.c_str(), a.y.c_str(), a.group.empty() ? nullptr : a.group.c_str(),
                     a.title.c_str(), a.out.c_str()),
        "plot");
  std::printf("chart -> %s\n", a.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crafts padded MQTT traffic, extracts NIDS features and simulates SOC alert queues"};
  app.set_version_flag("--version", fpa_version());
  app.require_subcommand(1);

  CraftArgs craft;
  auto* c = app.add_subcommand("craft", "Generate a padded MQTT campaign as a pcap");
  add_common(c, craft.common);
  c->add_option("--out", craft.out, "Output pcap")->required();
  c->add_option("--manifest", craft.manifest, "Per-PUBLISH generator CSV");
  c->add_option("--publish-count", craft.publish_count, "PUBLISH packets per session")->check(CLI::NonNegativeNumber);
  c->add_option("--sessions", craft.sessions, "Number of sessions")->check(CLI::PositiveNumber);
  c->add_option("--base-topic", craft.base_topic, "Base topic before padding");
  c->add_option("--qos1", craft.qos1, "Probability that a PUBLISH uses QoS 1")->check(CLI::Range(0.0, 1.0));

  LiveArgs live;
  auto* l = app.add_subcommand("live-send", "Send one crafted session to a broker and verify PUBACKs");
  add_common(l, live.common);
  l->add_option("--host", live.host, "Broker host");
  l->add_option("--port", live.port, "Broker port");
  l->add_option("--timeout", live.timeout, "Seconds to wait for CONNACK and each PUBACK")->check(CLI::PositiveNumber);
  l->add_option("--capture", live.capture, "Write the exchanged packets as a pcap");
  l->add_flag("--allow-public", live.allow_public, "Permit test.mosquitto.org and broker.hivemq.com");
  l->add_option("--publish-count", live.publish_count, "PUBLISH packets to send")->check(CLI::NonNegativeNumber);
  l->add_option("--topic", live.topic, "Base topic before padding");

  ExtractArgs ex;
  auto* e = app.add_subcommand("extract", "Turn a pcap into a feature CSV");
  e->add_option("--in", ex.in, "Input pcap")->required()->check(CLI::ExistingFile);
  e->add_option("--out", ex.out, "Output CSV")->required();
  e->add_option("--profile", ex.profile, "full61, tcp, mqtt, tcp_mqtt, tcp_mqtt_port or tcp_core");
  e->add_option("--attack-type", ex.attack_type, "Add Attack_label/Attack_type columns with this type");

  SimArgs sim;
  auto* s = app.add_subcommand("simulate", "Run the SOC alert queue experiment");
  add_common(s, sim.common);
  s->add_option("--budget,--mu", sim.budget, "Analyst service rate per hour (list)")->delimiter(',');
  s->add_option("--eta", sim.eta, "Total alert rate per hour (list)")->delimiter(',');
  s->add_option("--rho", sim.rho, "Utilisation; eta = rho*mu (list)")->delimiter(',');
  s->add_option("--fp", sim.fp, "Injected false-positive percentage (list)")->delimiter(',');
  s->add_option("--servers", sim.servers, "Number of analysts")->check(CLI::PositiveNumber);
  s->add_option("--horizon", sim.horizon, "Horizon such as 1h, 1d, 2000h");
  s->add_option("--repeats", sim.repeats, "Replicates per cell")->check(CLI::PositiveNumber);
  s->add_option("--pairing", sim.pairing, "crossed or zipped")->check(CLI::IsMember({"crossed", "zipped"}));
  s->add_option("--threads", sim.threads, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  s->add_option("--out", sim.out, "Results CSV (default stdout)");

  AnalyzeArgs an;
  auto* a = app.add_subcommand("analyze", "Compare crafted features with a reference set");
  a->add_option("--reference", an.reference, "Reference feature CSV")->required()->check(CLI::ExistingFile);
  a->add_option("--crafted", an.crafted, "Crafted feature CSV")->required()->check(CLI::ExistingFile);
  a->add_option("--out", an.out, "Metrics CSV")->required();
  a->add_flag("--strict", an.strict, "Encode with the reference vocabulary only");
  a->add_option("--pca-dims", an.pca_dims, "Components for the joint KL (1-3)")->check(CLI::Range(1, 3));
  a->add_flag("--no-kl", an.no_kl, "Skip KL divergence");
  a->add_flag("--no-pairwise", an.no_pairwise, "Skip all-pairs distances");
  a->add_option("--max-pairs", an.max_pairs, "Cap on sampled pairs")->check(CLI::PositiveNumber);

  auto* sg = app.add_subcommand("surrogate", "Train or evaluate the surrogate classifier");
  sg->require_subcommand(1);
  FitArgs fit;
  auto* f = sg->add_subcommand("fit", "Train a softmax classifier on a labelled CSV");
  f->add_option("--train", fit.train, "Labelled CSV")->required()->check(CLI::ExistingFile);
  f->add_option("--label", fit.label, "Label column");
  f->add_option("--model", fit.model, "Output model file")->required();
  f->add_option("--epochs", fit.epochs, "Gradient steps")->check(CLI::PositiveNumber);
  f->add_option("--lr", fit.lr, "Maximum step size")->check(CLI::PositiveNumber);
  f->add_option("--l2", fit.l2, "L2 penalty")->check(CLI::NonNegativeNumber);
  f->add_flag("--strict", fit.strict, "Strict categorical vocabulary");
  add_common(f, fit.common, false);
  EvalArgs ev;
  auto* v = sg->add_subcommand("eval", "Score crafted rows against a trained model");
  v->add_option("--model", ev.model, "Model file")->required()->check(CLI::ExistingFile);
  v->add_option("--crafted", ev.crafted, "Crafted feature CSV")->required()->check(CLI::ExistingFile);
  v->add_option("--benign", ev.benign, "Label counted as correct");
  v->add_option("--out", ev.out, "Report CSV");

  PlotArgs pl;
  auto* p = app.add_subcommand("plot", "Render a CSV column as an SVG chart");
  p->add_option("--in", pl.in, "Input CSV")->required()->check(CLI::ExistingFile);
  p->add_option("--kind", pl.kind, "line or bar")->check(CLI::IsMember({"line", "bar"}));
  p->add_option("--x", pl.x, "X column (bar: label column)")->required();
  p->add_option("--y", pl.y, "Y column (bar: value column)")->required();
  p->add_option("--group", pl.group, "One line per distinct value of this column");
  p->add_option("--title", pl.title, "Chart title");
  p->add_option("--out", pl.out, "Output SVG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (c->parsed()) return run_craft(craft);
    if (l->parsed()) return run_live(live);
    if (e->parsed()) return run_extract(ex);
    if (s->parsed()) return run_simulate(sim);
    if (a->parsed()) return run_analyze(an);
    if (f->parsed()) return run_fit(fit);
    if (v->parsed()) return run_eval(ev);
    if (p->parsed()) return run_plot(pl);
  } catch (const CLI::ValidationError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitUsage;
  } catch (const RuntimeFailure& err) {
    std::fprintf(stderr, "error [%s]: %s\n", fpa_status_name(err.status), err.message.c_str());
    return kExitRuntime;
  }
  return kExitUsage;
}
