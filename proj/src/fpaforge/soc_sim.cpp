#include "fpaforge/soc_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <queue>
#include <thread>

#include <fmt/format.h>

#include "fpaforge/csv.hpp"
#include "fpaforge/error.hpp"

namespace fpaforge::soc {

double tp_rate(double eta, double fp_pct) {
  if (!(eta > 0.0) || !std::isfinite(eta)) fail(ErrorCode::ConfigError, fmt::format("eta {} must be positive", eta));
  if (!(fp_pct >= 0.0 && fp_pct < 100.0))
    fail(ErrorCode::ConfigError, fmt::format("fp {}% must lie in [0, 100)", fp_pct));
  return eta * (1.0 - fp_pct / 100.0);
}

std::vector<double> gen_tp_arrivals(double eta, double fp_pct, double horizon_h, Rng& rng) {
  const double lambda = tp_rate(eta, fp_pct);
  if (!(horizon_h > 0.0)) fail(ErrorCode::ConfigError, "horizon must be positive");
  std::vector<double> times;
  double t = rng.exponential(lambda);
  while (t <= horizon_h) {
    times.push_back(t);
    t += rng.exponential(lambda);
  }
  return times;
}

std::vector<double> gen_fp_arrivals(std::size_t count, double T) {
  if (!(T > 0.0)) fail(ErrorCode::ConfigError, "FP interval must be positive");
  std::vector<double> times;
  times.reserve(count);
  for (std::size_t k = 1; k <= count; ++k)
    times.push_back(static_cast<double>(k) * T / static_cast<double>(count + 1));
  return times;
}

std::size_t fp_count(double eta, double fp_pct, double horizon_h) {
  tp_rate(eta, fp_pct);
  return static_cast<std::size_t>(std::llround(eta * fp_pct / 100.0 * horizon_h));
}

AlertTrace build_trace(double eta, double fp_pct, double horizon_h, Rng& rng) {
  AlertTrace trace;
  trace.horizon_h = horizon_h;
  auto tp = gen_tp_arrivals(eta, fp_pct, horizon_h, rng);
  const double T = tp.empty() ? horizon_h : tp.back();
  auto fp = T > 0.0 ? gen_fp_arrivals(fp_count(eta, fp_pct, horizon_h), T) : std::vector<double>{};
  trace.arrivals.reserve(tp.size() + fp.size());
  std::size_t i = 0, j = 0;
  while (i < tp.size() || j < fp.size()) {
    if (j >= fp.size() || (i < tp.size() && tp[i] <= fp[j])) {
      trace.arrivals.push_back({tp[i++], AlertKind::TP});
    } else {
      trace.arrivals.push_back({fp[j++], AlertKind::FP});
    }
  }
  return trace;
}

QueueResult simulate_queue(const AlertTrace& trace, double mu, std::size_t c, std::vector<QueueEvent>* event_log) {
  if (!(mu > 0.0)) fail(ErrorCode::ConfigError, "service rate must be positive");
  if (c == 0) fail(ErrorCode::ConfigError, "at least one server is required");
  const double service = 1.0 / mu;
  std::priority_queue<double, std::vector<double>, std::greater<>> free_at;
  for (std::size_t s = 0; s < c; ++s) free_at.push(0.0);

  QueueResult r;
  r.per_alert.reserve(trace.arrivals.size());
  double prev = -INFINITY;
  for (std::size_t i = 0; i < trace.arrivals.size(); ++i) {
    const Arrival& a = trace.arrivals[i];
    if (a.time_h < prev) fail(ErrorCode::InvalidArgument, "arrivals must be sorted by time");
    prev = a.time_h;
    AlertOutcome o;
    o.kind = a.kind;
    o.arrival_h = a.time_h;
    const double start = std::max(a.time_h, free_at.top());
    if (start < trace.horizon_h) {
      free_at.pop();
      free_at.push(start + service);
      o.start_h = start;
      o.served = true;
      ++r.served_count;
    } else {
      o.start_h = trace.horizon_h;
      ++r.horizon_truncated_count;
    }
    o.wait_h = std::max(0.0, o.start_h - o.arrival_h);
    if (a.kind == AlertKind::TP) {
      r.cumulative_tp_wait_h += o.wait_h;
      ++r.tp_count;
    } else {
      r.cumulative_fp_wait_h += o.wait_h;
    }
    if (event_log) {
      event_log->push_back({o.arrival_h, EventKind::Arrival, i});
      if (o.served) {
        event_log->push_back({o.start_h, EventKind::Start, i});
        event_log->push_back({o.start_h + service, EventKind::Finish, i});
      }
    }
    r.per_alert.push_back(o);
  }
  r.mean_tp_wait_h = r.tp_count ? r.cumulative_tp_wait_h / static_cast<double>(r.tp_count) : 0.0;
  if (event_log)
    std::stable_sort(event_log->begin(), event_log->end(), [](const QueueEvent& x, const QueueEvent& y) {
      if (x.time_h != y.time_h) return x.time_h < y.time_h;
      return static_cast<int>(x.kind) < static_cast<int>(y.kind);
    });
  return r;
}

double analytic_md1_wq(double rho, double mu) {
  if (!(mu > 0.0)) fail(ErrorCode::InvalidArgument, "service rate must be positive");
  if (rho < 0.0) fail(ErrorCode::InvalidArgument, "traffic intensity must be non-negative");
  if (rho >= 1.0) fail(ErrorCode::Unstable, fmt::format("rho {} >= 1 has no steady state", rho));
  return rho / (2.0 * mu * (1.0 - rho));
}

double parse_horizon(std::string_view text) {
  if (text.empty()) fail(ErrorCode::ConfigError, "empty horizon");
  double scale = 1.0;
  std::string_view num = text;
  switch (text.back()) {
    case 'h': scale = 1.0; num.remove_suffix(1); break;
    case 'd': scale = 24.0; num.remove_suffix(1); break;
    case 'm': scale = 1.0 / 60.0; num.remove_suffix(1); break;
    case 's': scale = 1.0 / 3600.0; num.remove_suffix(1); break;
    default: break;
  }
  const double v = parse_double(num, "horizon") * scale;
  if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorCode::ConfigError, fmt::format("horizon '{}' must be positive", text));
  return v;
}

namespace {

struct Load {
  double eta;
  double mu;
};

struct CellSpec {
  double fp;
  Load load;
};

std::vector<CellSpec> cells_for(const ExperimentConfig& cfg) {
  std::vector<Load> loads;
  for (double mu : cfg.mus) {
    if (cfg.rhos.empty()) {
      for (double eta : cfg.etas) loads.push_back({eta, mu});
    } else {
      for (double rho : cfg.rhos) loads.push_back({rho * mu, mu});
    }
  }
  std::vector<CellSpec> cells;
  if (cfg.pairing == Pairing::Zipped) {
    for (std::size_t i = 0; i < loads.size(); ++i) cells.push_back({cfg.fp_pcts[i], loads[i]});
  } else {
    for (const auto& l : loads)
      for (double fp : cfg.fp_pcts) cells.push_back({fp, l});
  }
  return cells;
}

}  // namespace

void validate_experiment(const ExperimentConfig& cfg) {
  auto bad = [](std::string m) { fail(ErrorCode::ConfigError, std::move(m)); };
  if (cfg.fp_pcts.empty()) bad("fp list is empty");
  if (cfg.mus.empty()) bad("service rate list is empty");
  if (cfg.etas.empty() == cfg.rhos.empty()) bad("give exactly one of an eta list or a rho list");
  if (cfg.servers == 0) bad("at least one server is required");
  if (cfg.repeats == 0) bad("repeats must be at least 1");
  if (!(cfg.horizon_h > 0.0)) bad("horizon must be positive");
  for (double mu : cfg.mus)
    if (!(mu > 0.0)) bad(fmt::format("service rate {} must be positive", mu));
  for (double eta : cfg.etas)
    if (!(eta > 0.0)) bad(fmt::format("eta {} must be positive", eta));
  for (double rho : cfg.rhos)
    if (!(rho > 0.0)) bad(fmt::format("rho {} must be positive", rho));
  for (double fp : cfg.fp_pcts)
    if (!(fp >= 0.0 && fp < 100.0)) bad(fmt::format("fp {}% must lie in [0, 100)", fp));
  if (cfg.pairing == Pairing::Zipped) {
    const std::size_t loads = cfg.mus.size() * (cfg.rhos.empty() ? cfg.etas.size() : cfg.rhos.size());
    if (loads != cfg.fp_pcts.size())
      bad(fmt::format("zipped pairing needs as many fp values ({}) as load points ({})", cfg.fp_pcts.size(), loads));
  }
}

std::vector<CellResult> run_experiment(const ExperimentConfig& cfg) {
  validate_experiment(cfg);
  const auto specs = cells_for(cfg);
  const std::size_t jobs = specs.size() * cfg.repeats;
  std::vector<QueueResult> runs(jobs);
  std::vector<std::size_t> fp_counts(jobs);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job = next++; job < jobs; job = next++) {
      const auto& cell = specs[job / cfg.repeats];
      const std::size_t rep = job % cfg.repeats;
      Rng rng(derive_seed(cfg.seed, rep));
      AlertTrace trace = build_trace(cell.load.eta, cell.fp, cfg.horizon_h, rng);
      fp_counts[job] = static_cast<std::size_t>(std::count_if(
          trace.arrivals.begin(), trace.arrivals.end(), [](const Arrival& a) { return a.kind == AlertKind::FP; }));
      runs[job] = simulate_queue(trace, cell.load.mu, cfg.servers);
      runs[job].per_alert.clear();
      runs[job].per_alert.shrink_to_fit();
    }
  };
  std::size_t n_threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, std::max<std::size_t>(jobs, 1));
  std::vector<std::thread> pool;
  std::exception_ptr error;
  if (n_threads <= 1) {
    worker();
  } else {
    std::mutex error_mutex;
    for (std::size_t t = 0; t < n_threads; ++t)
      pool.emplace_back([&] {
        try {
          worker();
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = jobs;
        }
      });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
  }

  std::vector<CellResult> out;
  for (std::size_t ci = 0; ci < specs.size(); ++ci) {
    CellResult c;
    c.fp_pct = specs[ci].fp;
    c.eta = specs[ci].load.eta;
    c.mu = specs[ci].load.mu;
    c.servers = cfg.servers;
    c.horizon_h = cfg.horizon_h;
    c.rho = c.eta / (c.mu * static_cast<double>(cfg.servers));
    c.repeats = cfg.repeats;
    for (std::size_t rep = 0; rep < cfg.repeats; ++rep) {
      const auto& r = runs[ci * cfg.repeats + rep];
      c.mean_cum_wait_s += r.cumulative_tp_wait_h * 3600.0;
      c.mean_wait_s += r.mean_tp_wait_h * 3600.0;
      c.mean_tp_count += static_cast<double>(r.tp_count);
      c.mean_fp_count += static_cast<double>(fp_counts[ci * cfg.repeats + rep]);
      c.mean_truncated += static_cast<double>(r.horizon_truncated_count);
    }
    const double n = static_cast<double>(cfg.repeats);
    c.mean_cum_wait_s /= n;
    c.mean_wait_s /= n;
    c.mean_tp_count /= n;
    c.mean_fp_count /= n;
    c.mean_truncated /= n;
    out.push_back(c);
  }
  return out;
}

std::string results_csv(const std::vector<CellResult>& cells) {
  std::string out;
  append_csv_row(out, std::vector<std::string>{"fp", "eta", "mu", "c", "horizon_h", "mean_cum_wait_s", "mean_wait_s",
                                               "rho", "repeats", "mean_tp_count", "mean_fp_count", "mean_truncated"});
  for (const auto& c : cells)
    append_csv_row(out, std::vector<std::string>{
                            fmt::format("{}", c.fp_pct), fmt::format("{}", c.eta), fmt::format("{}", c.mu),
                            fmt::format("{}", c.servers), fmt::format("{}", c.horizon_h),
                            fmt::format("{:.6f}", c.mean_cum_wait_s), fmt::format("{:.6f}", c.mean_wait_s),
                            fmt::format("{:.6f}", c.rho), fmt::format("{}", c.repeats),
                            fmt::format("{:.3f}", c.mean_tp_count), fmt::format("{:.3f}", c.mean_fp_count),
                            fmt::format("{:.3f}", c.mean_truncated)});
  return out;
}

std::set<std::string> experiment_config_keys() {
  return {"experiment.fp",      "experiment.eta",     "experiment.rho",    "experiment.mu",
          "experiment.servers", "experiment.horizon", "experiment.repeats", "experiment.seed",
          "experiment.pairing", "experiment.threads"};
}

ExperimentConfig experiment_from_config(const KvConfig& kv) {
  kv.require_known(experiment_config_keys());
  ExperimentConfig cfg;
  cfg.fp_pcts = kv.get_double_list("experiment.fp", cfg.fp_pcts);
  cfg.etas = kv.get_double_list("experiment.eta");
  cfg.rhos = kv.get_double_list("experiment.rho");
  cfg.mus = kv.get_double_list("experiment.mu", cfg.mus);
  auto non_negative = [](std::int64_t v, std::string_view what) {
    if (v < 0) fail(ErrorCode::ConfigError, fmt::format("{} must be non-negative", what));
    return static_cast<std::size_t>(v);
  };
  cfg.servers = non_negative(kv.get_int("experiment.servers", 1), "servers");
  if (auto h = kv.find_string("experiment.horizon")) cfg.horizon_h = parse_horizon(*h);
  cfg.repeats = non_negative(kv.get_int("experiment.repeats", 10), "repeats");
  cfg.seed = static_cast<std::uint64_t>(kv.get_int("experiment.seed", 0));
  cfg.threads = non_negative(kv.get_int("experiment.threads", 0), "threads");
  const std::string pairing = kv.get_string("experiment.pairing", "crossed");
  if (pairing == "crossed") {
    cfg.pairing = Pairing::Crossed;
  } else if (pairing == "zipped") {
    cfg.pairing = Pairing::Zipped;
  } else {
    fail(ErrorCode::ConfigError, fmt::format("pairing '{}' is not crossed or zipped", pairing));
  }
  return cfg;
}

}  // namespace fpaforge::soc
