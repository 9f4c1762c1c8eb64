#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fpaforge/kv_config.hpp"
#include "fpaforge/rng.hpp"

namespace fpaforge::soc {

enum class AlertKind { TP, FP };

struct Arrival {
  double time_h = 0.0;
  AlertKind kind = AlertKind::TP;
};

struct AlertTrace {
  std::vector<Arrival> arrivals;  // sorted by time
  double horizon_h = 0.0;
};

// λ = η·(1 − fp/100).
double tp_rate(double eta, double fp_pct);
// Poisson process of rate tp_rate(eta, fp_pct) on [0, horizon].
std::vector<double> gen_tp_arrivals(double eta, double fp_pct, double horizon_h, Rng& rng);
// k·T/(count+1) for k = 1..count.
std::vector<double> gen_fp_arrivals(std::size_t count, double T);
// Injected FP count: round(η·fp/100·horizon).
std::size_t fp_count(double eta, double fp_pct, double horizon_h);
// TP arrivals plus FP alerts spread over [0, T], T = last TP arrival.
AlertTrace build_trace(double eta, double fp_pct, double horizon_h, Rng& rng);

struct AlertOutcome {
  AlertKind kind = AlertKind::TP;
  double arrival_h = 0.0;
  double start_h = 0.0;  // horizon when unserved
  double wait_h = 0.0;
  bool served = false;
};

enum class EventKind { Finish = 0, Arrival = 1, Start = 2 };

struct QueueEvent {
  double time_h = 0.0;
  EventKind kind = EventKind::Arrival;
  std::size_t alert = 0;
};

struct QueueResult {
  std::vector<AlertOutcome> per_alert;
  double cumulative_tp_wait_h = 0.0;
  double mean_tp_wait_h = 0.0;
  double cumulative_fp_wait_h = 0.0;
  std::size_t tp_count = 0;
  std::size_t served_count = 0;
  std::size_t horizon_truncated_count = 0;
};

// FCFS over c servers with service time 1/mu. Alerts whose service would
// start at or after the horizon are unserved and accrue wait up to it.
QueueResult simulate_queue(const AlertTrace& trace, double mu, std::size_t c,
                           std::vector<QueueEvent>* event_log = nullptr);

// M/D/1 mean queueing delay ρ/(2μ(1−ρ)) in hours.
double analytic_md1_wq(double rho, double mu);

// "1h", "1d", "30m", "90s", or a bare number of hours.
double parse_horizon(std::string_view text);

enum class Pairing { Crossed, Zipped };

struct ExperimentConfig {
  std::vector<double> fp_pcts{0.0};
  std::vector<double> etas;  // used when rhos is empty
  std::vector<double> rhos;  // eta = rho·mu per mu
  std::vector<double> mus{120.0};
  std::size_t servers = 1;
  double horizon_h = 1.0;
  std::size_t repeats = 10;
  std::uint64_t seed = 0;
  Pairing pairing = Pairing::Crossed;
  std::size_t threads = 0;  // 0: hardware concurrency
};

struct CellResult {
  double fp_pct = 0.0;
  double eta = 0.0;
  double mu = 0.0;
  std::size_t servers = 1;
  double horizon_h = 0.0;
  double rho = 0.0;
  std::size_t repeats = 0;
  double mean_cum_wait_s = 0.0;
  double mean_wait_s = 0.0;
  double mean_tp_count = 0.0;
  double mean_fp_count = 0.0;
  double mean_truncated = 0.0;
};

void validate_experiment(const ExperimentConfig& cfg);
// Replicate r of every cell uses derive_seed(seed, r).
std::vector<CellResult> run_experiment(const ExperimentConfig& cfg);
std::string results_csv(const std::vector<CellResult>& cells);

std::set<std::string> experiment_config_keys();
ExperimentConfig experiment_from_config(const KvConfig& cfg);

}  // namespace fpaforge::soc
