#include <gtest/gtest.h>

#include <cmath>

#include "fpaforge/csv.hpp"
#include "fpaforge/error.hpp"
#include "fpaforge/soc_sim.hpp"

using namespace fpaforge;
using namespace fpaforge::soc;

namespace {

AlertTrace trace_of(std::vector<double> times, double horizon) {
  AlertTrace t;
  t.horizon_h = horizon;
  for (double x : times) t.arrivals.push_back({x, AlertKind::TP});
  return t;
}

}  // namespace

TEST(Arrivals, TpRate) {
  EXPECT_NEAR(tp_rate(120, 16.024), 100.7712, 1e-9);
  EXPECT_EQ(tp_rate(117, 0), 117);
  EXPECT_THROW(tp_rate(120, 100), Error);
  EXPECT_THROW(tp_rate(0, 1), Error);
}

TEST(Arrivals, TpPoissonIsSeededAndSorted) {
  Rng a(3), b(3);
  const auto x = gen_tp_arrivals(120, 8.012, 2.0, a);
  EXPECT_EQ(x, gen_tp_arrivals(120, 8.012, 2.0, b));
  EXPECT_TRUE(std::is_sorted(x.begin(), x.end()));
  EXPECT_LE(x.back(), 2.0);
  EXPECT_GT(x.front(), 0.0);
}

TEST(Arrivals, TpCountMatchesRate) {
  Rng rng(5);
  const double lambda = tp_rate(120, 16.024);
  const auto x = gen_tp_arrivals(120, 16.024, 500.0, rng);
  const double expected = lambda * 500.0;
  EXPECT_NEAR(static_cast<double>(x.size()), expected, 4 * std::sqrt(expected));
}

TEST(Arrivals, FpEvenSpacing) {
  EXPECT_TRUE(gen_fp_arrivals(0, 1.0).empty());
  EXPECT_EQ(gen_fp_arrivals(1, 1.0), (std::vector<double>{0.5}));
  EXPECT_EQ(gen_fp_arrivals(3, 1.0), (std::vector<double>{0.25, 0.5, 0.75}));
  EXPECT_THROW(gen_fp_arrivals(2, 0.0), Error);
}

TEST(Arrivals, TraceMergesKindsInOrder) {
  Rng rng(9);
  const auto t = build_trace(120, 16.024, 1.0, rng);
  std::size_t fp = 0;
  double last_tp = 0;
  for (const auto& a : t.arrivals) {
    if (a.kind == AlertKind::FP)
      ++fp;
    else
      last_tp = a.time_h;
  }
  EXPECT_EQ(fp, fp_count(120, 16.024, 1.0));
  EXPECT_EQ(fp, 19u);
  EXPECT_TRUE(std::is_sorted(t.arrivals.begin(), t.arrivals.end(),
                             [](const Arrival& x, const Arrival& y) { return x.time_h < y.time_h; }));
  for (const auto& a : t.arrivals)
    if (a.kind == AlertKind::FP) EXPECT_LT(a.time_h, last_tp);
}

TEST(Queue, Examples) {
  auto r = simulate_queue(trace_of({0.1}, 1.0), 120, 1);
  EXPECT_EQ(r.per_alert[0].wait_h, 0.0);
  r = simulate_queue(trace_of({0.1, 0.1}, 1.0), 120, 1);
  EXPECT_EQ(r.per_alert[0].wait_h, 0.0);
  EXPECT_NEAR(r.per_alert[1].wait_h * 3600.0, 30.0, 1e-9);
  r = simulate_queue(trace_of({0.1, 0.1}, 1.0), 120, 2);
  EXPECT_EQ(r.per_alert[0].wait_h, 0.0);
  EXPECT_EQ(r.per_alert[1].wait_h, 0.0);
}

TEST(Queue, HorizonTruncation) {
  const auto r = simulate_queue(trace_of({0.99, 0.99, 0.99, 0.99}, 1.0), 120, 1);
  EXPECT_EQ(r.served_count, 2u);
  EXPECT_EQ(r.horizon_truncated_count, 2u);
  EXPECT_FALSE(r.per_alert[3].served);
  EXPECT_NEAR(r.per_alert[3].wait_h, 0.01, 1e-12);
}

TEST(Queue, Errors) {
  EXPECT_THROW(simulate_queue(trace_of({0.1}, 1.0), 0, 1), Error);
  EXPECT_THROW(simulate_queue(trace_of({0.1}, 1.0), 120, 0), Error);
  EXPECT_THROW(simulate_queue(trace_of({0.5, 0.1}, 1.0), 120, 1), Error);
}

TEST(Analytic, Md1) {
  EXPECT_NEAR(analytic_md1_wq(0.975, 120) * 3600.0, 585.0, 1e-9);
  EXPECT_NEAR(analytic_md1_wq(1e-12, 120), 0.0, 1e-12);
  try {
    analytic_md1_wq(1.0, 120);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Unstable);
  }
}

TEST(Horizon, Parse) {
  EXPECT_EQ(parse_horizon("1h"), 1.0);
  EXPECT_EQ(parse_horizon("2d"), 48.0);
  EXPECT_DOUBLE_EQ(parse_horizon("30m"), 0.5);
  EXPECT_DOUBLE_EQ(parse_horizon("90s"), 0.025);
  EXPECT_EQ(parse_horizon("3"), 3.0);
  EXPECT_THROW(parse_horizon(""), Error);
  EXPECT_THROW(parse_horizon("-1h"), Error);
  EXPECT_THROW(parse_horizon("xh"), Error);
}

TEST(Experiment, BudgetSweepGrid) {
  ExperimentConfig cfg;
  cfg.mus = {60, 80, 120, 240};
  cfg.rhos = {0.975};
  cfg.fp_pcts = {0, 8.012, 16.024};
  cfg.repeats = 2;
  const auto cells = run_experiment(cfg);
  ASSERT_EQ(cells.size(), 12u);
  for (const auto& c : cells) {
    EXPECT_NEAR(c.eta, 0.975 * c.mu, 1e-9);
    EXPECT_NEAR(c.rho, 0.975, 1e-9);
    EXPECT_EQ(c.repeats, 2u);
  }
  const auto table = parse_table(results_csv(cells));
  EXPECT_EQ(table.rows.size(), 12u);
  EXPECT_EQ(table.columns[5], "mean_cum_wait_s");
  EXPECT_EQ(table.columns[6], "mean_wait_s");
}

TEST(Experiment, ReproducibleAndThreadIndependent) {
  ExperimentConfig cfg;
  cfg.etas = {117};
  cfg.fp_pcts = {0, 8.012};
  cfg.repeats = 4;
  cfg.seed = 77;
  cfg.threads = 1;
  const auto a = results_csv(run_experiment(cfg));
  cfg.threads = 4;
  EXPECT_EQ(a, results_csv(run_experiment(cfg)));
  cfg.repeats = 1;
  EXPECT_EQ(results_csv(run_experiment(cfg)), results_csv(run_experiment(cfg)));
}

TEST(Experiment, ZippedPairing) {
  ExperimentConfig cfg;
  cfg.etas = {115, 116, 117};
  cfg.fp_pcts = {4.006, 8.012, 16.024};
  cfg.pairing = Pairing::Zipped;
  cfg.repeats = 1;
  const auto cells = run_experiment(cfg);
  ASSERT_EQ(cells.size(), 3u);
  EXPECT_EQ(cells[1].eta, 116);
  EXPECT_EQ(cells[1].fp_pct, 8.012);
  cfg.fp_pcts = {1, 2};
  EXPECT_THROW(run_experiment(cfg), Error);
}

TEST(Experiment, ConfigValidation) {
  ExperimentConfig cfg;
  EXPECT_THROW(validate_experiment(cfg), Error);
  cfg.etas = {117};
  EXPECT_NO_THROW(validate_experiment(cfg));
  cfg.rhos = {0.9};
  EXPECT_THROW(validate_experiment(cfg), Error);
  const auto kv = KvConfig::parse("[experiment]\neta = [117]\nfp = [0, 8.012]\nhorizon = 2h\nrepeats = 3\nseed = 4");
  const auto parsed = experiment_from_config(kv);
  EXPECT_EQ(parsed.horizon_h, 2.0);
  EXPECT_EQ(parsed.repeats, 3u);
  EXPECT_EQ(parsed.seed, 4u);
  EXPECT_THROW(experiment_from_config(KvConfig::parse("[experiment]\nbogus = 1")), Error);
}

TEST(SocProperty, ConservationAndCumulativeSum) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    const auto trace = build_trace(119, 16.024, 1.0, rng);
    for (std::size_t c : {1u, 2u}) {
      const auto r = simulate_queue(trace, 120, c);
      ASSERT_EQ(r.served_count + r.horizon_truncated_count, trace.arrivals.size());
      double tp_sum = 0;
      for (const auto& o : r.per_alert) {
        ASSERT_GE(o.wait_h, 0.0);
        if (o.kind == AlertKind::TP) tp_sum += o.wait_h;
      }
      ASSERT_NEAR(r.cumulative_tp_wait_h, tp_sum, 1e-9);
    }
  }
}

TEST(SocProperty, WorkConservingFromEventLog) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto trace = build_trace(130, 8.012, 1.0, rng);
    for (std::size_t c : {1u, 3u}) {
      std::vector<QueueEvent> log;
      simulate_queue(trace, 120, c, &log);
      std::size_t busy = 0, waiting = 0;
      for (std::size_t i = 0; i < log.size();) {
        const double t = log[i].time_h;
        for (; i < log.size() && log[i].time_h == t; ++i) {
          switch (log[i].kind) {
            case EventKind::Finish: --busy; break;
            case EventKind::Arrival: ++waiting; break;
            case EventKind::Start:
              --waiting;
              ++busy;
              break;
          }
        }
        ASSERT_LE(busy, c);
        if (t < trace.horizon_h && waiting > 0) ASSERT_EQ(busy, c) << "idle server with queue at t=" << t;
      }
    }
  }
}

TEST(SocProperty, CumulativeTpWaitNonDecreasingInFp) {
  ExperimentConfig cfg;
  cfg.etas = {117};
  cfg.mus = {120};
  cfg.fp_pcts = {0, 4.006, 8.012, 12.018, 16.024};
  cfg.repeats = 10;
  cfg.seed = 2024;
  const auto cells = run_experiment(cfg);
  for (std::size_t i = 1; i < cells.size(); ++i)
    EXPECT_GE(cells[i].mean_cum_wait_s, cells[i - 1].mean_cum_wait_s)
        << "fp " << cells[i - 1].fp_pct << " -> " << cells[i].fp_pct;
}

TEST(SocProperty, LongHorizonMeanWaitMatchesMd1) {
  ExperimentConfig cfg;
  cfg.etas = {117};
  cfg.mus = {120};
  cfg.fp_pcts = {0};
  cfg.horizon_h = 1000;
  cfg.repeats = 10;
  cfg.seed = 1;
  const auto cells = run_experiment(cfg);
  const double oracle = analytic_md1_wq(117.0 / 120.0, 120) * 3600.0;
  EXPECT_NEAR(cells[0].mean_wait_s, oracle, 0.05 * oracle);
}
