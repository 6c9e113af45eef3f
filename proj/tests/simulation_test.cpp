#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "hol/analytics.hpp"
#include "hol/simulation.hpp"

namespace {

using hol::ArrivalSpec;
using hol::CommProfile;
using hol::IntersectionSpec;
using hol::ModelKind;
using hol::PhaseConfig;
using hol::SimConfig;

SimConfig model1(double each, double p_t, std::uint64_t horizon, std::uint64_t seed = 1) {
  SimConfig cfg;
  cfg.spec = {ModelKind::single_lane, ArrivalSpec{{each, each, each}}, PhaseConfig::uniform(3), CommProfile{p_t}};
  cfg.horizon = horizon;
  cfg.seed = seed;
  return cfg;
}

SimConfig model2(double l1, double l2, double p_t, std::uint64_t horizon, std::uint64_t seed = 1) {
  SimConfig cfg;
  cfg.spec = {ModelKind::dual_lane, ArrivalSpec{{l1, l2}}, PhaseConfig{{0.5, 0.5}}, CommProfile{p_t}};
  cfg.horizon = horizon;
  cfg.seed = seed;
  return cfg;
}

/// Checks per-vehicle bookkeeping and FIFO order on the fly.
struct Tracer : hol::NullObserver {
  std::map<int, std::uint64_t> last_departed;  // per class
  std::int64_t next_entry = 0;
  bool fifo_ok = true;
  bool entry_order_ok = true;
  bool slots_ok = true;
  std::uint64_t departures = 0;

  void on_hol_entry(const hol::Vehicle& v, std::int64_t slot) {
    if (static_cast<std::int64_t>(v.id) < next_entry) entry_order_ok = false;
    next_entry = static_cast<std::int64_t>(v.id) + 1;
    if (slot < v.eligible_slot()) slots_ok = false;
  }
  void on_departure(const hol::Vehicle& v) {
    ++departures;
    auto it = last_departed.find(v.cls);
    if (it != last_departed.end() && v.id < it->second) fifo_ok = false;
    last_departed[v.cls] = v.id;
    if (!(v.arrival_slot <= v.service_start_slot && v.service_start_slot <= v.departure_slot)) slots_ok = false;
    if (v.service_start_slot < v.eligible_slot()) slots_ok = false;
  }
};

TEST(SimConfig, Validation) {
  auto cfg = model1(0.1, 0.5, 9999);
  EXPECT_THROW(hol::simulate_model1(cfg), hol::Error);
  cfg = model1(0.1, 0.5, 20000);
  cfg.warmup = 20000;
  EXPECT_THROW(hol::simulate_model1(cfg), hol::Error);
  EXPECT_THROW(hol::simulate_model2(model1(0.1, 0.5, 20000)), hol::Error);
  EXPECT_THROW(hol::simulate_model1(model2(0.1, 0.1, 0.5, 20000)), hol::Error);
}

TEST(SimConfig, DefaultWarmup) {
  EXPECT_EQ(model1(0.1, 0, 10000).effective_warmup(), 5000u);
  EXPECT_EQ(model1(0.1, 0, 100000).effective_warmup(), 10000u);
  EXPECT_EQ(model1(0.1, 0, 10000000).effective_warmup(), 100000u);
}

TEST(Simulation, Reproducible) {
  for (const SimConfig& cfg : {model1(0.1, 0.3, 200000, 42), model2(0.15, 0.15, 0.3, 200000, 42)}) {
    const auto a = hol::simulate(cfg);
    const auto b = hol::simulate(cfg);
    EXPECT_EQ(a, b);
    SimConfig other = cfg;
    other.seed = 43;
    EXPECT_NE(hol::simulate(other).mean_wait, a.mean_wait);
  }
}

TEST(Simulation, EmptySystem) {
  for (const SimConfig& cfg : {model1(0.0, 0.5, 50000), model2(0.0, 0.0, 0.5, 50000)}) {
    const auto s = hol::simulate(cfg);
    EXPECT_EQ(s.departures, 0u);
    EXPECT_EQ(s.total_arrivals, 0u);
    EXPECT_EQ(s.mean_queue_len, 0.0);
    EXPECT_EQ(s.busy_slots, 0u);
  }
}

TEST(Simulation, BookkeepingInvariants) {
  for (const SimConfig& cfg : {model1(0.08, 0.4, 300000, 3), model2(0.2, 0.1, 0.4, 300000, 3)}) {
    Tracer tracer;
    const auto s = cfg.spec.model == ModelKind::single_lane ? hol::simulate_model1(cfg, tracer)
                                                            : hol::simulate_model2(cfg, tracer);
    EXPECT_TRUE(tracer.fifo_ok);
    EXPECT_TRUE(tracer.entry_order_ok);
    EXPECT_TRUE(tracer.slots_ok);
    std::uint64_t mass = 0;
    for (auto c : s.service_time_histogram) mass += c;
    EXPECT_EQ(mass, s.departures);
    EXPECT_LE(s.departures, s.total_arrivals);
    EXPECT_LE(s.departures, tracer.departures);
    EXPECT_GE(s.mean_queue_len, 0.0);
    EXPECT_GT(s.wait_stderr, 0.0);
    EXPECT_FALSE(s.saturated);
  }
}

TEST(Model1Sim, WorkConservingWithCommunication) {
  struct Check : hol::NullObserver {
    bool ok = true;
    void on_slot(std::int64_t, std::size_t in_system, std::size_t departed, bool hol_comm) {
      if (in_system > 0 && hol_comm && departed != 1) ok = false;
      if (departed > 1) ok = false;
    }
  } check;
  hol::simulate_model1(model1(0.09, 0.6, 200000, 5), check);
  EXPECT_TRUE(check.ok);
}

TEST(Model1Sim, FullCommunicationMatchesDeterministicService) {
  const auto s = hol::simulate_model1(model1(0.1, 1.0, 1000000, 2));
  EXPECT_NEAR(s.mean_wait, 0.3 / 1.4, 0.05 * 0.3 / 1.4);
  ASSERT_GE(s.service_time_histogram.size(), 2u);
  EXPECT_EQ(s.service_time_histogram[1], s.departures);
}

TEST(Model1Sim, NoCommunicationMatchesGeometricService) {
  const auto s = hol::simulate_model1(model1(0.1, 0.0, 10000000, 4));
  EXPECT_NEAR(s.mean_wait, 22.5, 0.10 * 22.5);
  const auto pmf = s.service_pmf();
  EXPECT_NEAR(pmf[1], 1.0 / 3, 0.01);
  EXPECT_NEAR(pmf[2], 2.0 / 9, 0.01);
  EXPECT_NEAR(s.mean_service_time(), 3.0, 0.05);
}

TEST(Model1Sim, LittlesLaw) {
  const auto cfg = model1(0.1, 0.5, 2000000, 8);
  const auto s = hol::simulate_model1(cfg);
  const double predicted = cfg.spec.arrivals.total() * (s.mean_wait + s.mean_service_time());
  EXPECT_NEAR(s.mean_queue_len, predicted, 0.05 * predicted);
}

TEST(Model2Sim, EpochsPassOneOrTwoVehicles) {
  struct Check : hol::NullObserver {
    bool ok = true;
    std::uint64_t busy = 0;
    void on_epoch(std::int64_t, std::size_t in_system, std::size_t departed, bool blocked) {
      if (in_system == 0) return;
      ++busy;
      if (departed < 1 || departed > 2) ok = false;
      if (blocked && departed != 1) ok = false;
    }
  } check;
  const auto s = hol::simulate_model2(model2(0.25, 0.2, 0.2, 300000, 6), check);
  EXPECT_TRUE(check.ok);
  EXPECT_GT(check.busy, 0u);
  EXPECT_EQ(s.epoch_departures[0], 0u);
  EXPECT_GT(s.blocked_epochs, 0u);
}

TEST(Model2Sim, FullCommunicationNeverBlocks) {
  const auto s = hol::simulate_model2(model2(0.15, 0.15, 1.0, 500000, 7));
  EXPECT_EQ(s.blocked_epochs, 0u);
  ASSERT_GE(s.service_time_histogram.size(), 2u);
  EXPECT_EQ(s.service_time_histogram[1], s.departures);
}

TEST(Model2Sim, SingleClassNeverBlocks) {
  struct Check : hol::NullObserver {
    bool ok = true;
    void on_epoch(std::int64_t, std::size_t in_system, std::size_t departed, bool) {
      if (departed < std::min<std::size_t>(2, in_system)) ok = false;
    }
  } check;
  const auto s = hol::simulate_model2(model2(0.3, 0.0, 0.0, 300000, 9), check);
  EXPECT_TRUE(check.ok);
  EXPECT_EQ(s.service_time_histogram[1], s.departures);
}

TEST(Model2Sim, LittlesLaw) {
  const auto cfg = model2(0.2, 0.2, 0.0, 2000000, 10);
  const auto s = hol::simulate_model2(cfg);
  const double predicted = cfg.spec.arrivals.total() * (s.mean_wait + s.mean_service_time());
  EXPECT_NEAR(s.mean_queue_len, predicted, 0.05 * predicted);
}

TEST(SaturatedProbe, BlockedEpochsMatchClosedForm) {
  struct Case {
    double l1, l2, p1;
  };
  for (const Case& c : {Case{0.15, 0.15, 0.5}, Case{0.3, 0.7, 0.6}, Case{0.7, 0.3, 0.2}}) {
    const IntersectionSpec spec{ModelKind::dual_lane, ArrivalSpec{{c.l1, c.l2}}, PhaseConfig{{c.p1, 1 - c.p1}},
                                CommProfile{0.0}};
    const auto probe = hol::probe_saturated_model2(spec, 1000000, 21);
    EXPECT_NEAR(probe.blocked_fraction(), hol::model2_blocking_probability(spec.arrivals, spec.phases), 0.004);
  }
}

TEST(SaturatedProbe, FullCommunicationNeverBlocks) {
  const IntersectionSpec spec{ModelKind::dual_lane, ArrivalSpec{{0.2, 0.2}}, PhaseConfig{{0.5, 0.5}},
                              CommProfile{1.0}};
  EXPECT_EQ(hol::probe_saturated_model2(spec, 100000, 1).blocked_epochs, 0u);
}

TEST(Saturation, UnstableRunIsFlagged) {
  const auto s = hol::simulate_model1(model1(0.4 / 3, 0.0, 1000000, 11));
  EXPECT_TRUE(s.saturated);
  const auto stable = hol::simulate_model1(model1(0.05, 0.0, 200000, 11));
  EXPECT_FALSE(stable.saturated);
}

TEST(ServiceTimeSamples, PointMassAtFullCommunication) {
  const auto pmf = hol::service_time_samples(model1(0.1, 1.0, 200000));
  EXPECT_DOUBLE_EQ(pmf[1], 1.0);
  for (std::size_t n = 2; n < pmf.size(); ++n) EXPECT_EQ(pmf[n], 0.0);
}

TEST(PoissonSampler, MeanAndVariance) {
  hol::Rng rng(123);
  for (double mean : {0.05, 0.3, 2.0}) {
    const hol::PoissonSampler pois(mean);
    double sum = 0, sq = 0;
    const int n = 400000;
    for (int i = 0; i < n; ++i) {
      const double k = pois(rng);
      sum += k;
      sq += k * k;
    }
    const double m = sum / n;
    EXPECT_NEAR(m, mean, 5 * std::sqrt(mean / n));
    EXPECT_NEAR(sq / n - m * m, mean, 0.02 * mean + 0.002);
  }
}

TEST(Rng, BelowIsUniform) {
  hol::Rng rng(77);
  std::array<int, 5> counts{};
  for (int i = 0; i < 100000; ++i) ++counts[rng.below(5)];
  for (int c : counts) EXPECT_NEAR(c, 20000, 600);
}

}  // namespace
