#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hol/analytics.hpp"

namespace {

using hol::ArrivalSpec;
using hol::CommProfile;
using hol::PhaseConfig;

const PhaseConfig kThirds = PhaseConfig::uniform(3);
const ArrivalSpec kTenths{{0.1, 0.1, 0.1}};

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// Brute-force service-time moments straight from the mixture definition:
// with probability p_t one slot, otherwise class i w.p. α_i then geometric(p_i).
struct BruteMoments {
  double mass = 0, mean = 0, second = 0;
};

BruteMoments brute_model1(const ArrivalSpec& arr, const PhaseConfig& ph, double p_t, int max_n) {
  BruteMoments m;
  double total = 0;
  for (double r : arr.rates) total += r;
  std::vector<double> geo = ph.probs;  // p_i (1 - p_i)^(n-1)
  for (int n = 1; n <= max_n; ++n) {
    double p = (n == 1) ? p_t : 0.0;
    for (std::size_t i = 0; i < arr.rates.size(); ++i) {
      p += (1.0 - p_t) * arr.rates[i] / total * geo[i];
      geo[i] *= 1.0 - ph.probs[i];
    }
    m.mass += p;
    m.mean += n * p;
    m.second += static_cast<double>(n) * n * p;
  }
  return m;
}

TEST(PkWaitingTime, DirectSubstitution) {
  auto r = hol::pk_waiting_time(0.3, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(r.rho, 0.3);
  EXPECT_NEAR(r.W, 0.3 / (2 * 0.7), 1e-15);
  EXPECT_TRUE(r.stable);

  r = hol::pk_waiting_time(0.3, 3.0, 15.0);
  EXPECT_NEAR(r.rho, 0.9, 1e-15);
  EXPECT_NEAR(r.W, 22.5, 1e-9);
}

TEST(PkWaitingTime, BoundaryIsUnstable) {
  const auto r = hol::pk_waiting_time(0.5, 2.0, 5.0);
  EXPECT_DOUBLE_EQ(r.rho, 1.0);
  EXPECT_FALSE(r.stable);
  EXPECT_TRUE(std::isinf(r.W));
}

TEST(PkWaitingTime, RejectsInconsistentMoments) {
  try {
    hol::pk_waiting_time(0.3, 2.0, 3.0);
    FAIL() << "expected invalid-moments";
  } catch (const hol::Error& e) {
    EXPECT_EQ(e.kind(), hol::ErrorKind::invalid_moments);
  }
  EXPECT_THROW(hol::pk_waiting_time(0.3, 0.5, 1.0), hol::Error);
  EXPECT_THROW(hol::pk_waiting_time(-0.1, 1.0, 1.0), hol::Error);
}

TEST(Model1Pmf, FullCommunicationIsUnitService) {
  const CommProfile full{1.0};
  const PhaseConfig skewed{{0.2, 0.5, 0.3}};
  EXPECT_EQ(hol::model1_service_pmf(kTenths, skewed, full, 1), 1.0);
  EXPECT_EQ(hol::model1_service_pmf(kTenths, skewed, full, 2), 0.0);
  EXPECT_EQ(hol::model1_service_pmf(kTenths, skewed, full, 7), 0.0);
}

TEST(Model1Pmf, NoCommunicationIsGeometric) {
  const CommProfile none{0.0};
  EXPECT_NEAR(hol::model1_service_pmf(kTenths, kThirds, none, 1), 1.0 / 3, 1e-15);
  EXPECT_NEAR(hol::model1_service_pmf(kTenths, kThirds, none, 2), 2.0 / 9, 1e-15);
}

TEST(Model1Pmf, PartialCommunication) {
  const CommProfile half{0.5};
  EXPECT_NEAR(hol::model1_service_pmf(kTenths, kThirds, half, 1), 2.0 / 3, 1e-15);
  EXPECT_NEAR(hol::model1_service_pmf(kTenths, kThirds, half, 2), 1.0 / 9, 1e-15);
}

TEST(Model1Pmf, RejectsNonPositiveN) {
  EXPECT_THROW(hol::model1_service_pmf(kTenths, kThirds, CommProfile{0.2}, 0), hol::Error);
}

TEST(Model1Pmf, NormalizesByClosedFormTail) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    ArrivalSpec arr{{u(gen) * 0.1, u(gen) * 0.1, u(gen) * 0.1}};
    double a = u(gen), b = u(gen), c = u(gen);
    PhaseConfig ph{{a / (a + b + c), b / (a + b + c), 0.0}};
    ph.probs[2] = 1.0 - ph.probs[0] - ph.probs[1];
    const CommProfile comm{u(gen) - 0.05};
    for (std::int64_t n : {1, 2, 5, 40}) {
      double head = 0.0;
      for (std::int64_t k = 1; k <= n; ++k) head += hol::model1_service_pmf(arr, ph, comm, k);
      EXPECT_NEAR(head + hol::model1_service_tail(arr, ph, comm, n), 1.0, 1e-9);
    }
  }
}

TEST(Model1Moments, FrozenValues) {
  auto m = hol::model1_moments(kTenths, kThirds, CommProfile{1.0});
  EXPECT_EQ(m.E_x, 1.0);
  EXPECT_EQ(m.E_x2, 1.0);

  m = hol::model1_moments(kTenths, kThirds, CommProfile{0.0});
  EXPECT_NEAR(m.E_x, 3.0, 1e-12);
  EXPECT_NEAR(m.E_x2, 15.0, 1e-12);

  m = hol::model1_moments(kTenths, kThirds, CommProfile{0.5});
  EXPECT_NEAR(m.E_x, 2.0, 1e-12);
  EXPECT_NEAR(m.E_x2, 8.0, 1e-12);
}

TEST(Model1Moments, MatchBruteForcePmfSums) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    ArrivalSpec arr{{0.01 + 0.2 * u(gen), 0.01 + 0.2 * u(gen), 0.01 + 0.2 * u(gen)}};
    // p_i >= 0.05 keeps the truncated tail below the tolerance at n = 10^4.
    double a = 0.15 + u(gen), b = 0.15 + u(gen), c = 0.15 + u(gen);
    PhaseConfig ph{{a / (a + b + c), b / (a + b + c), 0.0}};
    ph.probs[2] = 1.0 - ph.probs[0] - ph.probs[1];
    ASSERT_GE(ph.probs[2], 0.05);
    const double p_t = u(gen);
    const auto oracle = brute_model1(arr, ph, p_t, 10000);
    const auto m = hol::model1_moments(arr, ph, CommProfile{p_t});
    EXPECT_NEAR(oracle.mass, 1.0, 1e-9);
    EXPECT_NEAR(m.E_x, oracle.mean, 1e-6);
    EXPECT_NEAR(m.E_x2, oracle.second, 1e-6);
    EXPECT_GE(m.E_x, 1.0);
    EXPECT_LE(m.E_x, 1.0 / *std::min_element(ph.probs.begin(), ph.probs.end()) + 1e-12);
    EXPECT_GE(m.E_x2, m.E_x * m.E_x);
  }
}

TEST(Model1Moments, ZeroRateClassDropsOut) {
  const ArrivalSpec arr{{0.1, 0.0, 0.1}};
  const PhaseConfig ph{{0.5, 0.0, 0.5}};
  const auto m = hol::model1_moments(arr, ph, CommProfile{0.0});
  EXPECT_NEAR(m.E_x, 2.0, 1e-12);
  EXPECT_NEAR(m.E_x2, 6.0, 1e-12);
}

TEST(Model1Moments, RejectsZeroPhaseForLiveClass) {
  const PhaseConfig ph{{0.5, 0.0, 0.5}};
  EXPECT_THROW(hol::model1_moments(kTenths, ph, CommProfile{0.0}), hol::Error);
}

TEST(Model1WaitingTime, FrozenValues) {
  auto r = hol::model1_waiting_time(kTenths, kThirds, CommProfile{0.0});
  EXPECT_NEAR(r.rho, 0.9, 1e-12);
  EXPECT_NEAR(r.W, 22.5, 1e-9);

  r = hol::model1_waiting_time(kTenths, PhaseConfig{{0.7, 0.2, 0.1}}, CommProfile{1.0});
  EXPECT_NEAR(r.W, 0.3 / 1.4, 1e-12);

  r = hol::model1_waiting_time(kTenths, kThirds, CommProfile{0.5});
  EXPECT_NEAR(r.rho, 0.6, 1e-12);
  EXPECT_NEAR(r.W, 3.0, 1e-9);
}

TEST(Model1WaitingTime, UnstableIsFlagged) {
  const ArrivalSpec heavy{{0.4 / 3, 0.4 / 3, 0.4 / 3}};
  const auto r = hol::model1_waiting_time(heavy, kThirds, CommProfile{0.0});
  EXPECT_NEAR(r.rho, 1.2, 1e-12);
  EXPECT_FALSE(r.stable);
  EXPECT_TRUE(std::isinf(r.W));
}

// Eq. (2)-style: Λ / (2(1 − Λ)).
double full_comm_wait(double total) { return total / (2.0 * (1.0 - total)); }

// Eq. (5)-style: Σλ(2−p)/p² / (2(1 − Σλ/p)).
double no_comm_wait_model1(const ArrivalSpec& a, const PhaseConfig& p) {
  double num = 0, load = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    num += a.rates[i] * (2 - p.probs[i]) / (p.probs[i] * p.probs[i]);
    load += a.rates[i] / p.probs[i];
  }
  return num / (2 * (1 - load));
}

// Eq. (12)-style, written out independently.
double no_comm_wait_model2(double l1, double l2, double p1, double p2) {
  const double d = l1 * l1 * p2 + l2 * l2 * p1 + 4 * l1 * l2;
  const double k = l1 * l2 * (l1 * p2 + l2 * p1) / d;
  return ((l1 + l2) + 6 * k) / (2 * (1 - (l1 + l2) - 2 * k));
}

TEST(Reductions, FullAndNoCommunication) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const ArrivalSpec arr{{0.05 * u(gen), 0.05 * u(gen), 0.05 * u(gen)}};
    double a = 0.3 + u(gen), b = 0.3 + u(gen), c = 0.3 + u(gen);
    PhaseConfig ph{{a / (a + b + c), b / (a + b + c), 0.0}};
    ph.probs[2] = 1.0 - ph.probs[0] - ph.probs[1];
    EXPECT_LE(rel(hol::model1_waiting_time(arr, ph, CommProfile{1.0}).W, full_comm_wait(arr.total())), 1e-9);
    const auto none = hol::model1_waiting_time(arr, ph, CommProfile{0.0});
    if (none.stable) {
      EXPECT_LE(rel(none.W, no_comm_wait_model1(arr, ph)), 1e-9);
    }

    const ArrivalSpec two{{0.2 * u(gen) + 0.01, 0.2 * u(gen) + 0.01}};
    const double p1 = 0.05 + 0.9 * u(gen);
    const PhaseConfig ph2{{p1, 1.0 - p1}};
    EXPECT_LE(rel(hol::model2_waiting_time(two, ph2, CommProfile{1.0}).W, full_comm_wait(two.total())), 1e-9);
    const auto none2 = hol::model2_waiting_time(two, ph2, CommProfile{0.0});
    if (none2.stable) {
      EXPECT_LE(rel(none2.W, no_comm_wait_model2(two.rates[0], two.rates[1], p1, 1.0 - p1)), 1e-9);
    }
  }
}

TEST(Model1WaitingTime, PhaseIndependentAtFullCommunication) {
  const auto reference = hol::model1_waiting_time(kTenths, kThirds, CommProfile{1.0});
  for (const PhaseConfig& ph : {PhaseConfig{{0.1, 0.1, 0.8}}, PhaseConfig{{0.6, 0.3, 0.1}},
                                PhaseConfig{{0.05, 0.9, 0.05}}}) {
    EXPECT_EQ(hol::model1_waiting_time(kTenths, ph, CommProfile{1.0}), reference);
  }
}

TEST(Monotonicity, WaitNonIncreasingInCommunication) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const ArrivalSpec arr{{0.15 * u(gen), 0.15 * u(gen), 0.15 * u(gen)}};
    double a = 0.2 + u(gen), b = 0.2 + u(gen), c = 0.2 + u(gen);
    PhaseConfig ph{{a / (a + b + c), b / (a + b + c), 0.0}};
    ph.probs[2] = 1.0 - ph.probs[0] - ph.probs[1];
    const ArrivalSpec two{{0.3 * u(gen), 0.3 * u(gen)}};
    const double p1 = 0.05 + 0.9 * u(gen);
    const PhaseConfig ph2{{p1, 1 - p1}};
    double prev1 = std::numeric_limits<double>::infinity();
    double prev2 = prev1;
    for (int k = 0; k <= 10; ++k) {
      const CommProfile comm{k / 10.0};
      const double w1 = hol::model1_waiting_time(arr, ph, comm).W;
      const double w2 = hol::model2_waiting_time(two, ph2, comm).W;
      EXPECT_LE(w1, prev1);
      EXPECT_LE(w2, prev2);
      prev1 = w1;
      prev2 = w2;
    }
  }
}

TEST(Model2Blocking, FrozenValues) {
  const ArrivalSpec arr{{0.15, 0.15}};
  EXPECT_NEAR(hol::model2_blocking_probability(arr, PhaseConfig{{0.5, 0.5}}), 0.2, 1e-15);
  EXPECT_EQ(hol::model2_blocking_probability(ArrivalSpec{{0.3, 0.0}}, PhaseConfig{{0.5, 0.5}}), 0.0);
  EXPECT_EQ(hol::model2_blocking_probability(ArrivalSpec{{0.0, 0.3}}, PhaseConfig{{0.5, 0.5}}), 0.0);
}

TEST(Model2Blocking, SymmetricCaseSimplifies) {
  for (double lambda : {0.01, 0.1, 0.3}) {
    for (double p : {0.1, 0.5, 0.9}) {
      // λ1 = λ2 and p1 = p2 = p (the formula does not need p1 + p2 = 1 here,
      // so evaluate the closed form by hand).
      const double l = lambda;
      const double direct = 2 * l * l * (l * p + l * p) / ((2 * l) * (l * l * p + l * l * p + 4 * l * l));
      EXPECT_NEAR(direct, p / (p + 2), 1e-12);
    }
  }
  EXPECT_NEAR(hol::model2_blocking_probability(ArrivalSpec{{0.2, 0.2}}, PhaseConfig{{0.5, 0.5}}), 0.5 / 2.5, 1e-12);
}

TEST(Model2Blocking, StaysAProbability) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const ArrivalSpec arr{{u(gen), u(gen)}};
    const double p1 = u(gen);
    const double b = hol::model2_blocking_probability(arr, PhaseConfig{{p1, 1 - p1}});
    EXPECT_GE(b, 0.0);
    EXPECT_LE(b, 1.0);
  }
}

TEST(Model2Moments, FrozenValues) {
  const ArrivalSpec arr{{0.15, 0.15}};
  const PhaseConfig ph{{0.5, 0.5}};
  auto m = hol::model2_moments(arr, ph, CommProfile{1.0});
  EXPECT_EQ(m.E_x, 1.0);
  EXPECT_EQ(m.E_x2, 1.0);
  m = hol::model2_moments(arr, ph, CommProfile{0.0});
  EXPECT_NEAR(m.E_x, 1.2, 1e-15);
  EXPECT_NEAR(m.E_x2, 1.6, 1e-15);
  m = hol::model2_moments(arr, ph, CommProfile{0.5});
  EXPECT_NEAR(m.E_x, 1.1, 1e-15);
  EXPECT_NEAR(m.E_x2, 1.3, 1e-15);
  EXPECT_LE(m.E_x, 2.0);
}

TEST(Model2WaitingTime, FrozenValues) {
  const ArrivalSpec arr{{0.15, 0.15}};
  const PhaseConfig ph{{0.5, 0.5}};
  auto r = hol::model2_waiting_time(arr, ph, CommProfile{0.0});
  EXPECT_NEAR(r.rho, 0.36, 1e-12);
  EXPECT_NEAR(r.W, 0.375, 1e-12);
  r = hol::model2_waiting_time(arr, ph, CommProfile{1.0});
  EXPECT_NEAR(r.W, 0.3 / 1.4, 1e-12);
  for (double p_t : {0.0, 0.3, 1.0}) {
    r = hol::model2_waiting_time(ArrivalSpec{{0.3, 0.0}}, ph, CommProfile{p_t});
    EXPECT_NEAR(r.W, 0.3 / 1.4, 1e-12);
  }
}

TEST(Validation, RejectsMalformedSpecs) {
  EXPECT_THROW(hol::model1_waiting_time(ArrivalSpec{{0.1, -0.1, 0.1}}, kThirds, CommProfile{0}), hol::Error);
  EXPECT_THROW(hol::model1_waiting_time(kTenths, PhaseConfig{{0.3, 0.3, 0.3}}, CommProfile{0}), hol::Error);
  EXPECT_THROW(hol::model1_waiting_time(kTenths, PhaseConfig{{0.5, 0.5}}, CommProfile{0}), hol::Error);
  EXPECT_THROW(hol::model1_waiting_time(kTenths, kThirds, CommProfile{1.5}), hol::Error);
  EXPECT_THROW(hol::model2_waiting_time(kTenths, PhaseConfig{{0.5, 0.5}}, CommProfile{0}), hol::Error);
}

TEST(ArrivalSpec, TurningFractionsSumToOne) {
  const ArrivalSpec arr{{0.05, 0.2, 0.15}};
  EXPECT_NEAR(arr.fraction(0) + arr.fraction(1) + arr.fraction(2), 1.0, 1e-15);
  const ArrivalSpec empty{{0.0, 0.0}};
  EXPECT_THROW(empty.fraction(0), hol::Error);
}

}  // namespace
