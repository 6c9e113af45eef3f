#pragma once

// Closed-form service-time distributions and M/G/1 waiting times for the
// single-lane (Model I) and dual-lane (Model II) intersection queues.

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>

#include "hol/types.hpp"

namespace hol {

struct Moments {
  double E_x = 1.0;
  double E_x2 = 1.0;
};

/// Pollaczek-Khinchine mean queueing delay W = Λ·E[x²] / (2(1 − ρ)), ρ = Λ·E[x].
/// An unstable queue (ρ >= 1) is a flagged result with W = +inf.
inline WaitingTimeReport pk_waiting_time(double total_rate, double E_x, double E_x2) {
  if (!std::isfinite(total_rate) || total_rate < 0.0) {
    throw Error(ErrorKind::invalid_argument, "total arrival rate must be finite and >= 0");
  }
  if (!(E_x >= 1.0) || !std::isfinite(E_x2)) {
    throw Error(ErrorKind::invalid_moments, "E[x] must be >= 1 and E[x^2] finite");
  }
  // Relative slack so moments computed as p + (1-p)·s do not trip on rounding.
  if (E_x2 < E_x * E_x * (1.0 - 1e-12)) {
    throw Error(ErrorKind::invalid_moments, "E[x^2] < E[x]^2");
  }
  WaitingTimeReport report;
  report.E_x = E_x;
  report.E_x2 = E_x2;
  report.rho = total_rate * E_x;
  report.stable = report.rho < 1.0;
  report.W = report.stable ? total_rate * E_x2 / (2.0 * (1.0 - report.rho))
                           : std::numeric_limits<double>::infinity();
  return report;
}

namespace detail {

inline void require_model(const IntersectionSpec& spec, ModelKind kind) {
  validate(spec);
  if (spec.model != kind) {
    throw Error(ErrorKind::invalid_argument, std::string("expected a model ") + to_string(kind) + " intersection");
  }
}

inline IntersectionSpec make_spec(ModelKind kind, const ArrivalSpec& arr, const PhaseConfig& ph,
                                  const CommProfile& comm) {
  IntersectionSpec spec{kind, arr, ph, comm};
  require_model(spec, kind);
  return spec;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Model I: single FIFO lane, one departure per slot at most.
//
// A HoL vehicle with communication leaves in one slot. Otherwise each slot
// draws a phase; a class-i vehicle leaves with probability p_i per slot, so
// its service time is geometric(p_i).
// ---------------------------------------------------------------------------

/// P[x = n] for n >= 1. Classes with zero arrival rate drop out of the mixture.
inline double model1_service_pmf(const ArrivalSpec& arr, const PhaseConfig& ph, const CommProfile& comm,
                                 std::int64_t n) {
  detail::make_spec(ModelKind::single_lane, arr, ph, comm);
  if (n < 1) throw Error(ErrorKind::invalid_argument, "service time n must be >= 1");
  const double total = arr.total();
  if (!(total > 0.0)) throw Error(ErrorKind::invalid_argument, "service pmf needs a positive total arrival rate");

  double mixture = 0.0;
  for (std::size_t i = 0; i < arr.rates.size(); ++i) {
    if (arr.rates[i] == 0.0) continue;
    const double p = ph.probs[i];
    mixture += arr.rates[i] * std::pow(1.0 - p, static_cast<double>(n - 1)) * p;
  }
  mixture /= total;
  const double no_comm = 1.0 - comm.p_t;
  return n == 1 ? comm.p_t + no_comm * mixture : no_comm * mixture;
}

/// Closed-form P[x > n], summing the geometric tails.
inline double model1_service_tail(const ArrivalSpec& arr, const PhaseConfig& ph, const CommProfile& comm,
                                  std::int64_t n) {
  detail::make_spec(ModelKind::single_lane, arr, ph, comm);
  if (n < 0) throw Error(ErrorKind::invalid_argument, "tail index must be >= 0");
  if (n == 0) return 1.0;
  const double total = arr.total();
  double tail = 0.0;
  for (std::size_t i = 0; i < arr.rates.size(); ++i) {
    if (arr.rates[i] == 0.0) continue;
    tail += arr.rates[i] * std::pow(1.0 - ph.probs[i], static_cast<double>(n));
  }
  return (1.0 - comm.p_t) * tail / total;
}

/// E[x] = p_t + (1 − p_t)·Σ α_i / p_i and E[x²] = p_t + (1 − p_t)·Σ α_i (2 − p_i) / p_i².
inline Moments model1_moments(const ArrivalSpec& arr, const PhaseConfig& ph, const CommProfile& comm) {
  detail::make_spec(ModelKind::single_lane, arr, ph, comm);
  const double total = arr.total();
  if (!(total > 0.0)) return {};

  double mean = 0.0;
  double second = 0.0;
  for (std::size_t i = 0; i < arr.rates.size(); ++i) {
    if (arr.rates[i] == 0.0) continue;
    const double alpha = arr.rates[i] / total;
    const double p = ph.probs[i];
    mean += alpha / p;
    second += alpha * (2.0 - p) / (p * p);
  }
  const double no_comm = 1.0 - comm.p_t;
  return {comm.p_t + no_comm * mean, comm.p_t + no_comm * second};
}

inline WaitingTimeReport model1_waiting_time(const ArrivalSpec& arr, const PhaseConfig& ph,
                                             const CommProfile& comm) {
  const Moments m = model1_moments(arr, ph, comm);
  return pk_waiting_time(arr.total(), m.E_x, m.E_x2);
}

// ---------------------------------------------------------------------------
// Model II: two dedicated HoL lanes (class 0 straight/right, class 1 left),
// phases held for two slots. Service time is 1 or 2 slots.
// ---------------------------------------------------------------------------

/// Stationary probability that a two-slot phase passes only one vehicle
/// because the vehicle behind the HoL lanes is blocked:
///   2λ1λ2(λ1p2 + λ2p1) / ((λ1 + λ2)(λ1²p2 + λ2²p1 + 4λ1λ2)).
/// Zero when either class is absent.
inline double model2_blocking_probability(const ArrivalSpec& arr, const PhaseConfig& ph) {
  detail::make_spec(ModelKind::dual_lane, arr, ph, CommProfile{});
  const double l1 = arr.rates[0];
  const double l2 = arr.rates[1];
  if (l1 == 0.0 || l2 == 0.0) return 0.0;
  const double p1 = ph.probs[0];
  const double p2 = ph.probs[1];
  const double numerator = 2.0 * l1 * l2 * (l1 * p2 + l2 * p1);
  const double denominator = (l1 + l2) * (l1 * l1 * p2 + l2 * l2 * p1 + 4.0 * l1 * l2);
  return numerator / denominator;
}

/// x ∈ {1, 2}, so E[x] = 1 + P[x=2] and E[x²] = 1 + 3·P[x=2], with
/// P[x=2] = (1 − p_t)·blocking probability.
inline Moments model2_moments(const ArrivalSpec& arr, const PhaseConfig& ph, const CommProfile& comm) {
  detail::make_spec(ModelKind::dual_lane, arr, ph, comm);
  const double two_slot = (1.0 - comm.p_t) * model2_blocking_probability(arr, ph);
  return {1.0 + two_slot, 1.0 + 3.0 * two_slot};
}

inline WaitingTimeReport model2_waiting_time(const ArrivalSpec& arr, const PhaseConfig& ph,
                                             const CommProfile& comm) {
  const Moments m = model2_moments(arr, ph, comm);
  return pk_waiting_time(arr.total(), m.E_x, m.E_x2);
}

inline Moments moments(const IntersectionSpec& spec) {
  return spec.model == ModelKind::single_lane ? model1_moments(spec.arrivals, spec.phases, spec.comm)
                                              : model2_moments(spec.arrivals, spec.phases, spec.comm);
}

inline WaitingTimeReport waiting_time(const IntersectionSpec& spec) {
  return spec.model == ModelKind::single_lane ? model1_waiting_time(spec.arrivals, spec.phases, spec.comm)
                                              : model2_waiting_time(spec.arrivals, spec.phases, spec.comm);
}

}  // namespace hol
