#pragma once

// Slot-level stochastic simulation of one intersection approach.
//
// Time is slotted. Vehicles arriving during slot t join the queue at the end
// of the slot and are eligible for service from slot t + 1. A vehicle's wait
// is (service start) - (eligible slot); its service time x runs from service
// start to the slot it leaves, inclusive. The queue length is sampled at the
// start of each slot and counts waiting and in-service vehicles, so Little's
// law reads L = Λ·(W + E[x]).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "hol/rng.hpp"
#include "hol/types.hpp"

namespace hol {

struct Vehicle {
  std::uint64_t id = 0;  // arrival order
  std::uint8_t cls = 0;
  std::int64_t arrival_slot = 0;
  bool has_comm = false;
  std::int64_t service_start_slot = -1;
  std::int64_t departure_slot = -1;

  std::int64_t eligible_slot() const { return arrival_slot + 1; }
};

struct SimConfig {
  IntersectionSpec spec;
  std::uint64_t horizon = 100000;
  std::optional<std::uint64_t> warmup;  // default: max(1% of horizon, 1e4), at most horizon / 2
  std::uint64_t seed = 1;
  std::uint32_t batches = 20;

  std::uint64_t effective_warmup() const {
    if (warmup) return *warmup;
    return std::min(std::max<std::uint64_t>(horizon / 100, 10000), horizon / 2);
  }

  bool operator==(const SimConfig&) const = default;
};

inline constexpr std::uint64_t kMinHorizon = 10000;

inline void validate(const SimConfig& cfg) {
  validate(cfg.spec);
  if (cfg.horizon < kMinHorizon) {
    throw Error(ErrorKind::invalid_argument, "simulation horizon must be at least 10^4 slots");
  }
  if (cfg.effective_warmup() >= cfg.horizon) {
    throw Error(ErrorKind::invalid_argument, "warmup must be shorter than the horizon");
  }
  if (cfg.batches < 2) throw Error(ErrorKind::invalid_argument, "batch-means needs at least 2 batches");
}

struct SimStats {
  std::uint64_t observed_slots = 0;
  std::uint64_t arrivals = 0;        // vehicles joining after warmup
  std::uint64_t total_arrivals = 0;  // whole horizon
  std::uint64_t departures = 0;      // vehicles leaving after warmup
  double mean_wait = 0.0;
  double wait_stderr = 0.0;  // batch means over departure time
  double mean_queue_len = 0.0;
  std::uint64_t max_queue_len = 0;
  std::uint64_t busy_slots = 0;  // observed slots starting with a nonempty system
  bool saturated = false;

  /// service_time_histogram[n] = departures with service time n; index 0 unused.
  std::vector<std::uint64_t> service_time_histogram;
  std::vector<std::uint64_t> per_class_departures;
  std::vector<double> per_class_mean_wait;

  // Two-slot phase statistics (Model II only).
  std::uint64_t busy_epochs = 0;
  std::array<std::uint64_t, 3> epoch_departures{};  // busy epochs by departures passed
  std::uint64_t blocked_epochs = 0;

  double mean_service_time() const {
    if (departures == 0) return 0.0;
    double sum = 0.0;
    for (std::size_t n = 1; n < service_time_histogram.size(); ++n) {
      sum += static_cast<double>(n) * static_cast<double>(service_time_histogram[n]);
    }
    return sum / static_cast<double>(departures);
  }

  /// Empirical P[x = n], index 0 unused.
  std::vector<double> service_pmf() const {
    std::vector<double> pmf(service_time_histogram.size(), 0.0);
    if (departures == 0) return pmf;
    for (std::size_t n = 1; n < pmf.size(); ++n) {
      pmf[n] = static_cast<double>(service_time_histogram[n]) / static_cast<double>(departures);
    }
    return pmf;
  }

  bool operator==(const SimStats&) const = default;
};

/// Hooks for tracing a run. Derive and hide the members you need.
struct NullObserver {
  void on_hol_entry(const Vehicle&, std::int64_t /*slot*/) {}
  void on_departure(const Vehicle&) {}
  void on_slot(std::int64_t /*slot*/, std::size_t /*in_system*/, std::size_t /*departed*/, bool /*hol_has_comm*/) {}
  void on_epoch(std::int64_t /*start*/, std::size_t /*in_system*/, std::size_t /*departed*/, bool /*blocked*/) {}
};

namespace detail {

class Recorder {
 public:
  Recorder(const SimConfig& cfg, std::size_t classes)
      : warmup_(cfg.effective_warmup()),
        observed_(cfg.horizon - cfg.effective_warmup()),
        batch_sum_(cfg.batches, 0.0),
        batch_count_(cfg.batches, 0),
        class_sum_(classes, 0.0) {
    stats_.observed_slots = observed_;
    stats_.per_class_departures.assign(classes, 0);
    stats_.per_class_mean_wait.assign(classes, 0.0);
    stats_.service_time_histogram.assign(2, 0);
    const double rate = cfg.spec.arrivals.total();
    saturation_limit_ = 10.0 * std::sqrt(static_cast<double>(cfg.horizon) * rate) + 100.0;
  }

  bool observing(std::int64_t slot) const { return slot >= static_cast<std::int64_t>(warmup_); }

  void sample_queue(std::int64_t slot, std::size_t in_system) {
    if (static_cast<double>(in_system) > saturation_limit_) stats_.saturated = true;
    if (!observing(slot)) return;
    queue_sum_ += static_cast<double>(in_system);
    stats_.max_queue_len = std::max<std::uint64_t>(stats_.max_queue_len, in_system);
    if (in_system > 0) ++stats_.busy_slots;
  }

  void arrival(std::int64_t slot) {
    ++stats_.total_arrivals;
    if (observing(slot)) ++stats_.arrivals;
  }

  void departure(const Vehicle& v) {
    if (!observing(v.departure_slot)) return;
    const auto x = static_cast<std::size_t>(v.departure_slot - v.service_start_slot + 1);
    const double wait = static_cast<double>(v.service_start_slot - v.eligible_slot());
    if (x >= stats_.service_time_histogram.size()) stats_.service_time_histogram.resize(x + 1, 0);
    ++stats_.service_time_histogram[x];
    ++stats_.departures;
    wait_sum_ += wait;
    ++stats_.per_class_departures[v.cls];
    class_sum_[v.cls] += wait;
    const auto offset = static_cast<std::uint64_t>(v.departure_slot) - warmup_;
    const std::size_t batch = std::min<std::size_t>(batch_sum_.size() - 1, offset * batch_sum_.size() / observed_);
    batch_sum_[batch] += wait;
    ++batch_count_[batch];
  }

  void epoch(std::int64_t start, std::size_t in_system, std::size_t departed, bool blocked) {
    if (!observing(start) || in_system == 0) return;
    ++stats_.busy_epochs;
    ++stats_.epoch_departures[std::min<std::size_t>(departed, 2)];
    if (blocked) ++stats_.blocked_epochs;
  }

  SimStats finish() {
    if (stats_.departures > 0) stats_.mean_wait = wait_sum_ / static_cast<double>(stats_.departures);
    stats_.mean_queue_len = observed_ > 0 ? queue_sum_ / static_cast<double>(observed_) : 0.0;
    for (std::size_t c = 0; c < class_sum_.size(); ++c) {
      if (stats_.per_class_departures[c] > 0) {
        stats_.per_class_mean_wait[c] = class_sum_[c] / static_cast<double>(stats_.per_class_departures[c]);
      }
    }
    std::vector<double> means;
    for (std::size_t b = 0; b < batch_sum_.size(); ++b) {
      if (batch_count_[b] > 0) means.push_back(batch_sum_[b] / static_cast<double>(batch_count_[b]));
    }
    if (means.size() > 1) {
      double mu = 0.0;
      for (double m : means) mu += m;
      mu /= static_cast<double>(means.size());
      double ss = 0.0;
      for (double m : means) ss += (m - mu) * (m - mu);
      const auto k = static_cast<double>(means.size());
      stats_.wait_stderr = std::sqrt(ss / (k - 1.0) / k);
    }
    return stats_;
  }

 private:
  std::uint64_t warmup_;
  std::uint64_t observed_;
  double saturation_limit_ = 0.0;
  double queue_sum_ = 0.0;
  double wait_sum_ = 0.0;
  std::vector<double> batch_sum_;
  std::vector<std::uint64_t> batch_count_;
  std::vector<double> class_sum_;
  SimStats stats_;
};

/// Per-slot Poisson arrivals for every class, interleaved in uniformly random order.
class ArrivalProcess {
 public:
  explicit ArrivalProcess(const IntersectionSpec& spec) : p_t_(spec.comm.p_t) {
    for (double rate : spec.arrivals.rates) samplers_.emplace_back(rate);
  }

  template <typename Sink>
  void draw(Rng& rng, std::int64_t slot, Sink&& sink) {
    batch_.clear();
    for (std::size_t c = 0; c < samplers_.size(); ++c) {
      const std::uint32_t k = samplers_[c](rng);
      batch_.insert(batch_.end(), k, static_cast<std::uint8_t>(c));
    }
    if (batch_.size() > 1) rng.shuffle(batch_);
    for (std::uint8_t cls : batch_) {
      Vehicle v;
      v.id = next_id_++;
      v.cls = cls;
      v.arrival_slot = slot;
      v.has_comm = rng.bernoulli(p_t_);
      sink(v);
    }
  }

 private:
  double p_t_;
  std::vector<PoissonSampler> samplers_;
  std::vector<std::uint8_t> batch_;
  std::uint64_t next_id_ = 0;
};

}  // namespace detail

/// Model I: one FIFO lane. A HoL vehicle with communication leaves in the
/// current slot; otherwise a phase is drawn and it leaves iff the phase
/// matches its class.
template <typename Observer = NullObserver>
SimStats simulate_model1(const SimConfig& cfg, Observer&& observer = Observer{}) {
  validate(cfg);
  if (cfg.spec.model != ModelKind::single_lane) {
    throw Error(ErrorKind::invalid_argument, "simulate_model1 needs a model I intersection");
  }
  Rng rng(cfg.seed);
  detail::Recorder recorder(cfg, class_count(ModelKind::single_lane));
  detail::ArrivalProcess arrivals(cfg.spec);
  const std::vector<double>& phase = cfg.spec.phases.probs;
  std::deque<Vehicle> queue;

  const auto horizon = static_cast<std::int64_t>(cfg.horizon);
  for (std::int64_t t = 0; t < horizon; ++t) {
    const std::size_t in_system = queue.size();
    recorder.sample_queue(t, in_system);
    std::size_t departed = 0;
    bool hol_comm = false;
    if (!queue.empty()) {
      Vehicle& hol = queue.front();
      hol_comm = hol.has_comm;
      if (hol.service_start_slot < 0) {
        hol.service_start_slot = t;
        observer.on_hol_entry(hol, t);
      }
      if (hol.has_comm || rng.bernoulli(phase[hol.cls])) {
        hol.departure_slot = t;
        recorder.departure(hol);
        observer.on_departure(hol);
        queue.pop_front();
        departed = 1;
      }
    }
    observer.on_slot(t, in_system, departed, hol_comm);
    arrivals.draw(rng, t, [&](const Vehicle& v) {
      recorder.arrival(t);
      queue.push_back(v);
    });
  }
  return recorder.finish();
}

/// Model II: a FIFO feeding two dedicated HoL lanes (class 0 straight/right,
/// class 1 left). The FIFO head enters its lane whenever that lane is empty;
/// nobody overtakes. At every even slot a phase is fixed for two slots:
///   - one lane occupied: the light senses it and serves that lane;
///   - both occupied: the phase follows the first queued vehicle if it
///     communicates, otherwise it is drawn with the phase probabilities.
/// The epoch is blocked when a random phase leaves the first queued vehicle
/// stuck behind an occupied lane; then only one vehicle passes, it is
/// charged a two-slot service and leaves at the end of the epoch. Every
/// other departure has a one-slot service.
template <typename Observer = NullObserver>
SimStats simulate_model2(const SimConfig& cfg, Observer&& observer = Observer{}) {
  validate(cfg);
  if (cfg.spec.model != ModelKind::dual_lane) {
    throw Error(ErrorKind::invalid_argument, "simulate_model2 needs a model II intersection");
  }
  Rng rng(cfg.seed);
  detail::Recorder recorder(cfg, class_count(ModelKind::dual_lane));
  detail::ArrivalProcess arrivals(cfg.spec);
  const double straight_phase = cfg.spec.phases.probs[0];
  std::deque<Vehicle> queue;
  std::array<std::optional<Vehicle>, 2> lane;

  auto advance = [&](std::int64_t t) {
    while (!queue.empty() && !lane[queue.front().cls]) {
      Vehicle& v = lane[queue.front().cls].emplace(queue.front());
      queue.pop_front();
      observer.on_hol_entry(v, t);
    }
  };
  auto occupied = [&] { return static_cast<std::size_t>(lane[0].has_value()) + lane[1].has_value(); };
  auto depart = [&](int phase, std::int64_t start, std::int64_t slot) {
    Vehicle& v = *lane[phase];
    v.service_start_slot = start;
    v.departure_slot = slot;
    recorder.departure(v);
    observer.on_departure(v);
    lane[phase].reset();
  };

  int phase = -1;
  bool blocked = false;
  std::int64_t epoch_start = 0;
  std::size_t epoch_in_system = 0;
  std::size_t epoch_departed = 0;
  auto close_epoch = [&] {
    recorder.epoch(epoch_start, epoch_in_system, epoch_departed, blocked);
    observer.on_epoch(epoch_start, epoch_in_system, epoch_departed, blocked);
  };

  const auto horizon = static_cast<std::int64_t>(cfg.horizon);
  for (std::int64_t t = 0; t < horizon; ++t) {
    advance(t);
    if (t % 2 == 0) {
      if (t > 0) close_epoch();
      blocked = false;
      if (lane[0] && lane[1]) {
        if (!queue.empty() && queue.front().has_comm) {
          phase = queue.front().cls;
        } else {
          phase = rng.bernoulli(straight_phase) ? 0 : 1;
          blocked = !queue.empty() && queue.front().cls != phase;
        }
      } else if (lane[0]) {
        phase = 0;
      } else if (lane[1]) {
        phase = 1;
      } else {
        phase = -1;
      }
      epoch_start = t;
      epoch_in_system = queue.size() + occupied();
      epoch_departed = 0;
    }

    const std::size_t in_system = queue.size() + occupied();
    recorder.sample_queue(t, in_system);
    std::size_t departed = 0;
    if (blocked) {
      if (t % 2 == 1) {
        depart(phase, t - 1, t);
        departed = 1;
      }
    } else if (phase >= 0 && lane[phase]) {
      depart(phase, t, t);
      departed = 1;
    }
    epoch_departed += departed;
    if (departed) advance(t);
    observer.on_slot(t, in_system, departed, false);

    arrivals.draw(rng, t, [&](const Vehicle& v) {
      recorder.arrival(t);
      queue.push_back(v);
    });
  }
  if (horizon % 2 == 0) close_epoch();
  return recorder.finish();
}

inline SimStats simulate(const SimConfig& cfg) {
  return cfg.spec.model == ModelKind::single_lane ? simulate_model1(cfg) : simulate_model2(cfg);
}

/// Normalized empirical service-time pmf of one run, index n = slots (index 0 unused).
inline std::vector<double> service_time_samples(const SimConfig& cfg) { return simulate(cfg).service_pmf(); }

struct SaturatedProbe {
  std::uint64_t epochs = 0;
  std::uint64_t blocked_epochs = 0;
  std::uint64_t departures = 0;

  double blocked_fraction() const {
    return epochs ? static_cast<double>(blocked_epochs) / static_cast<double>(epochs) : 0.0;
  }
};

/// Runs the Model II phase rule against an unbounded backlog (the queue never
/// empties) and counts blocked two-slot epochs. This is the regime the
/// closed-form blocking probability describes.
inline SaturatedProbe probe_saturated_model2(const IntersectionSpec& spec, std::uint64_t epochs,
                                             std::uint64_t seed) {
  validate(spec);
  if (spec.model != ModelKind::dual_lane) {
    throw Error(ErrorKind::invalid_argument, "saturated probe needs a model II intersection");
  }
  if (spec.arrivals.rates[0] == 0.0 || spec.arrivals.rates[1] == 0.0) {
    // A single class never blocks; the probe would only sense one lane.
    return {epochs, 0, 2 * epochs};
  }
  Rng rng(seed);
  const double straight_share = spec.arrivals.fraction(0);
  const double straight_phase = spec.phases.probs[0];
  const double p_t = spec.comm.p_t;
  struct Slot {
    int cls;
    bool comm;
  };
  std::deque<Slot> backlog;
  std::array<bool, 2> lane{false, false};
  auto refill = [&] {
    while (backlog.size() < 2) backlog.push_back({rng.bernoulli(straight_share) ? 0 : 1, rng.bernoulli(p_t)});
  };
  auto advance = [&] {
    refill();
    while (!lane[backlog.front().cls]) {
      lane[backlog.front().cls] = true;
      backlog.pop_front();
      refill();
    }
  };

  SaturatedProbe probe;
  for (std::uint64_t e = 0; e < epochs; ++e) {
    advance();
    int phase = lane[0] ? 0 : 1;
    if (lane[0] && lane[1]) {
      phase = backlog.front().comm ? backlog.front().cls : (rng.bernoulli(straight_phase) ? 0 : 1);
    }
    std::uint64_t passed = 0;
    for (int s = 0; s < 2; ++s) {
      if (lane[phase]) {
        lane[phase] = false;
        ++passed;
        advance();
      }
    }
    ++probe.epochs;
    probe.departures += passed;
    if (passed == 1) ++probe.blocked_epochs;
  }
  return probe;
}

}  // namespace hol
