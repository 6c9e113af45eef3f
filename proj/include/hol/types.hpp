#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hol {

enum class ErrorKind {
  invalid_argument,
  invalid_moments,
  unknown_node,
  schema_violation,
  semantic_violation,
  io_failure,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::invalid_moments: return "invalid-moments";
    case ErrorKind::unknown_node: return "unknown-node";
    case ErrorKind::schema_violation: return "schema-violation";
    case ErrorKind::semantic_violation: return "semantic-violation";
    case ErrorKind::io_failure: return "io-failure";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Single-lane FIFO (Model I) or two dedicated HoL lanes with two-slot phases (Model II).
enum class ModelKind { single_lane, dual_lane };

inline const char* to_string(ModelKind kind) {
  return kind == ModelKind::single_lane ? "I" : "II";
}

/// Number of vehicle classes (and traffic phases) a model distinguishes.
/// Model I: left, straight, right. Model II: straight-or-right, left.
constexpr std::size_t class_count(ModelKind kind) {
  return kind == ModelKind::single_lane ? 3 : 2;
}

inline constexpr double kProbabilityTolerance = 1e-9;

/// Per-class Poisson arrival rates in vehicles per slot.
struct ArrivalSpec {
  std::vector<double> rates;

  double total() const {
    double sum = 0.0;
    for (double r : rates) sum += r;
    return sum;
  }

  /// Turning fraction of class i. Requires total() > 0.
  double fraction(std::size_t i) const {
    const double sum = total();
    if (!(sum > 0.0)) {
      throw Error(ErrorKind::invalid_argument, "turning fractions need a positive total arrival rate");
    }
    return rates.at(i) / sum;
  }

  bool operator==(const ArrivalSpec&) const = default;
};

/// Phase selection probabilities, drawn i.i.d. whenever the light has no intent information.
struct PhaseConfig {
  std::vector<double> probs;

  static PhaseConfig uniform(std::size_t n) {
    return PhaseConfig{std::vector<double>(n, 1.0 / static_cast<double>(n))};
  }

  bool operator==(const PhaseConfig&) const = default;
};

/// Probability that a vehicle announces its intent.
struct CommProfile {
  double p_t = 0.0;

  bool operator==(const CommProfile&) const = default;
};

struct IntersectionSpec {
  ModelKind model = ModelKind::single_lane;
  ArrivalSpec arrivals;
  PhaseConfig phases;
  CommProfile comm;

  bool operator==(const IntersectionSpec&) const = default;
};

struct WaitingTimeReport {
  double E_x = 1.0;
  double E_x2 = 1.0;
  double rho = 0.0;
  double W = 0.0;  // +inf when unstable
  bool stable = true;

  bool operator==(const WaitingTimeReport&) const = default;
};

inline void validate(const ArrivalSpec& arrivals) {
  for (std::size_t i = 0; i < arrivals.rates.size(); ++i) {
    const double r = arrivals.rates[i];
    if (!std::isfinite(r) || r < 0.0) {
      throw Error(ErrorKind::invalid_argument,
                  "arrival rate " + std::to_string(i) + " must be finite and >= 0");
    }
  }
}

inline void validate(const CommProfile& comm) {
  if (!(comm.p_t >= 0.0 && comm.p_t <= 1.0)) {
    throw Error(ErrorKind::invalid_argument, "communication probability must lie in [0, 1]");
  }
}

/// Checks the phase block against the arrivals it will serve. A zero phase
/// probability is tolerated only for a class that never arrives.
inline void validate(const PhaseConfig& phases, const ArrivalSpec& arrivals, std::size_t classes) {
  if (phases.probs.size() != classes) {
    throw Error(ErrorKind::invalid_argument,
                "expected " + std::to_string(classes) + " phase probabilities, got " +
                    std::to_string(phases.probs.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < classes; ++i) {
    const double p = phases.probs[i];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorKind::invalid_argument, "phase probability " + std::to_string(i) + " outside [0, 1]");
    }
    if (p == 0.0 && arrivals.rates[i] > 0.0) {
      throw Error(ErrorKind::invalid_argument,
                  "phase probability " + std::to_string(i) + " is 0 but its class has arrivals");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbabilityTolerance) {
    throw Error(ErrorKind::invalid_argument, "phase probabilities must sum to 1");
  }
}

inline void validate(const IntersectionSpec& spec) {
  const std::size_t classes = class_count(spec.model);
  if (spec.arrivals.rates.size() != classes) {
    throw Error(ErrorKind::invalid_argument,
                std::string("model ") + to_string(spec.model) + " expects " + std::to_string(classes) +
                    " arrival classes, got " + std::to_string(spec.arrivals.rates.size()));
  }
  validate(spec.arrivals);
  validate(spec.comm);
  validate(spec.phases, spec.arrivals, classes);
}

}  // namespace hol
