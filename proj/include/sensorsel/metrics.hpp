#pragma once

#include <string>

#include "sensorsel/tensor_ops.hpp"

namespace sensorsel {

/// Evaluation horizon: either a finite step count or discounted-infinite.
class Horizon {
 public:
  static Horizon infinite(double discount) {
    if (discount <= 0.0) throw ConfigError("Horizon::infinite(): discount must be positive");
    Horizon h;
    h.infinite_ = true;
    h.discount_ = discount;
    return h;
  }

  static Horizon finite(int steps) {
    if (steps < 0) throw ConfigError("Horizon::finite(): steps must be >= 0");
    Horizon h;
    h.infinite_ = false;
    h.steps_ = steps;
    return h;
  }

  bool is_infinite() const { return infinite_; }
  int steps() const { return steps_; }
  double discount() const { return discount_; }

  friend bool operator==(const Horizon&, const Horizon&) = default;

 private:
  Horizon() = default;
  bool infinite_ = false;
  int steps_ = 0;
  double discount_ = 1.0;
};

enum class MetricKind { kTrace, kLogDet };

struct Metric {
  MetricKind kind = MetricKind::kTrace;
  Horizon horizon = Horizon::infinite(0.99);

  friend bool operator==(const Metric&, const Metric&) = default;
};

/// Eigenvalues below this floor make a log-det evaluate to -inf rather than
/// large negative noise, so uninformative sensor sets rank strictly last.
inline constexpr double kLogDetFloor = 1e-12;

/// log det of a symmetric block under the eigenvalue floor.
double log_det(const SymMatrix& block, double floor = kLogDetFloor);

/// Scalar score of an m x m cost block: trace, or floored log det.
double metric_value(const SymMatrix& block, MetricKind kind, double floor = kLogDetFloor);

std::string to_string(MetricKind kind);

}  // namespace sensorsel
