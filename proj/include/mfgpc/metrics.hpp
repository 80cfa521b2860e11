#ifndef MFGPC_METRICS_HPP
#define MFGPC_METRICS_HPP

#include <optional>
#include <utility>
#include <vector>

#include "mfgpc/types.hpp"

namespace mfgpc {

/// Scores are percentages. A zero denominator yields 0 and sets the flag.
struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Index tp = 0, fp = 0, tn = 0, fn = 0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;

  Index total() const { return tp + fp + tn + fn; }
  double error() const { return 100.0 - accuracy; }
};

MetricsReport compute_metrics(const LabelVector& predicted, const LabelVector& truth);
MetricsReport metrics_from_counts(Index tp, Index fp, Index tn, Index fn);

/// Harmonic mean of precision and recall (any common unit); 0 when both are 0.
double f1_score(double precision, double recall);

/// First n_high whose error is <= target, or nullopt when the run never gets there.
std::optional<Index> samples_to_target_error(const std::vector<std::pair<Index, double>>& trajectory,
                                             double target = 10.0);
std::vector<std::optional<Index>> samples_to_target_error(
    const std::vector<std::vector<std::pair<Index, double>>>& trajectories, double target = 10.0);

/// Linear-interpolated quantile (type 7); NaNs are dropped, +inf allowed.
double quantile(std::vector<double> values, double q);
inline double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

/// Median with censored runs counted as +infinity.
double censored_median(const std::vector<std::optional<Index>>& counts);

}  // namespace mfgpc

#endif  // MFGPC_METRICS_HPP
