#include "mfgpc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mfgpc {

double f1_score(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

MetricsReport metrics_from_counts(Index tp, Index fp, Index tn, Index fn) {
  if (tp < 0 || fp < 0 || tn < 0 || fn < 0) throw DomainError("metrics: negative confusion count");
  MetricsReport r;
  r.tp = tp;
  r.fp = fp;
  r.tn = tn;
  r.fn = fn;
  const auto pct = [](Index num, Index den) { return 100.0 * static_cast<double>(num) / static_cast<double>(den); };
  if (r.total() > 0) r.accuracy = pct(tp + tn, r.total());
  if (tp + fp > 0) {
    r.precision = pct(tp, tp + fp);
  } else {
    r.precision_undefined = true;
  }
  if (tp + fn > 0) {
    r.recall = pct(tp, tp + fn);
  } else {
    r.recall_undefined = true;
  }
  if (r.precision + r.recall > 0.0) {
    r.f1 = f1_score(r.precision, r.recall);
  } else {
    r.f1_undefined = true;
  }
  return r;
}

MetricsReport compute_metrics(const LabelVector& predicted, const LabelVector& truth) {
  if (predicted.size() != truth.size()) {
    throw DimensionError("metrics: " + std::to_string(predicted.size()) + " predictions vs " +
                         std::to_string(truth.size()) + " labels");
  }
  Index tp = 0, fp = 0, tn = 0, fn = 0;
  for (Index i = 0; i < truth.size(); ++i) {
    const int p = predicted[i], t = truth[i];
    if ((p != 0 && p != 1) || (t != 0 && t != 1)) throw SchemaError("metrics: labels must be 0 or 1");
    if (p == 1) {
      (t == 1 ? tp : fp) += 1;
    } else {
      (t == 0 ? tn : fn) += 1;
    }
  }
  return metrics_from_counts(tp, fp, tn, fn);
}

std::optional<Index> samples_to_target_error(const std::vector<std::pair<Index, double>>& trajectory, double target) {
  for (const auto& [n, err] : trajectory) {
    if (err <= target) return n;
  }
  return std::nullopt;
}

std::vector<std::optional<Index>> samples_to_target_error(
    const std::vector<std::vector<std::pair<Index, double>>>& trajectories, double target) {
  std::vector<std::optional<Index>> out;
  out.reserve(trajectories.size());
  for (const auto& t : trajectories) out.push_back(samples_to_target_error(t, target));
  return out;
}

double quantile(std::vector<double> values, double q) {
  values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return std::isnan(v); }), values.end());
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0 || values[lo] == values[hi]) return values[lo];
  return values[lo] + frac * (values[hi] - values[lo]);
}

double censored_median(const std::vector<std::optional<Index>>& counts) {
  std::vector<double> v;
  for (const auto& c : counts) {
    v.push_back(c ? static_cast<double>(*c) : std::numeric_limits<double>::infinity());
  }
  return median(std::move(v));
}

}  // namespace mfgpc
