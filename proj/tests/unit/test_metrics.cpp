#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "helpers.hpp"
#include "mfgpc/metrics.hpp"

using namespace mfgpc;

TEST_CASE("F1 examples") {
  CHECK(f1_score(1.000, 0.993) == doctest::Approx(0.9965).epsilon(1e-4));
  CHECK(f1_score(100.0, 99.3) == doctest::Approx(2 * 100.0 * 99.3 / 199.3).epsilon(1e-14));
  CHECK(f1_score(0.675, 0.821) == doctest::Approx(0.7409).epsilon(1e-4));
  CHECK(f1_score(0.0, 0.0) == 0.0);

  LabelVector y(6);
  y << 1, 0, 1, 1, 0, 0;
  const auto perfect = compute_metrics(y, y);
  CHECK(perfect.accuracy == 100.0);
  CHECK(perfect.f1 == 100.0);
  CHECK(perfect.error() == 0.0);
  CHECK_THROWS_AS(compute_metrics(y, y.head(3)), DimensionError);
}

TEST_CASE("zero denominators are flagged") {
  LabelVector zeros = LabelVector::Zero(4);
  const auto m = compute_metrics(zeros, zeros);
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  CHECK(m.precision_undefined);
  CHECK(m.recall_undefined);
  CHECK(m.f1_undefined);
  CHECK(m.accuracy == 100.0);
  const auto n = metrics_from_counts(0, 0, 5, 3);
  CHECK(n.precision_undefined);
  CHECK_FALSE(n.recall_undefined);
  CHECK(n.recall == 0.0);
}

TEST_CASE("metric identities over random confusion tables") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 1000; ++trial) {
    const Index n = 1 + static_cast<Index>(rng() % 300);
    LabelVector pred(n), truth(n);
    for (Index i = 0; i < n; ++i) {
      pred[i] = static_cast<int>(rng() % 2);
      truth[i] = static_cast<int>(rng() % 2);
    }
    Index tp = 0, fp = 0, tn = 0, fn = 0;
    for (Index i = 0; i < n; ++i) {
      tp += pred[i] && truth[i];
      fp += pred[i] && !truth[i];
      tn += !pred[i] && !truth[i];
      fn += !pred[i] && truth[i];
    }
    const auto m = compute_metrics(pred, truth);
    CHECK(m.tp == tp);
    CHECK(m.fp == fp);
    CHECK(m.tn == tn);
    CHECK(m.fn == fn);
    CHECK(m.total() == n);
    CHECK(m.accuracy == doctest::Approx(100.0 * (tp + tn) / n));
    if (tp + fp > 0) CHECK(m.precision == doctest::Approx(100.0 * tp / (tp + fp)));
    if (tp + fn > 0) CHECK(m.recall == doctest::Approx(100.0 * tp / (tp + fn)));
    if (m.precision + m.recall > 0) {
      CHECK(m.f1 == doctest::Approx(2 * m.precision * m.recall / (m.precision + m.recall)));
    }
    const auto c = metrics_from_counts(tp, fp, tn, fn);
    CHECK(c.f1 == m.f1);
  }
}

TEST_CASE("samples to target error") {
  using Traj = std::vector<std::pair<Index, double>>;
  CHECK(samples_to_target_error(Traj{{10, 8.0}, {11, 12.0}}) == Index(10));
  CHECK_FALSE(samples_to_target_error(Traj{{10, 18.0}, {11, 12.0}, {12, 10.5}}).has_value());
  CHECK(samples_to_target_error(Traj{{10, 18.0}, {11, 10.0}, {12, 9.0}}) == Index(11));
  CHECK(samples_to_target_error(Traj{{10, 18.0}, {11, 14.0}}, 15.0) == Index(11));
  const auto many = samples_to_target_error(std::vector<Traj>{{{10, 5.0}}, {{10, 50.0}}});
  CHECK(many[0] == Index(10));
  CHECK_FALSE(many[1].has_value());
  CHECK(censored_median({Index(18), Index(19), std::nullopt}) == 19.0);
  CHECK(std::isinf(censored_median({Index(18), std::nullopt, std::nullopt})));
}

TEST_CASE("quantiles") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(quantile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.25) == 2.0);
  CHECK(quantile({0.0, 10.0}, 0.75) == 7.5);
  CHECK(median({1.0, std::nan(""), 3.0}) == 2.0);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(median({1.0, inf, inf}) == inf);
}
