#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mfgpc/synthetic.hpp"

using namespace mfgpc;
using namespace mfgpc::synthetic;

namespace {

Vector pt(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("labelers") {
  const double pi = std::acos(-1.0);
  CHECK(SineBoundarySpec::high().margin(0.2, 0.5) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(label_high(pt(0.2, 0.5)) == 1);
  CHECK(label_high(pt(0.0, 1.0)) == 0);
  CHECK(label_high(pt(0.0, 0.5)) == 0);
  CHECK(label_low(pt(0.0, 0.0)) == 1);
  CHECK(label_low(pt(0.0, 0.45)) == 0);
  CHECK(SineBoundarySpec::low().margin(0.5, 0.2) == doctest::Approx(0.126393).epsilon(1e-5));
  CHECK(SineBoundarySpec::low().margin(0.5, 0.2) ==
        doctest::Approx(0.45 + std::sin(1.1 * pi) / 2.5 - 0.2).epsilon(1e-14));
  CHECK(label_low(pt(0.5, 0.2)) == 1);
  CHECK_THROWS_AS(label_high(pt(1.2, 0.5)), DomainError);
  CHECK_THROWS_AS(label_low(pt(0.5, -0.01)), DomainError);

  std::mt19937_64 rng(3);
  const Matrix x = th::random_matrix(rng, 200, 2);
  const LabelVector y = label_rows(SineBoundarySpec::high(), x);
  for (Index i = 0; i < 200; ++i) {
    const double m = 0.5 + std::sin(2.5 * pi * x(i, 0)) / 3.0 - x(i, 1);
    CHECK(y[i] == (m > 0.0 ? 1 : 0));
    CHECK(label_high(x.row(i).transpose()) == y[i]);
  }
}

TEST_CASE("levels disagree on a modest fraction of the square") {
  int disagree = 0;
  for (int i = 0; i < 100; ++i) {
    for (int j = 0; j < 100; ++j) {
      const Vector x = pt((i + 0.5) / 100.0, (j + 0.5) / 100.0);
      disagree += label_high(x) != label_low(x);
    }
  }
  const double rate = disagree / 1e4;
  MESSAGE("disagreement rate " << rate);
  CHECK(rate >= 0.02);
  CHECK(rate <= 0.20);
}

TEST_CASE("LOW design") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    const auto d = make_low_fidelity_design(seed);
    REQUIRE(d.size() == 45);
    CHECK(d.n_low() == 45);
    CHECK(d.labels().sum() > 0);
    CHECK(d.labels().sum() < 45);
    for (Index i = 0; i < 30; ++i) {
      CHECK(std::abs(SineBoundarySpec::low().margin(d.inputs()(i, 0), d.inputs()(i, 1))) <= 0.05);
    }
    for (Index i = 0; i < 45; ++i) CHECK(d.labels()[i] == label_low(d.inputs().row(i).transpose()));
    CHECK(make_low_fidelity_design(seed) == d);
  }
}

TEST_CASE("HIGH seed design") {
  const auto h = make_high_fidelity_seed(10, 5);
  REQUIRE(h.size() == 10);
  CHECK(h.n_high() == 10);
  // Balanced in the LOW labels, then labeled by the HIGH oracle.
  CHECK(label_rows(SineBoundarySpec::low(), h.inputs()).sum() == 5);
  CHECK(h.labels() == label_rows(SineBoundarySpec::high(), h.inputs()));
}
