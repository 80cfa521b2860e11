#include <doctest.h>

#include <fstream>
#include <random>

#include "helpers.hpp"
#include "mfgpc/dataset.hpp"
#include "mfgpc/synthetic.hpp"

using namespace mfgpc;

namespace {

// Number of points of each column falling in each of n equal-width bins.
bool stratified(const Matrix& x, const BoxDomain& d) {
  const Index n = x.rows();
  for (Index j = 0; j < x.cols(); ++j) {
    std::vector<int> count(n, 0);
    for (Index i = 0; i < n; ++i) {
      const double u = (x(i, j) - d.lower()[j]) / d.width()[j];
      if (u < 0.0 || u > 1.0) return false;
      const Index bin = std::min<Index>(n - 1, static_cast<Index>(u * n));
      ++count[bin];
    }
    for (int c : count) {
      if (c != 1) return false;
    }
  }
  return true;
}

LabeledDataset random_pool(std::mt19937_64& rng, Index ones, Index zeros) {
  const Index n = ones + zeros;
  Matrix x = th::random_matrix(rng, n, 2);
  LabelVector y(n);
  for (Index i = 0; i < n; ++i) y[i] = i < ones ? 1 : 0;
  return LabeledDataset::single_level(x, y, Fidelity::Low);
}

}  // namespace

TEST_CASE("latin hypercube strata") {
  const auto unit = BoxDomain::unit(2);
  const Matrix one = latin_hypercube(unit, 1, 7);
  REQUIRE(one.rows() == 1);
  CHECK((one.array() >= 0.0).all());
  CHECK((one.array() <= 1.0).all());

  for (std::uint64_t seed : {1u, 2u, 3u}) CHECK(stratified(latin_hypercube(unit, 4, seed), unit));

  Vector lo(2), hi(2);
  lo << 0.0, -1.0;
  hi << 10.0, 1.0;
  const BoxDomain box(lo, hi);
  CHECK(stratified(latin_hypercube(box, 100, 3), box));

  CHECK_THROWS_AS(latin_hypercube(unit, 0, 1), DomainError);
}

TEST_CASE("latin hypercube property over sizes and seeds") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Index dim = 1 + static_cast<Index>(rng() % 4);
    const Index n = 1 + static_cast<Index>(rng() % 60);
    Vector lo = th::random_matrix(rng, dim, 1, -5.0, 0.0);
    Vector hi = lo + th::random_matrix(rng, dim, 1, 0.1, 5.0);
    const BoxDomain box(lo, hi);
    const std::uint64_t seed = rng();
    const Matrix x = latin_hypercube(box, n, seed);
    REQUIRE(stratified(x, box));
    CHECK(x == latin_hypercube(box, n, seed));
  }
}

TEST_CASE("box domain validation") {
  Vector lo(2), hi(2);
  lo << 0.0, 1.0;
  hi << 1.0, 1.0;
  CHECK_THROWS_AS(BoxDomain(lo, hi), DomainError);
  CHECK_THROWS_AS(BoxDomain(Vector::Zero(2), Vector::Ones(3)), DimensionError);
}

TEST_CASE("standardizer maps the box to the unit cube and back") {
  Vector lo(3), hi(3);
  lo << -2.0, 100.0, 0.035;
  hi << 5.0, 300.0, 0.06;
  const Standardizer s{BoxDomain(lo, hi)};
  CHECK((s.scale().array() > 0.0).all());
  CHECK(s.apply_point(lo).norm() == doctest::Approx(0.0));
  CHECK((s.apply_point(hi).array() - 1.0).abs().maxCoeff() < 1e-12);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix x = th::random_matrix(rng, 7, 3, -1e3, 1e3);
    const Matrix back = s.invert(s.apply(x));
    CHECK(((back - x).array().abs() / x.array().abs().max(1e-300)).maxCoeff() < 1e-12);
  }
  CHECK_THROWS_AS(Standardizer(Vector::Ones(2), Vector::Zero(2)), DomainError);
}

TEST_CASE("dataset invariants") {
  Matrix x(3, 1);
  x << 0.1, 0.2, 0.3;
  LabelVector y(3);
  y << 0, 1, 0;
  CHECK_THROWS_AS(LabeledDataset(x, y, {Fidelity::High, Fidelity::Low, Fidelity::Low}), SchemaError);
  LabelVector bad(3);
  bad << 0, 2, 1;
  CHECK_THROWS_AS(LabeledDataset(x, bad, {Fidelity::Low, Fidelity::Low, Fidelity::High}), SchemaError);
  CHECK_THROWS_AS(LabeledDataset(x, y, {Fidelity::Low}), DimensionError);

  const LabeledDataset d(x, y, {Fidelity::Low, Fidelity::Low, Fidelity::High});
  CHECK(d.n_low() == 2);
  CHECK(d.n_high() == 1);
  Vector extra(1);
  extra << 0.9;
  const auto d2 = d.with_high(extra, 1);
  CHECK(d2.n_high() == 2);
  CHECK(d2.high_labels()[1] == 1);
  CHECK(d2.high_only().n_low() == 0);
  CHECK(d2.high_only().size() == 2);
  CHECK(d2.retagged(Fidelity::Low).n_low() == 4);
}

TEST_CASE("balanced seed selection") {
  std::mt19937_64 rng(3);
  const auto pool = random_pool(rng, 5, 5);
  const Matrix all = balanced_seed_selection(pool, 10, 1);
  CHECK(all.rows() == 10);

  const auto skewed = random_pool(rng, 3, 500);
  try {
    balanced_seed_selection(skewed, 10, 1);
    FAIL("expected an imbalance error");
  } catch (const ImbalanceError& e) {
    CHECK(e.deficient_class() == 1);
  }

  // LOW-labeled LHS pool of the sine example; count classes of the picks with the labeler.
  const Matrix xp = latin_hypercube(synthetic::unit_square(), 500, 9);
  const auto lpool = LabeledDataset::single_level(xp, synthetic::label_rows(synthetic::SineBoundarySpec::low(), xp),
                                                  Fidelity::Low);
  const Matrix picked = balanced_seed_selection(lpool, 10, 4);
  const LabelVector py = synthetic::label_rows(synthetic::SineBoundarySpec::low(), picked);
  CHECK(py.sum() == 5);
}

TEST_CASE("balanced selection property over random pools") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const Index half = 1 + static_cast<Index>(rng() % 10);
    const Index ones = half + static_cast<Index>(rng() % 30);
    const Index zeros = half + static_cast<Index>(rng() % 30);
    auto pool = random_pool(rng, ones, zeros);
    const Matrix picked = balanced_seed_selection(pool, 2 * half, rng());
    REQUIRE(picked.rows() == 2 * half);
    // Match the returned rows back to pool rows: no repeats, half of each class.
    std::vector<bool> used(pool.size(), false);
    Index n_one = 0;
    for (Index r = 0; r < picked.rows(); ++r) {
      Index hit = -1;
      for (Index i = 0; i < pool.size(); ++i) {
        if (pool.inputs().row(i) == picked.row(r)) hit = i;
      }
      REQUIRE(hit >= 0);
      CHECK_FALSE(used[hit]);
      used[hit] = true;
      n_one += pool.labels()[hit];
    }
    CHECK(n_one == half);
  }
}

TEST_CASE("dataset csv round trip") {
  const auto dir = th::temp_dir("dataset");
  const LabeledDataset empty(2);
  save_dataset(empty, dir / "empty.csv");
  {
    std::ifstream in(dir / "empty.csv");
    std::string header, rest;
    std::getline(in, header);
    CHECK(header == "x1,x2,y,fidelity");
    CHECK_FALSE(std::getline(in, rest));
  }
  CHECK(load_dataset(dir / "empty.csv").size() == 0);

  Matrix x(3, 2);
  x << 0.1, 1.0 / 3.0, -2.5e-7, 1e10, std::acos(-1.0), 0.0;
  LabelVector y(3);
  y << 1, 0, 1;
  const LabeledDataset d(x, y, {Fidelity::Low, Fidelity::High, Fidelity::High});
  save_dataset(d, dir / "d.csv");
  const auto back = load_dataset(dir / "d.csv");
  CHECK(back == d);
  CHECK(back.inputs() == d.inputs());

  std::ofstream(dir / "label2.csv") << "x1,y,fidelity\n0.5,2,L\n";
  CHECK_THROWS_AS(load_dataset(dir / "label2.csv"), SchemaError);
  std::ofstream(dir / "tag.csv") << "x1,y,fidelity\n0.5,1,M\n";
  CHECK_THROWS_AS(load_dataset(dir / "tag.csv"), SchemaError);
  std::ofstream(dir / "short.csv") << "x1,y,fidelity\n0.5,1,L\n0.5,1\n";
  try {
    load_dataset(dir / "short.csv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}
