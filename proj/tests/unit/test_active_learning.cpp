#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <limits>
#include <random>
#include <numeric>
#include <set>

#include "helpers.hpp"
#include "mfgpc/active_learning.hpp"
#include "mfgpc/synthetic.hpp"

using namespace mfgpc;

namespace {

Selection pick(std::initializer_list<double> mu, std::initializer_list<double> var) {
  return select_next(Eigen::Map<const Vector>(mu.begin(), static_cast<Index>(mu.size())),
                     Eigen::Map<const Vector>(var.begin(), static_cast<Index>(var.size())));
}

CampaignConfig tiny_campaign(ClassifierKind kind, int iterations) {
  CampaignConfig c;
  c.iterations = iterations;
  c.pool_size = 60;
  c.seed = 17;
  c.model.kind = kind;
  c.model.n_low_inducing = 10;
  c.sampler.n_chains = 1;
  c.sampler.n_warmup = 40;
  c.sampler.n_samples = 20;
  c.sampler.max_tree_depth = 4;
  c.sampler.target_accept = 0.8;
  return c;
}

int sine_oracle(const Vector& x) { return synthetic::label_high(x); }

std::set<std::pair<double, double>> rows_of(const Matrix& x) {
  std::set<std::pair<double, double>> s;
  for (Index i = 0; i < x.rows(); ++i) s.insert({x(i, 0), x(i, 1)});
  return s;
}

}  // namespace

TEST_CASE("acquisition examples") {
  CHECK(pick({0.0, 0.5}, {1.0, 1.0}).index == 0);
  const auto s = pick({1.0, 0.5}, {100.0, 1.0});
  CHECK(s.index == 0);
  CHECK(s.scores[0].score == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(s.scores[1].score == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(pick({0.3, 0.3, 0.3}, {2.0, 2.0, 2.0}).index == 0);
  CHECK(pick({0.7, 0.3, 0.3}, {2.0, 2.0, 2.0}).index == 1);
  // Degenerate variance is floored instead of dividing by zero.
  CHECK(acquisition_score(1e-9, 0.0) == doctest::Approx(0.1));
  CHECK(acquisition_score(0.0, 0.0) == 0.0);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK(pick({nan, 0.4}, {1.0, 1.0}).index == 1);
  CHECK_THROWS_AS(pick({nan, nan}, {1.0, 1.0}), NumericalError);
  CHECK_THROWS_AS(select_next(Vector(0), Vector(0)), DomainError);
}

TEST_CASE("acquisition score properties") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const double mu = th::uniform(rng, 0.01, 5.0), sd = th::uniform(rng, 0.01, 5.0);
    CHECK(acquisition_score(mu, sd) >= 0.0);
    CHECK(acquisition_score(mu * 1.5, sd) > acquisition_score(mu, sd));
    CHECK(acquisition_score(-mu * 1.5, sd) > acquisition_score(-mu, sd));
    CHECK(acquisition_score(mu, sd * 1.5) < acquisition_score(mu, sd));

    // Shuffling the candidates keeps the minimum score.
    const Index n = 2 + static_cast<Index>(rng() % 30);
    Vector m = th::random_normal(rng, n), v = th::random_matrix(rng, n, 1, 0.1, 3.0);
    const auto a = select_next(m, v);
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Vector mp(n), vp(n);
    for (Index i = 0; i < n; ++i) {
      mp[i] = m[perm[static_cast<std::size_t>(i)]];
      vp[i] = v[perm[static_cast<std::size_t>(i)]];
    }
    const auto b = select_next(mp, vp);
    CHECK(b.scores[static_cast<std::size_t>(b.index)].score == a.scores[static_cast<std::size_t>(a.index)].score);
  }
}

TEST_CASE("campaign bookkeeping") {
  const auto high = synthetic::make_high_fidelity_seed(10, 3);
  const auto low = synthetic::make_low_fidelity_design(2);
  const auto mixed = LabeledDataset::from_levels(low.inputs(), low.labels(), high.inputs(), high.labels());

  SUBCASE("no iterations") {
    const auto log = run_campaign(high, tiny_campaign(ClassifierKind::SingleFidelity, 0), sine_oracle);
    CHECK(log.rows.size() == 1);
    CHECK(log.n_acquisitions() == 0);
    CHECK(log.complete);
    CHECK(log.final_data == high);
  }

  SUBCASE("24 acquisitions, HIGH only, no duplicates") {
    auto cfg = tiny_campaign(ClassifierKind::SingleFidelity, 24);
    const Matrix test_x = latin_hypercube(synthetic::unit_square(), 100, 5);
    cfg.test_x = test_x;
    cfg.test_y = synthetic::label_rows(synthetic::SineBoundarySpec::high(), test_x);
    int fits = 0;
    cfg.on_fit = [&](int it, const PosteriorTrace&, const GpClassifier& m) {
      CHECK(it == fits++);
      CHECK(m.dataset().n_low() == 0);
    };
    const auto log = run_campaign(high, cfg, sine_oracle);
    CHECK(log.complete);
    CHECK(fits == 25);
    CHECK(log.n_acquisitions() == 24);
    CHECK(log.final_data.n_high() == 34);
    CHECK(log.final_data.n_low() == 0);
    CHECK(rows_of(log.final_data.high_inputs()).size() == 34);
    for (std::size_t i = 0; i < log.rows.size(); ++i) {
      CHECK(log.rows[i].n_high == 10 + static_cast<Index>(i));
      CHECK(log.rows[i].test_error >= 0.0);
      CHECK(log.rows[i].test_error <= 100.0);
      if (i > 0) CHECK(log.rows[i].y == synthetic::label_high(log.rows[i].x));
    }
    CHECK(log.trajectory().size() == 25);
  }

  SUBCASE("multi-fidelity campaigns only append HIGH rows") {
    const auto log = run_campaign(mixed, tiny_campaign(ClassifierKind::MultiFidelity, 3), sine_oracle);
    CHECK(log.final_data.n_low() == mixed.n_low());
    CHECK(log.final_data.low_inputs() == mixed.low_inputs());
    CHECK(log.final_data.n_high() == 13);
  }

  SUBCASE("a fixed grid shrinks and is never re-acquired") {
    auto cfg = tiny_campaign(ClassifierKind::SingleFidelity, 6);
    cfg.pool = PoolStrategy::FixedGrid;
    Matrix grid(7, 2);
    grid << 0.1, 0.1, 0.3, 0.5, 0.5, 0.5, 0.7, 0.2, 0.9, 0.9, 0.4, 0.6, 0.2, 0.8;
    // One grid row is already a HIGH sample.
    grid.row(6) = high.high_inputs().row(0);
    cfg.grid = grid;
    const auto log = run_campaign(high, cfg, sine_oracle);
    CHECK(log.n_acquisitions() == 6);
    const auto acquired = rows_of(log.final_data.high_inputs().bottomRows(6));
    CHECK(acquired.size() == 6);
    CHECK(rows_of(grid.topRows(6)) == acquired);

    cfg.iterations = 8;
    const auto over = run_campaign(high, cfg, sine_oracle);
    CHECK_FALSE(over.complete);
    CHECK(over.n_acquisitions() == 6);
    CHECK(over.failure.find("exhausted") != std::string::npos);
  }

  SUBCASE("oracle failure halts with the partial log on disk") {
    const auto dir = th::temp_dir("campaign");
    auto cfg = tiny_campaign(ClassifierKind::SingleFidelity, 5);
    cfg.log_path = dir / "log.csv";
    int calls = 0;
    const auto log = run_campaign(high, cfg, [&](const Vector& x) {
      if (++calls == 3) throw NumericalError("simulator blew up");
      return synthetic::label_high(x);
    });
    CHECK_FALSE(log.complete);
    CHECK(log.n_acquisitions() == 2);
    CHECK(log.failure.find("simulator blew up") != std::string::npos);
    std::ifstream in(dir / "log.csv");
    std::string header, line;
    std::getline(in, header);
    CHECK(header == "iteration,x1,x2,y,score,n_high,test_error,wall_time");
    int rows = 0;
    while (std::getline(in, line)) rows += !line.empty();
    CHECK(rows == 3);

    save_campaign_metrics(log, 2, dir / "metrics.csv");
    std::ifstream m(dir / "metrics.csv");
    std::getline(m, header);
    CHECK(header == "iteration,x1,x2,y,score,n_high,test_error");
  }

  SUBCASE("campaigns are reproducible") {
    const auto a = run_campaign(high, tiny_campaign(ClassifierKind::SingleFidelity, 3), sine_oracle);
    const auto b = run_campaign(high, tiny_campaign(ClassifierKind::SingleFidelity, 3), sine_oracle);
    CHECK(a.final_data == b.final_data);
  }
}
