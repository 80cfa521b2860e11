#include "mfgpc/active_learning.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>

#include "csv_util.hpp"

namespace mfgpc {

double acquisition_score(double mu_hat, double sigma_hat) {
  return std::abs(mu_hat) / std::max(sigma_hat, kSigmaFloor);
}

Selection select_next(const Vector& mu_hat, const Vector& var_hat) {
  if (mu_hat.size() == 0) throw DomainError("select_next: no candidates");
  if (mu_hat.size() != var_hat.size()) throw DimensionError("select_next: mean/variance length mismatch");
  Selection sel;
  sel.scores.reserve(static_cast<std::size_t>(mu_hat.size()));
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  for (Index i = 0; i < mu_hat.size(); ++i) {
    AcquisitionScore s;
    s.index = i;
    s.mu_hat = mu_hat[i];
    s.sigma_hat = std::sqrt(std::max(var_hat[i], 0.0));
    s.score = acquisition_score(s.mu_hat, s.sigma_hat);
    if (std::isfinite(s.score) && (!found || s.score < best)) {
      best = s.score;
      sel.index = i;
      found = true;
    }
    sel.scores.push_back(s);
  }
  if (!found) throw NumericalError("select_next: no candidate has a finite score");
  return sel;
}

Selection select_next(const PosteriorTrace& trace, const GpClassifier& model, const Matrix& candidates,
                      const PredictionConfig& prediction) {
  if (candidates.rows() == 0) throw DomainError("select_next: no candidates");
  const auto p = predict_class_probability(trace, model, candidates, prediction);
  return select_next(p.latent_mean, p.latent_variance);
}

double classification_error(const PosteriorTrace& trace, const GpClassifier& model, const Matrix& x,
                            const LabelVector& y, const PredictionConfig& prediction) {
  if (x.rows() != y.size()) throw DimensionError("test inputs and labels differ in length");
  if (x.rows() == 0) return std::numeric_limits<double>::quiet_NaN();
  const LabelVector pred = predict_class_probability(trace, model, x, prediction).labels();
  return 100.0 * static_cast<double>((pred.array() != y.array()).count()) / static_cast<double>(y.size());
}

std::vector<std::pair<Index, double>> CampaignLog::trajectory() const {
  std::vector<std::pair<Index, double>> t;
  for (const auto& r : rows) t.emplace_back(r.n_high, r.test_error);
  return t;
}

namespace {

bool has_row(const Matrix& m, const Vector& x) {
  for (Index i = 0; i < m.rows(); ++i) {
    if (m.row(i).transpose() == x) return true;
  }
  return false;
}

Matrix remove_row(const Matrix& m, Index r) {
  Matrix out(m.rows() - 1, m.cols());
  if (r > 0) out.topRows(r) = m.topRows(r);
  if (r < m.rows() - 1) out.bottomRows(m.rows() - 1 - r) = m.bottomRows(m.rows() - 1 - r);
  return out;
}

void write_log(const CampaignLog& log, Index dim, const std::filesystem::path& path, bool with_time) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write campaign log " + path.string());
  out << "iteration";
  for (Index d = 0; d < dim; ++d) out << ",x" << d + 1;
  out << ",y,score,n_high,test_error";
  if (with_time) out << ",wall_time";
  out << '\n';
  for (const auto& r : log.rows) {
    out << r.iteration;
    for (Index d = 0; d < dim; ++d) {
      out << ',' << (r.x.size() == dim ? detail::format_double(r.x[d]) : std::string("nan"));
    }
    out << ',' << r.y << ',' << detail::format_double(r.score) << ',' << r.n_high << ','
        << detail::format_double(r.test_error);
    if (with_time) out << ',' << detail::format_double(r.wall_time);
    out << '\n';
  }
  if (!out) throw Error("failed writing campaign log " + path.string());
}

}  // namespace

void save_campaign_log(const CampaignLog& log, Index dim, const std::filesystem::path& path) {
  write_log(log, dim, path, true);
}

void save_campaign_metrics(const CampaignLog& log, Index dim, const std::filesystem::path& path) {
  write_log(log, dim, path, false);
}

CampaignLog run_campaign(const LabeledDataset& initial, const CampaignConfig& config, const HighOracle& oracle) {
  if (config.iterations < 0) throw ConfigError("campaign: iterations must be >= 0");
  if (config.pool == PoolStrategy::FreshLhs && config.pool_size < 1) throw ConfigError("campaign: empty pool");
  if (config.pool == PoolStrategy::FixedGrid) {
    if (config.grid.rows() == 0) throw ConfigError("campaign: empty candidate grid");
    if (config.grid.cols() != initial.dim()) throw DimensionError("campaign: grid dimension mismatch");
  }
  if (!oracle) throw ConfigError("campaign: no oracle bound");
  const Index dim = initial.dim();
  const BoxDomain unit(Vector::Zero(dim), Vector::Ones(dim));
  using Clock = std::chrono::steady_clock;
  auto seconds_since = [](Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
  };

  CampaignLog log;
  LabeledDataset data = initial;
  Matrix grid = config.grid;
  {
    // Grid rows already labeled at HIGH level are never candidates.
    const Matrix xh = data.high_inputs();
    std::vector<Index> keep;
    for (Index i = 0; i < grid.rows(); ++i) {
      if (!has_row(xh, grid.row(i).transpose())) keep.push_back(i);
    }
    grid = Matrix(grid(keep, Eigen::all));
  }
  std::unique_ptr<GpClassifier> model;
  PosteriorTrace trace;

  auto prediction_for = [&](int it, std::uint64_t stream) {
    PredictionConfig p = config.prediction;
    p.seed = mix_seed(config.prediction.seed ^ config.seed, 4 * static_cast<std::uint64_t>(it) + stream);
    return p;
  };
  auto fit = [&](int it) {
    const bool sf = config.model.kind == ClassifierKind::SingleFidelity;
    model = std::make_unique<GpClassifier>(sf ? data.high_only() : data, config.model);
    SamplerConfig sc = config.sampler;
    sc.seed = mix_seed(config.sampler.seed ^ config.seed, static_cast<std::uint64_t>(it));
    trace = hmc_sample(*model, sc);
    if (config.on_fit) config.on_fit(it, trace, *model);
  };
  auto test_error = [&](int it) {
    if (config.test_x.rows() == 0) return std::numeric_limits<double>::quiet_NaN();
    return classification_error(trace, *model, config.test_x, config.test_y, prediction_for(it, 1));
  };
  auto persist = [&]() {
    if (config.log_path) save_campaign_log(log, dim, *config.log_path);
  };

  {
    const auto t0 = Clock::now();
    fit(0);
    CampaignRow row;
    row.iteration = 0;
    row.score = std::numeric_limits<double>::quiet_NaN();
    row.n_high = data.n_high();
    row.test_error = test_error(0);
    row.wall_time = seconds_since(t0);
    log.rows.push_back(row);
    persist();
  }

  for (int it = 1; it <= config.iterations; ++it) {
    const auto t0 = Clock::now();
    Matrix candidates;
    if (config.pool == PoolStrategy::FreshLhs) {
      const Matrix lhs = latin_hypercube(unit, config.pool_size, mix_seed(config.seed, 1000 + it));
      const Matrix xh = data.high_inputs();
      std::vector<Index> keep;
      for (Index i = 0; i < lhs.rows(); ++i) {
        if (!has_row(xh, lhs.row(i).transpose())) keep.push_back(i);
      }
      candidates = lhs(keep, Eigen::all);
    } else {
      candidates = grid;
    }
    if (candidates.rows() == 0) {
      log.complete = false;
      log.failure = "candidate pool exhausted at iteration " + std::to_string(it);
      break;
    }
    const Selection sel = select_next(trace, *model, candidates, prediction_for(it, 0));
    const Vector x = candidates.row(sel.index).transpose();
    int y = -1;
    try {
      y = oracle(x);
      if (y != 0 && y != 1) throw SchemaError("oracle returned label " + std::to_string(y));
    } catch (const std::exception& e) {
      log.complete = false;
      log.failure = "oracle failed at iteration " + std::to_string(it) + ": " + e.what();
      break;
    }
    data = data.with_high(x, y);
    if (config.pool == PoolStrategy::FixedGrid) grid = remove_row(grid, sel.index);
    try {
      fit(it);
    } catch (const NumericalError& e) {
      log.complete = false;
      log.failure = "retraining failed at iteration " + std::to_string(it) + ": " + e.what();
      break;
    } catch (const FactorizationError& e) {
      log.complete = false;
      log.failure = "retraining failed at iteration " + std::to_string(it) + ": " + e.what();
      break;
    }
    CampaignRow row;
    row.iteration = it;
    row.x = x;
    row.y = y;
    row.score = sel.scores[static_cast<std::size_t>(sel.index)].score;
    row.n_high = data.n_high();
    row.test_error = test_error(it);
    row.wall_time = seconds_since(t0);
    log.rows.push_back(row);
    persist();
  }
  log.final_data = data;
  persist();
  return log;
}

}  // namespace mfgpc
