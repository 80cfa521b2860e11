#include <cmath>
#include <random>

#include "mfgpc/inference.hpp"

namespace mfgpc {

PosteriorTrace hmc_sample(const GpClassifier& model, const SamplerConfig& config) {
  const auto chains = run_chains(model, config);
  PosteriorTrace trace;
  trace.names = model.parameter_names();
  const Index per_chain = config.n_samples;
  trace.values.resize(per_chain * static_cast<Index>(chains.size()), model.dim());
  Index row = 0;
  for (const auto& c : chains) {
    for (Index d = 0; d < c.draws.rows(); ++d, ++row) {
      trace.values.row(row) = model.to_record(c.draws.row(d).transpose()).transpose();
      trace.chain.push_back(c.chain);
      trace.draw.push_back(static_cast<int>(d));
    }
    trace.stats.insert(trace.stats.end(), c.stats.begin(), c.stats.end());
  }
  compute_diagnostics(trace);
  return trace;
}

LabelVector ClassProbability::labels() const {
  return (probability.array() > 0.5).cast<int>();
}

ClassProbability predict_class_probability(const PosteriorTrace& trace, const GpClassifier& model,
                                           const Matrix& query, const PredictionConfig& config) {
  if (config.thin < 1) throw ConfigError("prediction: thin must be >= 1");
  if (trace.n_parameters() != model.dim()) {
    throw DimensionError("prediction: trace has " + std::to_string(trace.n_parameters()) +
                         " parameters, model expects " + std::to_string(model.dim()));
  }
  const Index nq = query.rows();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector prob_sum = Vector::Zero(nq);
  Vector mean_sum = Vector::Zero(nq);
  Vector second_sum = Vector::Zero(nq);
  ClassProbability out;
  int attempted = 0;
  for (Index r = 0; r < trace.n_draws(); r += config.thin) {
    ++attempted;
    PredictiveGaussian g;
    try {
      g = model.predict_latent(trace.values.row(r).transpose(), query);
    } catch (const FactorizationError&) {
      ++out.n_draws_failed;
      continue;
    } catch (const NumericalError&) {
      ++out.n_draws_failed;
      continue;
    } catch (const DomainError&) {
      ++out.n_draws_failed;
      continue;
    }
    for (Index q = 0; q < nq; ++q) {
      const double f = g.mean[q] + std::sqrt(g.variance[q]) * normal(rng);
      prob_sum[q] += sigmoid(f);
      mean_sum[q] += f;
      second_sum[q] += f * f;
    }
    ++out.n_draws_used;
  }
  if (attempted == 0) throw NumericalError("prediction: trace has no draws");
  if (static_cast<double>(out.n_draws_failed) > config.max_failed_fraction * attempted) {
    throw NumericalError("prediction: " + std::to_string(out.n_draws_failed) + " of " + std::to_string(attempted) +
                         " draws failed to condition");
  }
  const double k = static_cast<double>(out.n_draws_used);
  out.probability = prob_sum / k;
  out.latent_mean = mean_sum / k;
  const double denom = k > 1.0 ? k - 1.0 : 1.0;
  out.latent_variance = ((second_sum - k * out.latent_mean.cwiseProduct(out.latent_mean)) / denom).cwiseMax(0.0);
  return out;
}

}  // namespace mfgpc
