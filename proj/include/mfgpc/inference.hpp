#ifndef MFGPC_INFERENCE_HPP
#define MFGPC_INFERENCE_HPP

#include <cstdint>

#include "mfgpc/model.hpp"
#include "mfgpc/sampler.hpp"
#include "mfgpc/trace.hpp"

namespace mfgpc {

/// Samples the model posterior and returns draws as trace records
/// (constrained hyperparameters, whitened latents) with diagnostics.
PosteriorTrace hmc_sample(const GpClassifier& model, const SamplerConfig& config);

struct PredictionConfig {
  std::uint64_t seed = 0;
  /// Use every `thin`-th draw of the trace.
  int thin = 1;
  /// Fraction of failed draws above which prediction aborts.
  double max_failed_fraction = 0.05;
};

/// Posterior-predictive summary at the query points. For each retained draw
/// one latent value f* is drawn from the conditional Gaussian and squashed;
/// `probability` averages sigmoid(f*) over draws.
struct ClassProbability {
  Vector probability;
  /// Sample mean and variance of the f* realizations.
  Vector latent_mean;
  Vector latent_variance;
  int n_draws_used = 0;
  int n_draws_failed = 0;

  /// Hard labels: 1 where probability > 0.5.
  LabelVector labels() const;
};

ClassProbability predict_class_probability(const PosteriorTrace& trace, const GpClassifier& model,
                                           const Matrix& query, const PredictionConfig& config = {});

}  // namespace mfgpc

#endif  // MFGPC_INFERENCE_HPP
