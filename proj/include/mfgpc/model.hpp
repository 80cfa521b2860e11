#ifndef MFGPC_MODEL_HPP
#define MFGPC_MODEL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mfgpc/covariance.hpp"
#include "mfgpc/dataset.hpp"
#include "mfgpc/gp_dense.hpp"
#include "mfgpc/gp_sparse.hpp"
#include "mfgpc/sampler.hpp"

namespace mfgpc {

enum class ClassifierKind { SingleFidelity, MultiFidelity, SparseMultiFidelity };

/// "sf", "mf", "sparse-mf".
std::string to_string(ClassifierKind kind);
ClassifierKind parse_classifier_kind(const std::string& s);

struct ModelConfig {
  ClassifierKind kind = ClassifierKind::MultiFidelity;
  /// 1 for a lengthscale shared by all input dimensions, otherwise one per dimension.
  Index n_lengthscales = 1;
  PriorSpec prior;
  JitterPolicy jitter;
  double sparse_sigma = 0.1;
  /// Number of LOW-level inducing points (capped at the LOW sample count).
  Index n_low_inducing = 30;
  std::uint64_t kmeans_seed = 0;
};

/// GP classifier with Bernoulli-logistic likelihood in whitened
/// parameterization. The unconstrained state is [hyperparameters, latents]:
///   dense:  latents z with f = L z, L = chol(K + jitter)
///   sparse: latents [z_u, z_f] with f = A^T z_u + sqrt(Lambda) z_f,
///           A = L_uu^-1 K_uf and Lambda the FITC diagonal plus sigma^2.
/// The single-fidelity kind ignores the fidelity tags and uses every row.
class GpClassifier : public LogDensity {
 public:
  GpClassifier(LabeledDataset data, ModelConfig config);

  ClassifierKind kind() const { return config_.kind; }
  const ModelConfig& config() const { return config_; }
  const LabeledDataset& dataset() const { return data_; }
  const TaggedPoints& training_points() const { return x_; }
  const TaggedPoints& inducing_points() const { return xu_; }

  bool multi_fidelity() const { return config_.kind != ClassifierKind::SingleFidelity; }
  bool sparse() const { return config_.kind == ClassifierKind::SparseMultiFidelity; }
  Index n_hyper() const;
  Index n_latent() const;
  Index dim() const override { return n_hyper() + n_latent(); }
  std::vector<std::string> parameter_names() const;

  /// Unnormalized log posterior over the unconstrained state (log Jacobian
  /// of the exp transforms included). Returns -infinity when the state is
  /// rejected; `grad` is filled otherwise.
  double log_density(const Vector& q, Vector& grad) const override;
  double log_posterior(const Vector& q) const;

  Vector initial_point(std::mt19937_64& rng) const override;

  /// Trace record: constrained hyperparameters followed by the latents.
  Vector to_record(const Vector& q) const;
  Vector from_record(const Vector& record) const;

  /// Latent values at the training inputs for a trace record.
  Vector training_latents(const Vector& record) const;
  /// Predictive marginals of the target latent (HIGH for multi-fidelity
  /// kinds) at `query` given one trace record.
  PredictiveGaussian predict_latent(const Vector& record, const Matrix& query) const;

 private:
  /// Squared coordinate differences and level codes of a fixed point pair
  /// set, so covariance blocks and their gradients become array expressions.
  struct PairGeometry {
    std::vector<Matrix> d2;  // one per lengthscale (summed when shared)
    Matrix one_high;         // 1 where exactly one endpoint is HIGH
    Matrix both_high;        // 1 where both are
    bool any_high = false;
  };
  PairGeometry make_geometry(const TaggedPoints& a, const TaggedPoints& b) const;
  Matrix covariance(const CovarianceStructure& cov, const PairGeometry& g) const;
  void accumulate(const CovarianceStructure& cov, const PairGeometry& g, const Matrix& kbar,
                  Eigen::Ref<Vector> grad) const;
  CovarianceStructure decode_record(const Vector& record) const;

  LabeledDataset data_;
  ModelConfig config_;
  TaggedPoints x_;
  TaggedPoints xu_;
  Vector y_;
  PairGeometry g_ff_, g_uu_, g_uf_;
};

}  // namespace mfgpc

#endif  // MFGPC_MODEL_HPP
