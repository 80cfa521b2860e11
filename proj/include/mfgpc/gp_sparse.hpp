#ifndef MFGPC_GP_SPARSE_HPP
#define MFGPC_GP_SPARSE_HPP

#include <cstdint>
#include <vector>

#include "mfgpc/covariance.hpp"
#include "mfgpc/dataset.hpp"
#include "mfgpc/gp_dense.hpp"

namespace mfgpc {

/// Constant diagonal nugget sigma of the sparse prior.
struct SparseNugget {
  double sigma = 0.1;
};

struct KMeansResult {
  Matrix centroids;
  std::vector<Index> assignment;
  /// Within-cluster sum of squares after initialization and after each Lloyd step.
  std::vector<double> objective;
  int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding.
KMeansResult kmeans(const Matrix& x, Index k, std::uint64_t seed, int max_iter = 300, double tol = 1e-9);

/// Centroids of `kmeans` used as LOW-level inducing inputs.
Matrix kmeans_inducing(const Matrix& x_low, Index m_low, std::uint64_t seed);

/// Inducing inputs; rows [0, n_low) belong to the LOW level. In multi-fidelity
/// use the HIGH rows coincide with the HIGH training inputs.
struct InducingSet {
  TaggedPoints points;
  Index size() const { return points.size(); }
};

/// f ~ N(mean_map u, diag(diag)) with mean_map = K_fu K_uu^-1 and
/// diag = diag(K_ff - Q_ff) + sigma^2.
struct SparsePrior {
  Matrix mean_map;
  Vector diag;
};

SparsePrior sparse_prior_cov(const CovarianceStructure& cov, const TaggedPoints& x, const TaggedPoints& xu,
                             double sigma, const JitterPolicy& jitter = {});
SparsePrior sparse_prior_cov(const Matrix& x, const Matrix& xu, const KernelParams& params, double sigma,
                             const JitterPolicy& jitter = {});

/// Sparse predictive marginals at `query` given training latents f:
///   mean = K_*u Phi K_uf Lambda^-1 f
///   var  = K_** - Q_** + K_*u Phi K_u*
/// with Phi = (K_uu + K_uf Lambda^-1 K_fu)^-1.
PredictiveGaussian sparse_predict(const CovarianceStructure& cov, const TaggedPoints& query, const TaggedPoints& x,
                                  const TaggedPoints& xu, const Vector& f, double sigma,
                                  const JitterPolicy& jitter = {});
PredictiveGaussian sparse_predict(const Matrix& query, const Matrix& x, const Matrix& xu, const Vector& f,
                                  const KernelParams& params, double sigma, const JitterPolicy& jitter = {});

/// Sparse multi-fidelity model: every covariance evaluation follows the
/// block rule of the autoregressive prior.
class SparseMfModel {
 public:
  SparseMfModel(const LabeledDataset& dataset, InducingSet inducing, const MultiFidelityParams& params,
                SparseNugget nugget, JitterPolicy jitter = {});

  const CovarianceStructure& covariance() const { return cov_; }
  const TaggedPoints& training() const { return x_; }
  const InducingSet& inducing() const { return xu_; }
  double sigma() const { return sigma_; }

  SparsePrior prior() const;
  PredictiveGaussian predict(const Matrix& query, const Vector& f, Fidelity target = Fidelity::High) const;

 private:
  CovarianceStructure cov_;
  TaggedPoints x_;
  InducingSet xu_;
  double sigma_;
  JitterPolicy jitter_;
};

/// Inducing set for multi-fidelity data: k-means centroids of X_L plus X_H.
InducingSet make_mf_inducing(const LabeledDataset& dataset, Index m_low, std::uint64_t seed);

/// Validates that the HIGH inducing rows equal X_H and builds the model.
SparseMfModel assemble_mf_sparse(const LabeledDataset& dataset, const InducingSet& inducing,
                                 const MultiFidelityParams& params, SparseNugget nugget,
                                 const JitterPolicy& jitter = {});

}  // namespace mfgpc

#endif  // MFGPC_GP_SPARSE_HPP
