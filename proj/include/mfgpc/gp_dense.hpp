#ifndef MFGPC_GP_DENSE_HPP
#define MFGPC_GP_DENSE_HPP

#include <cmath>

#include "mfgpc/kernels.hpp"
#include "mfgpc/types.hpp"

namespace mfgpc {

/// Logistic sigmoid (1 + exp(-f))^-1, evaluated without overflow.
template <typename Scalar>
inline Scalar sigmoid(Scalar f) {
  using std::exp;
  if (f >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-f));
  const Scalar e = exp(f);
  return e / (Scalar(1) + e);
}

/// log sigmoid(f) = -log(1 + exp(-f)).
template <typename Scalar>
inline Scalar log_sigmoid(Scalar f) {
  using std::exp;
  using std::log1p;
  if (f >= Scalar(0)) return -log1p(exp(-f));
  return f - log1p(exp(f));
}

/// Bernoulli log likelihood sum_i y_i log s(f_i) + (1 - y_i) log(1 - s(f_i)).
double log_likelihood(const Vector& f, const LabelVector& y);
/// d log_likelihood / d f = y - sigmoid(f).
Vector log_likelihood_gradient(const Vector& f, const LabelVector& y);

/// Marginal mean and variance of the latent function at query points.
struct PredictiveGaussian {
  Vector mean;
  Vector variance;
};

/// Latent values at the training inputs together with their whitened
/// coordinates z (f = L z, L the Cholesky factor of the training covariance).
struct LatentState {
  Vector f;
  Vector whitened;

  static LatentState from_whitened(const Matrix& lower, Vector z);
  static LatentState from_latent(const Matrix& lower, Vector f);
  bool consistent(const Matrix& lower, double rel_tol = 1e-10) const;
};

/// Conditions a zero-mean GP with kernel `params` on latent values `train_f`
/// at `train_x`, returning marginals at `query_x`.
PredictiveGaussian condition(const Matrix& train_x, const Vector& train_f, const KernelParams& params,
                             const Matrix& query_x, const JitterPolicy& jitter = {});

/// Generic conditioning from precomputed pieces: training factor L, the
/// query/training cross covariance (Q x N) and prior variances at the queries.
PredictiveGaussian condition_on(const Matrix& train_lower, const Vector& train_f, const Matrix& cross_cov,
                                const Vector& prior_var);

/// Full predictive covariance; used by tests and diagnostics.
struct PredictiveGaussianFull {
  Vector mean;
  Matrix covariance;
};
PredictiveGaussianFull condition_full(const Matrix& train_x, const Vector& train_f, const KernelParams& params,
                                      const Matrix& query_x, const JitterPolicy& jitter = {});

}  // namespace mfgpc

#endif  // MFGPC_GP_DENSE_HPP
