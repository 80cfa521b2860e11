#include "mfgpc/gp_dense.hpp"

namespace mfgpc {

double log_likelihood(const Vector& f, const LabelVector& y) {
  if (f.size() != y.size()) throw DimensionError("log_likelihood: f and y lengths differ");
  double ll = 0.0;
  for (Index i = 0; i < f.size(); ++i) ll += y[i] == 1 ? log_sigmoid(f[i]) : log_sigmoid(-f[i]);
  return ll;
}

Vector log_likelihood_gradient(const Vector& f, const LabelVector& y) {
  if (f.size() != y.size()) throw DimensionError("log_likelihood_gradient: f and y lengths differ");
  Vector g(f.size());
  for (Index i = 0; i < f.size(); ++i) g[i] = static_cast<double>(y[i]) - sigmoid(f[i]);
  return g;
}

LatentState LatentState::from_whitened(const Matrix& lower, Vector z) {
  Vector f = lower.triangularView<Eigen::Lower>() * z;
  return LatentState{std::move(f), std::move(z)};
}

LatentState LatentState::from_latent(const Matrix& lower, Vector f) {
  Vector z = lower.triangularView<Eigen::Lower>().solve(f);
  return LatentState{std::move(f), std::move(z)};
}

bool LatentState::consistent(const Matrix& lower, double rel_tol) const {
  if (f.size() != whitened.size() || f.size() != lower.rows()) return false;
  const Vector lz = lower.triangularView<Eigen::Lower>() * whitened;
  return (f - lz).norm() <= rel_tol * std::max(f.norm(), 1e-300);
}

PredictiveGaussian condition_on(const Matrix& train_lower, const Vector& train_f, const Matrix& cross_cov,
                                const Vector& prior_var) {
  if (cross_cov.cols() != train_lower.rows() || train_f.size() != train_lower.rows()) {
    throw DimensionError("condition: training sizes disagree");
  }
  if (prior_var.size() != cross_cov.rows()) throw DimensionError("condition: query sizes disagree");
  const auto tri = train_lower.triangularView<Eigen::Lower>();
  // v = L^-1 K_xq, alpha = K^-1 f
  const Matrix v = tri.solve(cross_cov.transpose());
  const Vector alpha = tri.transpose().solve(tri.solve(train_f));
  PredictiveGaussian out;
  out.mean = cross_cov * alpha;
  out.variance = prior_var - v.colwise().squaredNorm().transpose();
  for (Index q = 0; q < out.variance.size(); ++q) {
    if (out.variance[q] < -1e-10 * std::max(1.0, prior_var[q])) {
      throw NumericalError("condition: negative predictive variance " + std::to_string(out.variance[q]));
    }
    out.variance[q] = std::max(out.variance[q], 0.0);
  }
  return out;
}

PredictiveGaussian condition(const Matrix& train_x, const Vector& train_f, const KernelParams& params,
                             const Matrix& query_x, const JitterPolicy& jitter) {
  if (train_x.rows() != train_f.size()) throw DimensionError("condition: train_x rows != train_f length");
  const auto chol = jittered_cholesky(gram_matrix(train_x, train_x, params), jitter);
  const Matrix kqx = gram_matrix(query_x, train_x, params);
  return condition_on(chol.lower, train_f, kqx, Vector::Constant(query_x.rows(), params.eta));
}

PredictiveGaussianFull condition_full(const Matrix& train_x, const Vector& train_f, const KernelParams& params,
                                      const Matrix& query_x, const JitterPolicy& jitter) {
  const auto chol = jittered_cholesky(gram_matrix(train_x, train_x, params), jitter);
  const auto tri = chol.lower.triangularView<Eigen::Lower>();
  const Matrix kqx = gram_matrix(query_x, train_x, params);
  const Matrix v = tri.solve(kqx.transpose());
  PredictiveGaussianFull out;
  out.mean = kqx * tri.transpose().solve(tri.solve(train_f));
  out.covariance = gram_matrix(query_x, query_x, params) - v.transpose() * v;
  return out;
}

}  // namespace mfgpc
