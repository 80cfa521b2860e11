#include "mfgpc/gp_multifidelity.hpp"

namespace mfgpc {

Matrix level_covariance(const Matrix& xa, Fidelity level_a, const Matrix& xb, Fidelity level_b,
                        const MultiFidelityParams& params) {
  if (xa.rows() > 0 && xb.rows() > 0 && xa.cols() != xb.cols()) {
    throw DimensionError("level_covariance: feature dimensions differ");
  }
  if (xa.rows() == 0 || xb.rows() == 0) return Matrix(xa.rows(), xb.rows());
  const int n_high = (level_a == Fidelity::High) + (level_b == Fidelity::High);
  Matrix k = gram_matrix(xa, xb, params.low);
  if (n_high == 1) {
    k *= params.rho;
  } else if (n_high == 2) {
    k *= params.rho * params.rho;
    k += gram_matrix(xa, xb, params.high);
  }
  return k;
}

BlockCovariance assemble_joint(const Matrix& x_low, const Matrix& x_high, const MultiFidelityParams& params) {
  params.validate();
  const Index nl = x_low.rows(), nh = x_high.rows();
  BlockCovariance out;
  out.n_low = nl;
  out.k.resize(nl + nh, nl + nh);
  if (nl > 0) out.k.topLeftCorner(nl, nl) = level_covariance(x_low, Fidelity::Low, x_low, Fidelity::Low, params);
  if (nh > 0) {
    out.k.bottomRightCorner(nh, nh) = level_covariance(x_high, Fidelity::High, x_high, Fidelity::High, params);
  }
  if (nl > 0 && nh > 0) {
    out.k.topRightCorner(nl, nh) = level_covariance(x_low, Fidelity::Low, x_high, Fidelity::High, params);
    out.k.bottomLeftCorner(nh, nl) = out.k.topRightCorner(nl, nh).transpose();
  }
  return out;
}

Matrix cross_covariance(const Matrix& query_x, const Matrix& x_low, const Matrix& x_high,
                        const MultiFidelityParams& params, Fidelity target) {
  params.validate();
  const Index nl = x_low.rows(), nh = x_high.rows();
  Matrix out(query_x.rows(), nl + nh);
  if (nl > 0) out.leftCols(nl) = level_covariance(query_x, target, x_low, Fidelity::Low, params);
  if (nh > 0) out.rightCols(nh) = level_covariance(query_x, target, x_high, Fidelity::High, params);
  return out;
}

double prior_variance(const MultiFidelityParams& params, Fidelity target) {
  return target == Fidelity::Low ? params.low.eta : params.rho * params.rho * params.low.eta + params.high.eta;
}

PredictiveGaussian predict_level(const LabeledDataset& dataset, const Vector& f, const MultiFidelityParams& params,
                                 const Matrix& query_x, Fidelity target, const JitterPolicy& jitter) {
  if (f.size() != dataset.size()) throw DimensionError("predict: latent length != N_L + N_H");
  const Matrix xl = dataset.low_inputs(), xh = dataset.high_inputs();
  const auto joint = assemble_joint(xl, xh, params);
  const auto chol = jittered_cholesky(joint.k, jitter);
  const Matrix cross = cross_covariance(query_x, xl, xh, params, target);
  return condition_on(chol.lower, f, cross, Vector::Constant(query_x.rows(), prior_variance(params, target)));
}

PredictiveGaussian predict_high(const LabeledDataset& dataset, const Vector& f, const MultiFidelityParams& params,
                                const Matrix& query_x, const JitterPolicy& jitter) {
  return predict_level(dataset, f, params, query_x, Fidelity::High, jitter);
}

}  // namespace mfgpc
