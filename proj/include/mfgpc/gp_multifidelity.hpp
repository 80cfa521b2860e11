#ifndef MFGPC_GP_MULTIFIDELITY_HPP
#define MFGPC_GP_MULTIFIDELITY_HPP

#include "mfgpc/dataset.hpp"
#include "mfgpc/gp_dense.hpp"
#include "mfgpc/kernels.hpp"

namespace mfgpc {

/// Two-level autoregressive prior f_H = rho * f_L + delta with independent
/// GPs on f_L (kernel `low`) and delta (kernel `high`).
struct MultiFidelityParams {
  KernelParams low;
  KernelParams high;
  double rho = 1.0;

  void validate() const {
    low.validate();
    high.validate();
    if (!std::isfinite(rho)) throw DomainError("rho must be finite");
  }
};

/// Joint prior covariance of [f_L; f_H] at the training inputs, LOW rows first.
struct BlockCovariance {
  Matrix k;
  Index n_low = 0;

  Index n_high() const { return k.rows() - n_low; }
  auto low_low() const { return k.topLeftCorner(n_low, n_low); }
  auto low_high() const { return k.topRightCorner(n_low, n_high()); }
  auto high_high() const { return k.bottomRightCorner(n_high(), n_high()); }
};

/// Covariance between latent values of level `level_a` at the rows of `xa`
/// and of level `level_b` at the rows of `xb`:
///   (L,L): k_L;  (L,H), (H,L): rho k_L;  (H,H): rho^2 k_L + k_H.
Matrix level_covariance(const Matrix& xa, Fidelity level_a, const Matrix& xb, Fidelity level_b,
                        const MultiFidelityParams& params);

BlockCovariance assemble_joint(const Matrix& x_low, const Matrix& x_high, const MultiFidelityParams& params);

/// Covariance between f_target(query) and the stacked training latents [f_L(X_L); f_H(X_H)].
Matrix cross_covariance(const Matrix& query_x, const Matrix& x_low, const Matrix& x_high,
                        const MultiFidelityParams& params, Fidelity target);

/// Prior variance of f_target at a point (constant for a stationary kernel).
double prior_variance(const MultiFidelityParams& params, Fidelity target);

/// Conditions the joint prior on latents `f` (length N_L + N_H, LOW first)
/// and returns marginals of f_H at `query_x`.
PredictiveGaussian predict_high(const LabeledDataset& dataset, const Vector& f, const MultiFidelityParams& params,
                                const Matrix& query_x, const JitterPolicy& jitter = {});

/// Same as predict_high for either level.
PredictiveGaussian predict_level(const LabeledDataset& dataset, const Vector& f, const MultiFidelityParams& params,
                                 const Matrix& query_x, Fidelity target, const JitterPolicy& jitter = {});

}  // namespace mfgpc

#endif  // MFGPC_GP_MULTIFIDELITY_HPP
