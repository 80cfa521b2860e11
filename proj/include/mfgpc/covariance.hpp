#ifndef MFGPC_COVARIANCE_HPP
#define MFGPC_COVARIANCE_HPP

#include <string>
#include <vector>

#include "mfgpc/gp_multifidelity.hpp"
#include "mfgpc/kernels.hpp"

namespace mfgpc {

/// Input rows tagged by level: rows [0, n_low) are LOW, the rest HIGH.
struct TaggedPoints {
  Matrix x;
  Index n_low = 0;

  static TaggedPoints all_low(Matrix x) {
    const Index n = x.rows();
    return TaggedPoints{std::move(x), n};
  }
  static TaggedPoints all_high(Matrix x) { return TaggedPoints{std::move(x), 0}; }
  static TaggedPoints of_level(Matrix x, Fidelity level) {
    return level == Fidelity::Low ? all_low(std::move(x)) : all_high(std::move(x));
  }
  static TaggedPoints stacked(const Matrix& x_low, const Matrix& x_high);

  Index size() const { return x.rows(); }
  Index n_high() const { return x.rows() - n_low; }
  Fidelity level(Index i) const { return i < n_low ? Fidelity::Low : Fidelity::High; }
};

/// Either a single ARD kernel (every tag ignored) or the two-level
/// autoregressive structure. Hyperparameters have an unconstrained layout
/// used by the sampler:
///   single: [log eta, log ell_1..M]
///   multi:  [log eta_L, log ell_L.., log eta_H, log ell_H.., rho]
class CovarianceStructure {
 public:
  CovarianceStructure() = default;
  static CovarianceStructure single(KernelParams params);
  static CovarianceStructure multi(MultiFidelityParams params);

  /// Decodes an unconstrained hyperparameter vector. Returns false when the
  /// decoded values are not finite.
  static bool decode(bool multi_fidelity, Index n_lengthscales, const Eigen::Ref<const Vector>& unconstrained,
                     CovarianceStructure& out);
  static Index n_hyper(bool multi_fidelity, Index n_lengthscales) {
    return multi_fidelity ? 2 * (1 + n_lengthscales) + 1 : 1 + n_lengthscales;
  }
  static std::vector<std::string> hyper_names(bool multi_fidelity, Index n_lengthscales);

  bool multi_fidelity() const { return multi_; }
  const MultiFidelityParams& params() const { return p_; }
  const KernelParams& kernel() const { return p_.low; }
  Index n_lengthscales() const { return p_.low.n_lengthscales(); }
  Index n_hyper() const { return n_hyper(multi_, n_lengthscales()); }

  Vector unconstrained() const;
  /// Constrained values in the same order as the unconstrained layout.
  Vector constrained() const;
  static bool from_constrained(bool multi_fidelity, Index n_lengthscales, const Eigen::Ref<const Vector>& values,
                               CovarianceStructure& out);

  Matrix operator()(const TaggedPoints& a, const TaggedPoints& b) const;
  Vector diag(const TaggedPoints& a) const;
  double prior_variance(Fidelity level) const;

  /// Hyper-prior log density of the constrained parameters plus the log
  /// Jacobian of the exp transforms, with its gradient wrt the unconstrained
  /// layout added into `grad`.
  double log_prior_unconstrained(const PriorSpec& spec, Eigen::Ref<Vector> grad) const;

  /// grad += d/dtheta sum_ij kbar_ij K(a, b)_ij.
  void accumulate_gradient(const TaggedPoints& a, const TaggedPoints& b, const Matrix& kbar,
                           Eigen::Ref<Vector> grad) const;
  /// grad += d/dtheta sum_i dbar_i K(a_i, a_i).
  void accumulate_diag_gradient(const TaggedPoints& a, const Vector& dbar, Eigen::Ref<Vector> grad) const;

 private:
  CovarianceStructure(MultiFidelityParams p, bool multi) : p_(std::move(p)), multi_(multi) {}

  MultiFidelityParams p_;
  bool multi_ = false;
};

/// Reverse-mode derivative of the Cholesky factorization: given dL (lower
/// triangular adjoint of L = chol(K)), returns the adjoint of K (not
/// symmetrized).
Matrix cholesky_adjoint(const Matrix& lower, const Matrix& lower_bar);

}  // namespace mfgpc

#endif  // MFGPC_COVARIANCE_HPP
