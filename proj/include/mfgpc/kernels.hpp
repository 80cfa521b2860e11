#ifndef MFGPC_KERNELS_HPP
#define MFGPC_KERNELS_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "mfgpc/types.hpp"

namespace mfgpc {

/// Amplitude and lengthscales of the ARD squared-exponential kernel
///
///   k(x, x') = eta * exp(-sum_m (x_m - x'_m)^2 / (2 ell_m^2)).
///
/// `lengthscales` has either one entry (shared by every feature) or one per
/// feature.
template <typename Scalar = double>
struct ArdSqExpParams {
  using VectorS = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Scalar eta = Scalar(1);
  VectorS lengthscales = VectorS::Ones(1);

  ArdSqExpParams() = default;
  ArdSqExpParams(Scalar eta_, VectorS lengthscales_) : eta(eta_), lengthscales(std::move(lengthscales_)) {}

  Index n_lengthscales() const { return lengthscales.size(); }

  bool in_domain() const {
    return std::isfinite(eta) && eta > Scalar(0) && lengthscales.size() > 0 &&
           (lengthscales.array() > Scalar(0)).all() && lengthscales.allFinite();
  }

  void validate() const {
    if (!(std::isfinite(eta) && eta > Scalar(0))) throw DomainError("kernel: eta must be > 0");
    if (lengthscales.size() == 0) throw DomainError("kernel: at least one lengthscale required");
    if (!((lengthscales.array() > Scalar(0)).all() && lengthscales.allFinite())) {
      throw DomainError("kernel: lengthscales must be > 0");
    }
  }

  /// Lengthscale that applies to feature `m`.
  Scalar lengthscale(Index m) const { return lengthscales.size() == 1 ? lengthscales[0] : lengthscales[m]; }

  void check_dim(Index dim) const {
    if (lengthscales.size() != 1 && lengthscales.size() != dim) {
      throw DimensionError("kernel: " + std::to_string(lengthscales.size()) +
                           " lengthscales for " + std::to_string(dim) + " features");
    }
  }
};

using KernelParams = ArdSqExpParams<double>;

/// Weighted squared distance sum_m (x_m - x'_m)^2 / ell_m^2 without bounds checks.
template <typename DerivedA, typename DerivedB, typename Scalar>
inline Scalar scaled_sq_dist(const Eigen::MatrixBase<DerivedA>& x, const Eigen::MatrixBase<DerivedB>& x2,
                             const ArdSqExpParams<Scalar>& p) {
  Scalar r2(0);
  for (Index m = 0; m < x.size(); ++m) {
    const Scalar d = (x[m] - x2[m]) / p.lengthscale(m);
    r2 += d * d;
  }
  return r2;
}

template <typename DerivedA, typename DerivedB, typename Scalar>
Scalar kernel_eval(const Eigen::MatrixBase<DerivedA>& x, const Eigen::MatrixBase<DerivedB>& x2,
                   const ArdSqExpParams<Scalar>& p) {
  p.validate();
  if (x.size() != x2.size()) throw DimensionError("kernel_eval: argument dimensions differ");
  p.check_dim(x.size());
  using std::exp;
  return p.eta * exp(Scalar(-0.5) * scaled_sq_dist(x, x2, p));
}

/// Kernel matrix between the rows of `x` and the rows of `x2`.
template <typename DerivedA, typename DerivedB, typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> gram_matrix(const Eigen::MatrixBase<DerivedA>& x,
                                                                  const Eigen::MatrixBase<DerivedB>& x2,
                                                                  const ArdSqExpParams<Scalar>& p) {
  p.validate();
  if (x.cols() != x2.cols()) throw DimensionError("gram_matrix: column counts differ");
  p.check_dim(x.cols());
  using std::exp;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_ell(x.cols());
  for (Index m = 0; m < x.cols(); ++m) inv_ell[m] = Scalar(1) / p.lengthscale(m);
  const auto xs = (x.array().rowwise() * inv_ell.transpose().array()).matrix().eval();
  const auto x2s = (x2.array().rowwise() * inv_ell.transpose().array()).matrix().eval();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> k(x.rows(), x2.rows());
  for (Index j = 0; j < x2.rows(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      k(i, j) = p.eta * exp(Scalar(-0.5) * (xs.row(i) - x2s.row(j)).squaredNorm());
    }
  }
  return k;
}

/// Hyper-prior constants. Gamma uses shape/rate.
struct PriorSpec {
  double eta_sigma = 5.0;
  double gamma_alpha = 2.0;
  double gamma_beta = 2.0;
  double rho_sigma = 10.0;
};

double log_half_normal(double x, double sigma);
/// Gamma(alpha, beta) with beta a rate: beta^alpha / Gamma(alpha) x^(alpha-1) e^(-beta x).
double log_gamma_density(double x, double alpha, double beta);
double log_normal_density(double x, double mu, double sigma);

/// Sum of the hyper-prior log densities; the rho term is included only when
/// `rho` is given. Out-of-support values give -infinity.
double log_prior(const KernelParams& params, std::optional<double> rho, const PriorSpec& spec);

/// Jitter ladder for Cholesky factorizations: add `initial * mean(diag)`,
/// doubling until `max * mean(diag)`.
struct JitterPolicy {
  double initial = 1e-8;
  double max = 1e-2;
};

/// Lower Cholesky factor of K + jitter * mean(diag K) * I.
struct JitteredCholesky {
  Matrix lower;
  /// Relative jitter that succeeded.
  double relative_jitter = 0.0;
  /// Absolute value added to the diagonal.
  double absolute_jitter = 0.0;
};

/// Throws FactorizationError when the largest jitter still fails.
JitteredCholesky jittered_cholesky(const Matrix& k, const JitterPolicy& policy = {});
/// Non-throwing variant for the sampler hot path.
std::optional<JitteredCholesky> try_jittered_cholesky(const Matrix& k, const JitterPolicy& policy = {});

}  // namespace mfgpc

#endif  // MFGPC_KERNELS_HPP
