#include "mfgpc/kernels.hpp"

#include <cmath>
#include <numbers>

namespace mfgpc {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double log_half_normal(double x, double sigma) {
  if (!(x >= 0.0) || !std::isfinite(x)) return kNegInf;
  return std::log(2.0) - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * (x / sigma) * (x / sigma);
}

double log_gamma_density(double x, double alpha, double beta) {
  if (!(x > 0.0) || !std::isfinite(x)) return kNegInf;
  return alpha * std::log(beta) - std::lgamma(alpha) + (alpha - 1.0) * std::log(x) - beta * x;
}

double log_normal_density(double x, double mu, double sigma) {
  if (!std::isfinite(x)) return kNegInf;
  const double z = (x - mu) / sigma;
  return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double log_prior(const KernelParams& params, std::optional<double> rho, const PriorSpec& spec) {
  double lp = log_half_normal(params.eta, spec.eta_sigma);
  for (Index m = 0; m < params.lengthscales.size(); ++m) {
    lp += log_gamma_density(params.lengthscales[m], spec.gamma_alpha, spec.gamma_beta);
  }
  if (rho) lp += log_normal_density(*rho, 0.0, spec.rho_sigma);
  return std::isnan(lp) ? kNegInf : lp;
}

std::optional<JitteredCholesky> try_jittered_cholesky(const Matrix& k, const JitterPolicy& policy) {
  if (k.rows() != k.cols()) throw DimensionError("cholesky: matrix is not square");
  const Index n = k.rows();
  if (n == 0) return JitteredCholesky{Matrix(0, 0), 0.0, 0.0};
  if (!(policy.initial > 0.0) || !(policy.max >= policy.initial)) {
    throw ConfigError("jitter policy needs 0 < initial <= max");
  }
  const double mean_diag = k.diagonal().mean();
  if (!std::isfinite(mean_diag) || mean_diag <= 0.0) return std::nullopt;
  Matrix work(n, n);
  for (double rel = policy.initial; rel <= policy.max * (1.0 + 1e-12); rel *= 2.0) {
    const double abs_jitter = rel * mean_diag;
    work = k;
    work.diagonal().array() += abs_jitter;
    Eigen::LLT<Eigen::Ref<Matrix>, Eigen::Lower> llt(work);
    if (llt.info() == Eigen::Success && work.diagonal().allFinite() && (work.diagonal().array() > 0.0).all()) {
      work.triangularView<Eigen::StrictlyUpper>().setZero();
      return JitteredCholesky{std::move(work), rel, abs_jitter};
    }
  }
  return std::nullopt;
}

JitteredCholesky jittered_cholesky(const Matrix& k, const JitterPolicy& policy) {
  auto result = try_jittered_cholesky(k, policy);
  if (!result) {
    throw FactorizationError("cholesky failed after jitter " + std::to_string(policy.max) + " * mean(diag)");
  }
  return std::move(*result);
}

}  // namespace mfgpc
