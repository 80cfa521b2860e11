#ifndef MFGPC_TEST_HELPERS_HPP
#define MFGPC_TEST_HELPERS_HPP

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <type_traits>

#include <Eigen/Dense>

#include "mfgpc/gp_multifidelity.hpp"
#include "mfgpc/model.hpp"
#include "mfgpc/sampler.hpp"
#include "mfgpc/types.hpp"

namespace th {

using mfgpc::Index;
using mfgpc::Matrix;
using mfgpc::Vector;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols, double lo = 0.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = uniform(rng, lo, hi);
  }
  return m;
}

inline Vector random_normal(std::mt19937_64& rng, Index n) {
  std::normal_distribution<double> g;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

template <class T>
using MatrixT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using VectorT = Eigen::Matrix<T, Eigen::Dynamic, 1>;

/// Squared-exponential gram matrix written out entry by entry, evaluated in T.
template <class T = double>
MatrixT<T> se(const Matrix& a, const Matrix& b, double eta, const Vector& ell) {
  MatrixT<T> k(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < b.rows(); ++j) {
      T s = 0;
      for (Index m = 0; m < a.cols(); ++m) {
        const T l = ell.size() == 1 ? ell[0] : ell[m];
        const T d = T(a(i, m)) - T(b(j, m));
        s += d * d / (l * l);
      }
      k(i, j) = T(eta) * std::exp(-s / 2);
    }
  }
  return k;
}

/// The library adds 1e-8 * mean(diag) before factorizing; oracles invert the same matrix.
template <class M>
typename M::PlainObject jittered(const Eigen::MatrixBase<M>& k) {
  using T = typename M::Scalar;
  typename M::PlainObject out = k;
  out.diagonal().array() += T(1e-8) * out.diagonal().mean();
  return out;
}

template <class M>
typename M::PlainObject inverse(const Eigen::MatrixBase<M>& a) {
  return typename M::PlainObject(a).fullPivLu().inverse();
}

/// max |a - b| / max(1, |b|)
inline double rel_err(const Matrix& a, const Matrix& b) {
  return ((a - b).array().abs() / b.array().abs().max(1.0)).maxCoeff();
}

template <class T = double>
struct Brute {
  VectorT<T> mean;
  VectorT<T> var;
  MatrixT<T> mean_map;
  VectorT<T> diag;
};

// Inducing-point prior and predictive moments from explicit inverses. `kff_diag`
// etc. are full matrices so the same oracle serves single and two-level models.
template <class T = double>
Brute<T> sparse_brute(const std::type_identity_t<MatrixT<T>>& kuu_raw, const std::type_identity_t<MatrixT<T>>& kuf,
                      const std::type_identity_t<VectorT<T>>& kff_diag, const std::type_identity_t<MatrixT<T>>& kqu,
                      const std::type_identity_t<VectorT<T>>& kqq_diag, const std::type_identity_t<VectorT<T>>& f,
                      double sigma) {
  const MatrixT<T> kuu = jittered(kuu_raw);
  const MatrixT<T> kuu_inv = inverse(kuu);
  Brute<T> b;
  b.mean_map = kuf.transpose() * kuu_inv;
  b.diag = kff_diag - (kuf.transpose() * kuu_inv * kuf).diagonal();
  b.diag.array() += T(sigma) * T(sigma);
  const MatrixT<T> lam_inv = b.diag.cwiseInverse().asDiagonal();
  const MatrixT<T> phi = inverse(jittered(kuu + kuf * lam_inv * kuf.transpose()));
  b.mean = kqu * phi * kuf * lam_inv * f;
  b.var = kqq_diag - (kqu * kuu_inv * kqu.transpose()).diagonal() + (kqu * phi * kqu.transpose()).diagonal();
  return b;
}

// Joint covariance written entry by entry from the autoregressive rule.
template <class T = double>
MatrixT<T> block_oracle(const Matrix& xl, const Matrix& xh, const mfgpc::MultiFidelityParams& p) {
  const Index nl = xl.rows(), nh = xh.rows();
  Matrix x(nl + nh, xl.cols());
  x << xl, xh;
  const MatrixT<T> kl = se<T>(x, x, p.low.eta, p.low.lengthscales);
  const MatrixT<T> kh = se<T>(x, x, p.high.eta, p.high.lengthscales);
  const T rho = p.rho;
  MatrixT<T> k(nl + nh, nl + nh);
  for (Index i = 0; i < nl + nh; ++i) {
    for (Index j = 0; j < nl + nh; ++j) {
      const int highs = (i >= nl) + (j >= nl);
      k(i, j) = highs == 0 ? kl(i, j) : highs == 1 ? rho * kl(i, j) : rho * rho * kl(i, j) + kh(i, j);
    }
  }
  return k;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("mfgpc_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// Zero-mean Gaussian log density with covariance `cov`, for sampler checks.
class GaussianTarget : public mfgpc::LogDensity {
 public:
  explicit GaussianTarget(Matrix cov) : precision_(cov.inverse()) {}
  Index dim() const override { return precision_.rows(); }
  double log_density(const Vector& q, Vector& grad) const override {
    grad = -precision_ * q;
    return 0.5 * q.dot(grad);
  }

 private:
  Matrix precision_;
};

/// Relative error |g - g_fd| / |g_fd| of the model gradient at q, central
/// differences with step h.
inline double gradient_rel_error(const mfgpc::GpClassifier& model, const Vector& q, double h = 1e-5) {
  Vector g;
  model.log_density(q, g);
  Vector fd(q.size());
  for (Index i = 0; i < q.size(); ++i) {
    Vector qp = q, qm = q;
    qp[i] += h;
    qm[i] -= h;
    fd[i] = (model.log_posterior(qp) - model.log_posterior(qm)) / (2 * h);
  }
  return (g - fd).norm() / fd.norm();
}

/// Random classifier on uniform inputs with labels from a random linear rule.
inline mfgpc::GpClassifier random_model(std::mt19937_64& rng, mfgpc::ClassifierKind kind) {
  const Index d = 1 + static_cast<Index>(rng() % 3);
  const Index nl = kind == mfgpc::ClassifierKind::SingleFidelity ? 0 : 3 + static_cast<Index>(rng() % 12);
  const Index nh = 2 + static_cast<Index>(rng() % 8);
  const Matrix xl = random_matrix(rng, nl, d), xh = random_matrix(rng, nh, d);
  const Vector w = random_normal(rng, d);
  mfgpc::LabelVector yl(nl), yh(nh);
  for (Index i = 0; i < nl; ++i) yl[i] = xl.row(i).dot(w) > 0.5 * w.sum();
  for (Index i = 0; i < nh; ++i) yh[i] = xh.row(i).dot(w) > 0.4 * w.sum();
  mfgpc::ModelConfig cfg;
  cfg.kind = kind;
  cfg.n_lengthscales = rng() % 2 ? d : 1;
  cfg.n_low_inducing = std::max<Index>(1, nl / 2);
  cfg.kmeans_seed = rng();
  return mfgpc::GpClassifier(mfgpc::LabeledDataset::from_levels(xl, yl, xh, yh), cfg);
}

}  // namespace th

#endif
