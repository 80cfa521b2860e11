#include "mfgpc/model.hpp"

#include <cmath>
#include <limits>

namespace mfgpc {

std::string to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::SingleFidelity:
      return "sf";
    case ClassifierKind::MultiFidelity:
      return "mf";
    case ClassifierKind::SparseMultiFidelity:
      return "sparse-mf";
  }
  return "?";
}

ClassifierKind parse_classifier_kind(const std::string& s) {
  if (s == "sf" || s == "SF") return ClassifierKind::SingleFidelity;
  if (s == "mf" || s == "MF") return ClassifierKind::MultiFidelity;
  if (s == "sparse-mf" || s == "SPARSE-MF" || s == "smf") return ClassifierKind::SparseMultiFidelity;
  throw ConfigError("unknown model kind '" + s + "' (expected sf, mf or sparse-mf)");
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Adjoint of K for L = chol(K), f = L z and df-adjoint g: L-bar = tril(g z^T),
// so tril(L^T L-bar) = tril((L^T g) z^T).
Matrix whitened_cholesky_adjoint(const Matrix& lower, const Vector& g, const Vector& z) {
  const Vector a = lower.triangularView<Eigen::Lower>().transpose() * g;
  const Index n = lower.rows();
  Matrix p = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) p.col(j).tail(n - j) = a.tail(n - j) * z[j];
  p.diagonal() *= 0.5;
  const auto tri = lower.triangularView<Eigen::Lower>();
  tri.transpose().solveInPlace(p);
  tri.solveInPlace<Eigen::OnTheRight>(p);
  return p;
}

double bernoulli_loglik(const Vector& f, const Vector& y, Vector& gbar) {
  double ll = 0.0;
  gbar.resize(f.size());
  for (Index i = 0; i < f.size(); ++i) {
    ll += y[i] > 0.5 ? log_sigmoid(f[i]) : log_sigmoid(-f[i]);
    gbar[i] = y[i] - sigmoid(f[i]);
  }
  return ll;
}

}  // namespace

GpClassifier::GpClassifier(LabeledDataset data, ModelConfig config) : data_(std::move(data)), config_(config) {
  if (config_.n_lengthscales != 1 && config_.n_lengthscales != data_.dim()) {
    throw DimensionError("model: n_lengthscales must be 1 or the input dimension (" + std::to_string(data_.dim()) +
                         ")");
  }
  if (!(config_.sparse_sigma > 0.0)) throw ConfigError("model: sparse sigma must be > 0");
  if (config_.kind == ClassifierKind::SingleFidelity) {
    x_ = TaggedPoints::all_low(data_.inputs());
  } else {
    x_ = TaggedPoints{data_.inputs(), data_.n_low()};
  }
  y_ = data_.labels().cast<double>();
  if (sparse()) {
    const Index m_low = std::min(config_.n_low_inducing, data_.n_low());
    xu_ = make_mf_inducing(data_, m_low, config_.kmeans_seed).points;
    g_uu_ = make_geometry(xu_, xu_);
    g_uf_ = make_geometry(xu_, x_);
  } else {
    g_ff_ = make_geometry(x_, x_);
  }
}

GpClassifier::PairGeometry GpClassifier::make_geometry(const TaggedPoints& a, const TaggedPoints& b) const {
  PairGeometry g;
  const Index na = a.size(), nb = b.size(), dim = a.x.cols();
  const bool shared = config_.n_lengthscales == 1;
  g.d2.assign(static_cast<std::size_t>(shared ? 1 : dim), Matrix::Zero(na, nb));
  g.one_high = Matrix::Zero(na, nb);
  g.both_high = Matrix::Zero(na, nb);
  for (Index j = 0; j < nb; ++j) {
    for (Index i = 0; i < na; ++i) {
      for (Index m = 0; m < dim; ++m) {
        const double d = a.x(i, m) - b.x(j, m);
        g.d2[static_cast<std::size_t>(shared ? 0 : m)](i, j) += d * d;
      }
      if (multi_fidelity()) {
        const int nh = (a.level(i) == Fidelity::High) + (b.level(j) == Fidelity::High);
        g.one_high(i, j) = nh == 1;
        g.both_high(i, j) = nh == 2;
      }
    }
  }
  g.any_high = (g.one_high.array() + g.both_high.array() > 0.0).any();
  return g;
}

namespace {

Eigen::ArrayXXd scaled_r2(const std::vector<Matrix>& d2, const Vector& ell) {
  Eigen::ArrayXXd r2 = d2[0].array() / (ell[0] * ell[0]);
  for (std::size_t m = 1; m < d2.size(); ++m) {
    const double l = ell[static_cast<Index>(m)];
    r2 += d2[m].array() / (l * l);
  }
  return r2;
}

}  // namespace

Matrix GpClassifier::covariance(const CovarianceStructure& cov, const PairGeometry& g) const {
  const auto& p = cov.params();
  const Eigen::ArrayXXd kl = p.low.eta * (-0.5 * scaled_r2(g.d2, p.low.lengthscales)).exp();
  if (!multi_fidelity() || !g.any_high) return kl.matrix();
  const double rho = p.rho;
  // Block coefficient 1, rho or rho^2 by the number of HIGH endpoints.
  const Eigen::ArrayXXd c = 1.0 + (rho - 1.0) * g.one_high.array() + (rho * rho - 1.0) * g.both_high.array();
  const Eigen::ArrayXXd kh = p.high.eta * (-0.5 * scaled_r2(g.d2, p.high.lengthscales)).exp();
  return (c * kl + g.both_high.array() * kh).matrix();
}

void GpClassifier::accumulate(const CovarianceStructure& cov, const PairGeometry& g, const Matrix& kbar,
                              Eigen::Ref<Vector> grad) const {
  const auto& p = cov.params();
  const Index n_ell = config_.n_lengthscales;
  const Eigen::ArrayXXd kl = p.low.eta * (-0.5 * scaled_r2(g.d2, p.low.lengthscales)).exp();
  Eigen::ArrayXXd wl = kbar.array() * kl;
  if (multi_fidelity() && g.any_high) {
    const double rho = p.rho;
    const auto one = g.one_high.array();
    const auto both = g.both_high.array();
    grad[2 * (1 + n_ell)] += (wl * (one + 2.0 * rho * both)).sum();
    wl *= 1.0 + (rho - 1.0) * one + (rho * rho - 1.0) * both;
    const Eigen::ArrayXXd wh =
        both * kbar.array() * p.high.eta * (-0.5 * scaled_r2(g.d2, p.high.lengthscales)).exp();
    grad[1 + n_ell] += wh.sum();
    for (Index m = 0; m < n_ell; ++m) {
      const double l = p.high.lengthscales[m];
      grad[2 + n_ell + m] += (wh * g.d2[static_cast<std::size_t>(m)].array()).sum() / (l * l);
    }
  }
  grad[0] += wl.sum();
  for (Index m = 0; m < n_ell; ++m) {
    const double l = p.low.lengthscales[m];
    grad[1 + m] += (wl * g.d2[static_cast<std::size_t>(m)].array()).sum() / (l * l);
  }
}

Index GpClassifier::n_hyper() const { return CovarianceStructure::n_hyper(multi_fidelity(), config_.n_lengthscales); }

Index GpClassifier::n_latent() const { return sparse() ? xu_.size() + x_.size() : x_.size(); }

std::vector<std::string> GpClassifier::parameter_names() const {
  auto names = CovarianceStructure::hyper_names(multi_fidelity(), config_.n_lengthscales);
  if (sparse()) {
    for (Index i = 0; i < xu_.size(); ++i) names.push_back("z_u[" + std::to_string(i) + "]");
    for (Index i = 0; i < x_.size(); ++i) names.push_back("z_f[" + std::to_string(i) + "]");
  } else {
    for (Index i = 0; i < x_.size(); ++i) names.push_back("z[" + std::to_string(i) + "]");
  }
  return names;
}

double GpClassifier::log_density(const Vector& q, Vector& grad) const {
  if (q.size() != dim()) throw DimensionError("model: state has wrong length");
  const Index nh = n_hyper();
  const Index n = x_.size();
  grad = Vector::Zero(dim());
  CovarianceStructure cov;
  if (!CovarianceStructure::decode(multi_fidelity(), config_.n_lengthscales, q.head(nh), cov)) return kNegInf;
  double lp = cov.log_prior_unconstrained(config_.prior, grad.head(nh));
  if (!std::isfinite(lp)) return kNegInf;

  if (!sparse()) {
    if (n == 0) return lp;
    const auto chol = try_jittered_cholesky(covariance(cov, g_ff_), config_.jitter);
    if (!chol) return kNegInf;
    const Matrix& lower = chol->lower;
    const Vector z = q.tail(n);
    const Vector f = lower.triangularView<Eigen::Lower>() * z;
    Vector gbar;
    lp += -0.5 * z.squaredNorm() + bernoulli_loglik(f, y_, gbar);
    grad.tail(n) = lower.triangularView<Eigen::Lower>().transpose() * gbar - z;
    Matrix kbar = whitened_cholesky_adjoint(lower, gbar, z);
    // The jitter is relative to mean(diag K), so it carries hyperparameter gradient too.
    kbar.diagonal().array() += chol->relative_jitter * kbar.trace() / static_cast<double>(n);
    accumulate(cov, g_ff_, kbar, grad.head(nh));
  } else {
    const Index m = xu_.size();
    const Vector zu = q.segment(nh, m);
    const Vector zf = q.tail(n);
    lp += -0.5 * (zu.squaredNorm() + zf.squaredNorm());
    grad.segment(nh, m) = -zu;
    grad.tail(n) = -zf;
    if (n == 0) return lp;
    const auto chol = try_jittered_cholesky(covariance(cov, g_uu_), config_.jitter);
    if (!chol) return kNegInf;
    const auto tri = chol->lower.triangularView<Eigen::Lower>();
    const Matrix kuf = covariance(cov, g_uf_);
    const Matrix a = tri.solve(kuf);
    const double s2 = config_.sparse_sigma * config_.sparse_sigma;
    const Vector lambda = (cov.diag(x_) - a.colwise().squaredNorm().transpose()).array() + s2;
    if (!(lambda.array() > 0.0).all()) return kNegInf;
    const Vector s = lambda.cwiseSqrt();
    const Vector f = a.transpose() * zu + s.cwiseProduct(zf);
    Vector gbar;
    lp += bernoulli_loglik(f, y_, gbar);

    grad.segment(nh, m) += a * gbar;
    grad.tail(n) += s.cwiseProduct(gbar);
    const Vector lambda_bar = gbar.cwiseProduct(zf).cwiseQuotient(2.0 * s);
    Matrix abar = zu * gbar.transpose();
    abar -= 2.0 * a * lambda_bar.asDiagonal();
    const Matrix kuf_bar = tri.transpose().solve(abar);
    const Matrix lu_bar = -(kuf_bar * a.transpose());
    Matrix kuu_bar = cholesky_adjoint(chol->lower, lu_bar);
    if (m > 0) kuu_bar.diagonal().array() += chol->relative_jitter * kuu_bar.trace() / static_cast<double>(m);
    accumulate(cov, g_uu_, kuu_bar, grad.head(nh));
    accumulate(cov, g_uf_, kuf_bar, grad.head(nh));
    cov.accumulate_diag_gradient(x_, lambda_bar, grad.head(nh));
  }
  if (!std::isfinite(lp) || !grad.allFinite()) return kNegInf;
  return lp;
}

double GpClassifier::log_posterior(const Vector& q) const {
  Vector g;
  return log_density(q, g);
}

Vector GpClassifier::initial_point(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  Vector q(dim());
  for (Index i = 0; i < q.size(); ++i) q[i] = u(rng);
  if (multi_fidelity()) q[n_hyper() - 1] += 1.0;  // rho starts near 1
  return q;
}

Vector GpClassifier::to_record(const Vector& q) const {
  if (q.size() != dim()) throw DimensionError("model: state has wrong length");
  Vector r = q;
  CovarianceStructure cov;
  if (!CovarianceStructure::decode(multi_fidelity(), config_.n_lengthscales, q.head(n_hyper()), cov)) {
    throw NumericalError("model: state decodes to non-finite hyperparameters");
  }
  r.head(n_hyper()) = cov.constrained();
  return r;
}

Vector GpClassifier::from_record(const Vector& record) const {
  Vector q = record;
  q.head(n_hyper()) = decode_record(record).unconstrained();
  return q;
}

CovarianceStructure GpClassifier::decode_record(const Vector& record) const {
  if (record.size() != dim()) {
    throw DimensionError("model: record has " + std::to_string(record.size()) + " entries, expected " +
                         std::to_string(dim()));
  }
  CovarianceStructure cov;
  if (!CovarianceStructure::from_constrained(multi_fidelity(), config_.n_lengthscales, record.head(n_hyper()), cov)) {
    throw DomainError("model: record hyperparameters outside their domain");
  }
  return cov;
}

Vector GpClassifier::training_latents(const Vector& record) const {
  const CovarianceStructure cov = decode_record(record);
  const Index n = x_.size();
  if (n == 0) return Vector(0);
  if (!sparse()) {
    const auto chol = jittered_cholesky(covariance(cov, g_ff_), config_.jitter);
    return chol.lower.triangularView<Eigen::Lower>() * record.tail(n);
  }
  const Index m = xu_.size();
  const auto chol = jittered_cholesky(covariance(cov, g_uu_), config_.jitter);
  const Matrix a = chol.lower.triangularView<Eigen::Lower>().solve(covariance(cov, g_uf_));
  const Vector lambda =
      (cov.diag(x_) - a.colwise().squaredNorm().transpose()).array() + config_.sparse_sigma * config_.sparse_sigma;
  if (!(lambda.array() > 0.0).all()) throw NumericalError("model: nonpositive sparse diagonal");
  return a.transpose() * record.segment(n_hyper(), m) + lambda.cwiseSqrt().cwiseProduct(record.tail(n));
}

PredictiveGaussian GpClassifier::predict_latent(const Vector& record, const Matrix& query) const {
  if (query.cols() != data_.dim() && x_.size() > 0) throw DimensionError("model: query dimension mismatch");
  const CovarianceStructure cov = decode_record(record);
  const Fidelity target = multi_fidelity() ? Fidelity::High : Fidelity::Low;
  const TaggedPoints tq = TaggedPoints::of_level(query, target);
  const Index n = x_.size();
  if (n == 0) {
    PredictiveGaussian out;
    out.mean = Vector::Zero(query.rows());
    out.variance = Vector::Constant(query.rows(), cov.prior_variance(target));
    return out;
  }
  if (!sparse()) {
    const auto chol = jittered_cholesky(covariance(cov, g_ff_), config_.jitter);
    const Vector f = chol.lower.triangularView<Eigen::Lower>() * record.tail(n);
    return condition_on(chol.lower, f, cov(tq, x_), cov.diag(tq));
  }
  return sparse_predict(cov, tq, x_, xu_, training_latents(record), config_.sparse_sigma, config_.jitter);
}

}  // namespace mfgpc
