#include "mfgpc/covariance.hpp"

#include <cmath>

namespace mfgpc {

TaggedPoints TaggedPoints::stacked(const Matrix& x_low, const Matrix& x_high) {
  const Index dim = x_low.rows() > 0 ? x_low.cols() : x_high.cols();
  Matrix x(x_low.rows() + x_high.rows(), dim);
  if (x_low.rows() > 0) x.topRows(x_low.rows()) = x_low;
  if (x_high.rows() > 0) x.bottomRows(x_high.rows()) = x_high;
  return TaggedPoints{std::move(x), x_low.rows()};
}

CovarianceStructure CovarianceStructure::single(KernelParams params) {
  params.validate();
  MultiFidelityParams p;
  p.low = params;
  p.high = params;
  p.rho = 0.0;
  return CovarianceStructure(std::move(p), false);
}

CovarianceStructure CovarianceStructure::multi(MultiFidelityParams params) {
  params.validate();
  if (params.low.n_lengthscales() != params.high.n_lengthscales()) {
    throw DimensionError("multi-fidelity kernels must use the same lengthscale convention");
  }
  return CovarianceStructure(std::move(params), true);
}

bool CovarianceStructure::decode(bool multi_fidelity, Index n_ell, const Eigen::Ref<const Vector>& u,
                                 CovarianceStructure& out) {
  if (u.size() != n_hyper(multi_fidelity, n_ell)) throw DimensionError("hyperparameter vector has wrong length");
  MultiFidelityParams p;
  p.low.eta = std::exp(u[0]);
  p.low.lengthscales = u.segment(1, n_ell).array().exp();
  if (multi_fidelity) {
    const Index h = 1 + n_ell;
    p.high.eta = std::exp(u[h]);
    p.high.lengthscales = u.segment(h + 1, n_ell).array().exp();
    p.rho = u[2 * h];
  } else {
    p.high = p.low;
    p.rho = 0.0;
  }
  if (!p.low.in_domain() || !p.high.in_domain() || !std::isfinite(p.rho)) return false;
  out = CovarianceStructure(std::move(p), multi_fidelity);
  return true;
}

std::vector<std::string> CovarianceStructure::hyper_names(bool multi_fidelity, Index n_ell) {
  std::vector<std::string> names;
  auto add = [&](const std::string& suffix) {
    names.push_back("eta" + suffix);
    for (Index m = 0; m < n_ell; ++m) names.push_back("ell" + suffix + "[" + std::to_string(m) + "]");
  };
  if (multi_fidelity) {
    add("_L");
    add("_H");
    names.push_back("rho");
  } else {
    add("");
  }
  return names;
}

Vector CovarianceStructure::unconstrained() const {
  Vector u(n_hyper());
  const Index n_ell = n_lengthscales();
  u[0] = std::log(p_.low.eta);
  u.segment(1, n_ell) = p_.low.lengthscales.array().log();
  if (multi_) {
    const Index h = 1 + n_ell;
    u[h] = std::log(p_.high.eta);
    u.segment(h + 1, n_ell) = p_.high.lengthscales.array().log();
    u[2 * h] = p_.rho;
  }
  return u;
}

Vector CovarianceStructure::constrained() const {
  Vector c(n_hyper());
  const Index n_ell = n_lengthscales();
  c[0] = p_.low.eta;
  c.segment(1, n_ell) = p_.low.lengthscales;
  if (multi_) {
    const Index h = 1 + n_ell;
    c[h] = p_.high.eta;
    c.segment(h + 1, n_ell) = p_.high.lengthscales;
    c[2 * h] = p_.rho;
  }
  return c;
}

bool CovarianceStructure::from_constrained(bool multi_fidelity, Index n_ell, const Eigen::Ref<const Vector>& c,
                                           CovarianceStructure& out) {
  if (c.size() != n_hyper(multi_fidelity, n_ell)) throw DimensionError("hyperparameter record has wrong length");
  MultiFidelityParams p;
  p.low.eta = c[0];
  p.low.lengthscales = c.segment(1, n_ell);
  if (multi_fidelity) {
    const Index h = 1 + n_ell;
    p.high.eta = c[h];
    p.high.lengthscales = c.segment(h + 1, n_ell);
    p.rho = c[2 * h];
  } else {
    p.high = p.low;
    p.rho = 0.0;
  }
  if (!p.low.in_domain() || !p.high.in_domain() || !std::isfinite(p.rho)) return false;
  out = CovarianceStructure(std::move(p), multi_fidelity);
  return true;
}

Matrix CovarianceStructure::operator()(const TaggedPoints& a, const TaggedPoints& b) const {
  if (!multi_) return gram_matrix(a.x, b.x, p_.low);
  Matrix k(a.size(), b.size());
  const Index al = a.n_low, ah = a.n_high(), bl = b.n_low, bh = b.n_high();
  auto block = [&](Index r0, Index nr, Fidelity la, Index c0, Index nc, Fidelity lb) {
    if (nr == 0 || nc == 0) return;
    k.block(r0, c0, nr, nc) = level_covariance(a.x.middleRows(r0, nr), la, b.x.middleRows(c0, nc), lb, p_);
  };
  block(0, al, Fidelity::Low, 0, bl, Fidelity::Low);
  block(0, al, Fidelity::Low, bl, bh, Fidelity::High);
  block(al, ah, Fidelity::High, 0, bl, Fidelity::Low);
  block(al, ah, Fidelity::High, bl, bh, Fidelity::High);
  return k;
}

double CovarianceStructure::prior_variance(Fidelity level) const {
  if (!multi_) return p_.low.eta;
  return mfgpc::prior_variance(p_, level);
}

Vector CovarianceStructure::diag(const TaggedPoints& a) const {
  Vector d(a.size());
  for (Index i = 0; i < a.size(); ++i) d[i] = prior_variance(a.level(i));
  return d;
}

double CovarianceStructure::log_prior_unconstrained(const PriorSpec& spec, Eigen::Ref<Vector> grad) const {
  const Index n_ell = n_lengthscales();
  double lp = 0.0;
  auto kernel_part = [&](const KernelParams& k, Index off) {
    // eta = exp(u): log HalfNormal(eta) + u
    lp += log_half_normal(k.eta, spec.eta_sigma) + std::log(k.eta);
    grad[off] += 1.0 - k.eta * k.eta / (spec.eta_sigma * spec.eta_sigma);
    for (Index m = 0; m < n_ell; ++m) {
      const double ell = k.lengthscales[m];
      lp += log_gamma_density(ell, spec.gamma_alpha, spec.gamma_beta) + std::log(ell);
      grad[off + 1 + m] += spec.gamma_alpha - spec.gamma_beta * ell;
    }
  };
  kernel_part(p_.low, 0);
  if (multi_) {
    kernel_part(p_.high, 1 + n_ell);
    lp += log_normal_density(p_.rho, 0.0, spec.rho_sigma);
    grad[2 * (1 + n_ell)] += -p_.rho / (spec.rho_sigma * spec.rho_sigma);
  }
  return lp;
}

void CovarianceStructure::accumulate_gradient(const TaggedPoints& a, const TaggedPoints& b, const Matrix& kbar,
                                              Eigen::Ref<Vector> grad) const {
  const Index dim = a.x.cols();
  const Index n_ell = n_lengthscales();
  const bool shared = n_ell == 1;
  Vector inv2_l(dim), inv2_h(dim);
  for (Index m = 0; m < dim; ++m) {
    const double ll = p_.low.lengthscale(m), lh = p_.high.lengthscale(m);
    inv2_l[m] = 1.0 / (ll * ll);
    inv2_h[m] = 1.0 / (lh * lh);
  }
  const Index h_off = 1 + n_ell;
  const Index rho_idx = 2 * h_off;
  const double rho = p_.rho;
  Vector d2(dim);
  Vector acc_l = Vector::Zero(n_ell), acc_h = Vector::Zero(n_ell);
  double g_eta_l = 0.0, g_eta_h = 0.0, g_rho = 0.0;
  for (Index j = 0; j < b.size(); ++j) {
    const int hb = multi_ && b.level(j) == Fidelity::High;
    for (Index i = 0; i < a.size(); ++i) {
      const double w = kbar(i, j);
      if (w == 0.0) continue;
      double r2l = 0.0, r2h = 0.0;
      for (Index m = 0; m < dim; ++m) {
        const double d = a.x(i, m) - b.x(j, m);
        d2[m] = d * d;
        r2l += d2[m] * inv2_l[m];
        r2h += d2[m] * inv2_h[m];
      }
      const double kl = p_.low.eta * std::exp(-0.5 * r2l);
      const int nh = multi_ ? (a.level(i) == Fidelity::High) + hb : 0;
      const double c = nh == 0 ? 1.0 : (nh == 1 ? rho : rho * rho);
      const double dc = nh == 0 ? 0.0 : (nh == 1 ? 1.0 : 2.0 * rho);
      const double wl = w * c * kl;
      g_eta_l += wl;
      if (shared) {
        acc_l[0] += wl * r2l;
      } else {
        for (Index m = 0; m < dim; ++m) acc_l[m] += wl * d2[m] * inv2_l[m];
      }
      if (multi_) {
        g_rho += w * dc * kl;
        if (nh == 2) {
          const double wh = w * p_.high.eta * std::exp(-0.5 * r2h);
          g_eta_h += wh;
          if (shared) {
            acc_h[0] += wh * r2h;
          } else {
            for (Index m = 0; m < dim; ++m) acc_h[m] += wh * d2[m] * inv2_h[m];
          }
        }
      }
    }
  }
  grad[0] += g_eta_l;
  grad.segment(1, n_ell) += acc_l;
  if (multi_) {
    grad[h_off] += g_eta_h;
    grad.segment(h_off + 1, n_ell) += acc_h;
    grad[rho_idx] += g_rho;
  }
}

void CovarianceStructure::accumulate_diag_gradient(const TaggedPoints& a, const Vector& dbar,
                                                   Eigen::Ref<Vector> grad) const {
  const Index h_off = 1 + n_lengthscales();
  for (Index i = 0; i < a.size(); ++i) {
    if (!multi_ || a.level(i) == Fidelity::Low) {
      grad[0] += dbar[i] * p_.low.eta;
    } else {
      grad[0] += dbar[i] * p_.rho * p_.rho * p_.low.eta;
      grad[2 * h_off] += dbar[i] * 2.0 * p_.rho * p_.low.eta;
      grad[h_off] += dbar[i] * p_.high.eta;
    }
  }
}

Matrix cholesky_adjoint(const Matrix& lower, const Matrix& lower_bar) {
  const auto tri = lower.triangularView<Eigen::Lower>();
  Matrix p = (lower.transpose() * lower_bar.triangularView<Eigen::Lower>()).triangularView<Eigen::Lower>();
  p.diagonal() *= 0.5;
  tri.transpose().solveInPlace(p);
  tri.solveInPlace<Eigen::OnTheRight>(p);
  return p;
}

}  // namespace mfgpc
