#include "mfgpc/gp_sparse.hpp"

#include <limits>
#include <random>

namespace mfgpc {

namespace {

double assign_nearest(const Matrix& x, const Matrix& c, std::vector<Index>& assignment) {
  double total = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    Index arg = 0;
    for (Index k = 0; k < c.rows(); ++k) {
      const double d = (x.row(i) - c.row(k)).squaredNorm();
      if (d < best) {
        best = d;
        arg = k;
      }
    }
    assignment[static_cast<std::size_t>(i)] = arg;
    total += best;
  }
  return total;
}

}  // namespace

KMeansResult kmeans(const Matrix& x, Index k, std::uint64_t seed, int max_iter, double tol) {
  const Index n = x.rows();
  if (k <= 0) throw DomainError("kmeans: cluster count must be >= 1");
  if (k > n) {
    throw DomainError("kmeans: " + std::to_string(k) + " clusters requested from " + std::to_string(n) + " points");
  }
  std::mt19937_64 rng(seed);
  KMeansResult res;
  res.centroids.resize(k, x.cols());
  res.assignment.assign(static_cast<std::size_t>(n), 0);

  // k-means++ seeding
  std::uniform_int_distribution<Index> first(0, n - 1);
  res.centroids.row(0) = x.row(first(rng));
  Vector d2(n);
  for (Index i = 0; i < n; ++i) d2[i] = (x.row(i) - res.centroids.row(0)).squaredNorm();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Index c = 1; c < k; ++c) {
    const double total = d2.sum();
    Index pick = n - 1;
    if (total > 0.0) {
      double target = unif(rng) * total;
      for (Index i = 0; i < n; ++i) {
        target -= d2[i];
        if (target < 0.0 && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
      if (d2[pick] == 0.0) {
        for (Index i = n - 1; i >= 0; --i) {
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      pick = std::uniform_int_distribution<Index>(0, n - 1)(rng);
    }
    res.centroids.row(c) = x.row(pick);
    for (Index i = 0; i < n; ++i) d2[i] = std::min(d2[i], (x.row(i) - res.centroids.row(c)).squaredNorm());
  }

  res.objective.push_back(assign_nearest(x, res.centroids, res.assignment));
  for (int it = 0; it < max_iter; ++it) {
    Matrix sums = Matrix::Zero(k, x.cols());
    Vector counts = Vector::Zero(k);
    for (Index i = 0; i < n; ++i) {
      const Index a = res.assignment[static_cast<std::size_t>(i)];
      sums.row(a) += x.row(i);
      counts[a] += 1.0;
    }
    double moved = 0.0;
    for (Index c = 0; c < k; ++c) {
      if (counts[c] == 0.0) continue;  // empty cluster keeps its centroid
      const Eigen::RowVectorXd next = sums.row(c) / counts[c];
      moved = std::max(moved, (next - res.centroids.row(c)).norm());
      res.centroids.row(c) = next;
    }
    res.objective.push_back(assign_nearest(x, res.centroids, res.assignment));
    res.iterations = it + 1;
    if (moved < tol) break;
  }
  return res;
}

Matrix kmeans_inducing(const Matrix& x_low, Index m_low, std::uint64_t seed) {
  return kmeans(x_low, m_low, seed).centroids;
}

SparsePrior sparse_prior_cov(const CovarianceStructure& cov, const TaggedPoints& x, const TaggedPoints& xu,
                             double sigma, const JitterPolicy& jitter) {
  if (!(sigma > 0.0)) throw DomainError("sparse nugget sigma must be > 0");
  const auto chol = jittered_cholesky(cov(xu, xu), jitter);
  const auto tri = chol.lower.triangularView<Eigen::Lower>();
  const Matrix kuf = cov(xu, x);
  const Matrix a = tri.solve(kuf);  // L^-1 K_uf
  SparsePrior out;
  out.mean_map = tri.transpose().solve(a).transpose();  // K_fu K_uu^-1
  out.diag = cov.diag(x) - a.colwise().squaredNorm().transpose();
  out.diag.array() += sigma * sigma;
  return out;
}

SparsePrior sparse_prior_cov(const Matrix& x, const Matrix& xu, const KernelParams& params, double sigma,
                             const JitterPolicy& jitter) {
  return sparse_prior_cov(CovarianceStructure::single(params), TaggedPoints::all_low(x), TaggedPoints::all_low(xu),
                          sigma, jitter);
}

PredictiveGaussian sparse_predict(const CovarianceStructure& cov, const TaggedPoints& query, const TaggedPoints& x,
                                  const TaggedPoints& xu, const Vector& f, double sigma,
                                  const JitterPolicy& jitter) {
  if (!(sigma > 0.0)) throw DomainError("sparse nugget sigma must be > 0");
  if (f.size() != x.size()) throw DimensionError("sparse_predict: latent length != training size");
  const auto chol_uu = jittered_cholesky(cov(xu, xu), jitter);
  const auto tri_uu = chol_uu.lower.triangularView<Eigen::Lower>();
  const Matrix kuu = chol_uu.lower * chol_uu.lower.transpose();
  const Matrix kuf = cov(xu, x);
  const Matrix a = tri_uu.solve(kuf);
  const Vector lambda = (cov.diag(x) - a.colwise().squaredNorm().transpose()).array() + sigma * sigma;
  if ((lambda.array() <= 0.0).any()) throw NumericalError("sparse_predict: nonpositive Lambda entry");
  const Vector inv_lambda = lambda.cwiseInverse();
  const Matrix b = kuu + kuf * inv_lambda.asDiagonal() * kuf.transpose();
  const auto chol_b = jittered_cholesky(0.5 * (b + b.transpose()), jitter);
  const auto tri_b = chol_b.lower.triangularView<Eigen::Lower>();

  const Matrix kqu = cov(query, xu);
  const Vector rhs = kuf * inv_lambda.cwiseProduct(f);
  const Vector phi_rhs = tri_b.transpose().solve(tri_b.solve(rhs));
  PredictiveGaussian out;
  out.mean = kqu * phi_rhs;
  const Matrix vq = tri_uu.solve(kqu.transpose());  // L_uu^-1 K_u*
  const Matrix wq = tri_b.solve(kqu.transpose());   // L_B^-1 K_u*
  out.variance.resize(query.size());
  for (Index q = 0; q < query.size(); ++q) {
    const double prior = cov.prior_variance(query.level(q));
    double v = prior - vq.col(q).squaredNorm() + wq.col(q).squaredNorm();
    if (v < -1e-10 * std::max(1.0, prior)) throw NumericalError("sparse_predict: negative variance");
    out.variance[q] = std::max(v, 0.0);
  }
  return out;
}

PredictiveGaussian sparse_predict(const Matrix& query, const Matrix& x, const Matrix& xu, const Vector& f,
                                  const KernelParams& params, double sigma, const JitterPolicy& jitter) {
  return sparse_predict(CovarianceStructure::single(params), TaggedPoints::all_low(query), TaggedPoints::all_low(x),
                        TaggedPoints::all_low(xu), f, sigma, jitter);
}

// ---------------------------------------------------------------------------

SparseMfModel::SparseMfModel(const LabeledDataset& dataset, InducingSet inducing, const MultiFidelityParams& params,
                             SparseNugget nugget, JitterPolicy jitter)
    : cov_(CovarianceStructure::multi(params)),
      x_(TaggedPoints::stacked(dataset.low_inputs(), dataset.high_inputs())),
      xu_(std::move(inducing)),
      sigma_(nugget.sigma),
      jitter_(jitter) {
  if (!(sigma_ > 0.0)) throw DomainError("sparse nugget sigma must be > 0");
}

SparsePrior SparseMfModel::prior() const { return sparse_prior_cov(cov_, x_, xu_.points, sigma_, jitter_); }

PredictiveGaussian SparseMfModel::predict(const Matrix& query, const Vector& f, Fidelity target) const {
  return sparse_predict(cov_, TaggedPoints::of_level(query, target), x_, xu_.points, f, sigma_, jitter_);
}

InducingSet make_mf_inducing(const LabeledDataset& dataset, Index m_low, std::uint64_t seed) {
  const Matrix xl = dataset.low_inputs();
  Matrix centroids = m_low > 0 ? kmeans_inducing(xl, m_low, seed) : Matrix(0, dataset.dim());
  return InducingSet{TaggedPoints::stacked(centroids, dataset.high_inputs())};
}

SparseMfModel assemble_mf_sparse(const LabeledDataset& dataset, const InducingSet& inducing,
                                 const MultiFidelityParams& params, SparseNugget nugget, const JitterPolicy& jitter) {
  const Matrix xh = dataset.high_inputs();
  if (inducing.points.n_high() != xh.rows() ||
      (xh.rows() > 0 && inducing.points.x.bottomRows(xh.rows()) != xh)) {
    throw ConfigError("sparse multi-fidelity: HIGH inducing points must equal the HIGH training inputs");
  }
  return SparseMfModel(dataset, inducing, params, nugget, jitter);
}

}  // namespace mfgpc
