#include "mfgpc/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace mfgpc::synthetic {

SineBoundarySpec SineBoundarySpec::high() { return {0.5, 3.0, 2.5 * std::numbers::pi}; }
SineBoundarySpec SineBoundarySpec::low() { return {0.45, 2.5, 2.2 * std::numbers::pi}; }

double SineBoundarySpec::boundary(double x1) const { return offset + std::sin(frequency * x1) / divisor; }

double SineBoundarySpec::margin(double x1, double x2) const { return boundary(x1) - x2; }

int label(const SineBoundarySpec& spec, const Vector& x) {
  if (x.size() != 2) throw DimensionError("synthetic labeler expects 2 inputs");
  for (Index i = 0; i < 2; ++i) {
    if (!(x[i] >= 0.0 && x[i] <= 1.0)) throw DomainError("synthetic labeler: input outside [0,1]^2");
  }
  return spec.margin(x[0], x[1]) > 0.0 ? 1 : 0;
}

int label_high(const Vector& x) { return label(SineBoundarySpec::high(), x); }
int label_low(const Vector& x) { return label(SineBoundarySpec::low(), x); }

LabelVector label_rows(const SineBoundarySpec& spec, const Matrix& x) {
  LabelVector y(x.rows());
  for (Index i = 0; i < x.rows(); ++i) y[i] = label(spec, x.row(i).transpose());
  return y;
}

BoxDomain unit_square() { return BoxDomain(Vector::Zero(2), Vector::Ones(2)); }

LabeledDataset make_low_fidelity_design(std::uint64_t seed, const LowDesignOptions& options) {
  const auto spec = SineBoundarySpec::low();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> offset(-options.margin, options.margin);
  const Index n = options.n_near_boundary + options.n_space_filling;
  Matrix x(n, 2);
  Index filled = 0;
  while (filled < options.n_near_boundary) {
    const double x1 = u01(rng);
    const double x2 = spec.boundary(x1) + offset(rng);
    if (x2 < 0.0 || x2 > 1.0) continue;
    x(filled, 0) = x1;
    x(filled, 1) = x2;
    ++filled;
  }
  if (options.n_space_filling > 0) {
    x.bottomRows(options.n_space_filling) = latin_hypercube(unit_square(), options.n_space_filling, rng());
  }
  return LabeledDataset::single_level(x, label_rows(spec, x), Fidelity::Low);
}

LabeledDataset make_high_fidelity_seed(Index n_high, std::uint64_t seed, Index pool_size) {
  std::mt19937_64 rng(seed);
  const Matrix pool_x = latin_hypercube(unit_square(), pool_size, rng());
  const auto pool = LabeledDataset::single_level(pool_x, label_rows(SineBoundarySpec::low(), pool_x), Fidelity::Low);
  const Matrix xh = balanced_seed_selection(pool, n_high, rng());
  return LabeledDataset::single_level(xh, label_rows(SineBoundarySpec::high(), xh), Fidelity::High);
}

}  // namespace mfgpc::synthetic
