#ifndef MFGPC_SYNTHETIC_HPP
#define MFGPC_SYNTHETIC_HPP

#include <cstdint>

#include "mfgpc/dataset.hpp"

namespace mfgpc::synthetic {

/// Boundary x2 = offset + sin(frequency * x1) / divisor; label 1 strictly below it.
struct SineBoundarySpec {
  double offset;
  double divisor;
  double frequency;

  static SineBoundarySpec high();
  static SineBoundarySpec low();

  double boundary(double x1) const;
  /// offset + sin(frequency x1)/divisor - x2
  double margin(double x1, double x2) const;
};

/// Throws DomainError outside [0,1]^2.
int label(const SineBoundarySpec& spec, const Vector& x);
int label_high(const Vector& x);
int label_low(const Vector& x);
LabelVector label_rows(const SineBoundarySpec& spec, const Matrix& x);

/// Unit square, the domain of both labelers.
BoxDomain unit_square();

struct LowDesignOptions {
  Index n_near_boundary = 30;
  Index n_space_filling = 15;
  double margin = 0.05;
};

/// LOW-level training set: points within `margin` (vertically, hence also
/// perpendicularly) of the LOW boundary plus a Latin hypercube over the square.
LabeledDataset make_low_fidelity_design(std::uint64_t seed, const LowDesignOptions& options = {});

/// HIGH-level seed design: a 500-point LOW-labeled LHS pool from which
/// n_high/2 points of each LOW class are picked, then labeled by the HIGH oracle.
LabeledDataset make_high_fidelity_seed(Index n_high, std::uint64_t seed, Index pool_size = 500);

}  // namespace mfgpc::synthetic

#endif  // MFGPC_SYNTHETIC_HPP
