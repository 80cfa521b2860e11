#ifndef MFGPC_DATASET_HPP
#define MFGPC_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mfgpc/types.hpp"

namespace mfgpc {

/// Axis-aligned box in the physical units of an application.
class BoxDomain {
 public:
  BoxDomain(Vector lower, Vector upper);

  static BoxDomain unit(Index dim);

  Index dim() const { return lower_.size(); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  Vector width() const { return upper_ - lower_; }

 private:
  Vector lower_;
  Vector upper_;
};

/// Affine per-feature map x -> (x - offset) / scale.
///
/// Built from a BoxDomain it sends the box onto [0,1]^D. The map is fixed by
/// the domain and never looks at sample statistics.
class Standardizer {
 public:
  Standardizer(Vector offset, Vector scale);
  explicit Standardizer(const BoxDomain& domain);

  const Vector& offset() const { return offset_; }
  const Vector& scale() const { return scale_; }
  Index dim() const { return offset_.size(); }

  /// Rows of `x` are samples.
  Matrix apply(const Matrix& x) const;
  Matrix invert(const Matrix& z) const;
  Vector apply_point(const Vector& x) const;
  Vector invert_point(const Vector& z) const;

 private:
  Vector offset_;
  Vector scale_;
};

/// Multi-fidelity labeled samples. Rows are block ordered: every LOW row
/// precedes every HIGH row.
class LabeledDataset {
 public:
  LabeledDataset() = default;
  explicit LabeledDataset(Index dim);
  LabeledDataset(Matrix inputs, LabelVector labels, std::vector<Fidelity> fidelity);

  static LabeledDataset from_levels(const Matrix& x_low, const LabelVector& y_low,
                                    const Matrix& x_high, const LabelVector& y_high);
  /// Every row tagged with `level`.
  static LabeledDataset single_level(const Matrix& x, const LabelVector& y, Fidelity level);

  Index size() const { return inputs_.rows(); }
  Index dim() const { return inputs_.cols(); }
  Index n_low() const { return n_low_; }
  Index n_high() const { return size() - n_low_; }
  bool empty() const { return size() == 0; }

  const Matrix& inputs() const { return inputs_; }
  const LabelVector& labels() const { return labels_; }
  const std::vector<Fidelity>& fidelity() const { return fidelity_; }

  Matrix low_inputs() const { return inputs_.topRows(n_low_); }
  Matrix high_inputs() const { return inputs_.bottomRows(n_high()); }
  LabelVector low_labels() const { return labels_.head(n_low_); }
  LabelVector high_labels() const { return labels_.tail(n_high()); }

  /// Copy with one HIGH row appended.
  LabeledDataset with_high(const Vector& x, int label) const;
  /// Only the HIGH rows, still tagged HIGH.
  LabeledDataset high_only() const;
  /// Same rows with every tag replaced by `level`.
  LabeledDataset retagged(Fidelity level) const;

  friend bool operator==(const LabeledDataset& a, const LabeledDataset& b);

 private:
  Matrix inputs_ = Matrix(0, 0);
  LabelVector labels_ = LabelVector(0);
  std::vector<Fidelity> fidelity_;
  Index n_low_ = 0;
};

/// Latin hypercube design of `n` points in `domain`: each column holds exactly
/// one point in each of the n equal-width strata. Deterministic for a seed.
Matrix latin_hypercube(const BoxDomain& domain, Index n, std::uint64_t seed);

/// Picks n_high/2 rows with label 1 and n_high/2 with label 0 from `pool`,
/// without replacement. Returns the selected input rows (ones first).
Matrix balanced_seed_selection(const LabeledDataset& pool, Index n_high, std::uint64_t seed);

/// CSV with header `x1,...,xD,y,fidelity`; fidelity is `L` or `H`.
void save_dataset(const LabeledDataset& dataset, const std::filesystem::path& path);
LabeledDataset load_dataset(const std::filesystem::path& path);

/// Plain numeric CSV (with a header line) for query matrices.
void save_matrix(const Matrix& m, const std::vector<std::string>& header,
                 const std::filesystem::path& path);
Matrix load_matrix(const std::filesystem::path& path);

}  // namespace mfgpc

#endif  // MFGPC_DATASET_HPP
