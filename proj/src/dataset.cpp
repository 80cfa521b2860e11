#include "mfgpc/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "csv_util.hpp"

namespace mfgpc {

BoxDomain::BoxDomain(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) {
    throw DimensionError("BoxDomain: lower and upper bounds differ in length");
  }
  for (Index i = 0; i < lower_.size(); ++i) {
    if (!(lower_[i] < upper_[i])) {
      throw DomainError("BoxDomain: lower[" + std::to_string(i) + "] must be < upper");
    }
  }
}

BoxDomain BoxDomain::unit(Index dim) { return BoxDomain(Vector::Zero(dim), Vector::Ones(dim)); }

Standardizer::Standardizer(Vector offset, Vector scale) : offset_(std::move(offset)), scale_(std::move(scale)) {
  if (offset_.size() != scale_.size()) throw DimensionError("Standardizer: size mismatch");
  if ((scale_.array() <= 0.0).any()) throw DomainError("Standardizer: scale entries must be > 0");
}

Standardizer::Standardizer(const BoxDomain& domain) : Standardizer(domain.lower(), domain.width()) {}

Matrix Standardizer::apply(const Matrix& x) const {
  if (x.cols() != dim()) throw DimensionError("Standardizer::apply: column count mismatch");
  return (x.rowwise() - offset_.transpose()).array().rowwise() / scale_.transpose().array();
}

Matrix Standardizer::invert(const Matrix& z) const {
  if (z.cols() != dim()) throw DimensionError("Standardizer::invert: column count mismatch");
  return (z.array().rowwise() * scale_.transpose().array()).matrix().rowwise() + offset_.transpose();
}

Vector Standardizer::apply_point(const Vector& x) const {
  return (x - offset_).cwiseQuotient(scale_);
}

Vector Standardizer::invert_point(const Vector& z) const {
  return z.cwiseProduct(scale_) + offset_;
}

// ---------------------------------------------------------------------------

LabeledDataset::LabeledDataset(Index dim) : inputs_(0, dim), labels_(0) {}

LabeledDataset::LabeledDataset(Matrix inputs, LabelVector labels, std::vector<Fidelity> fidelity)
    : inputs_(std::move(inputs)), labels_(std::move(labels)), fidelity_(std::move(fidelity)) {
  if (inputs_.rows() != labels_.size() || labels_.size() != static_cast<Index>(fidelity_.size())) {
    throw DimensionError("LabeledDataset: inputs, labels and fidelity must have equal length");
  }
  for (Index i = 0; i < labels_.size(); ++i) {
    if (labels_[i] != 0 && labels_[i] != 1) {
      throw SchemaError("LabeledDataset: label at row " + std::to_string(i) + " is not 0 or 1");
    }
  }
  n_low_ = 0;
  bool seen_high = false;
  for (auto f : fidelity_) {
    if (f == Fidelity::Low) {
      if (seen_high) throw SchemaError("LabeledDataset: LOW rows must precede HIGH rows");
      ++n_low_;
    } else {
      seen_high = true;
    }
  }
}

LabeledDataset LabeledDataset::from_levels(const Matrix& x_low, const LabelVector& y_low,
                                           const Matrix& x_high, const LabelVector& y_high) {
  if (x_low.rows() > 0 && x_high.rows() > 0 && x_low.cols() != x_high.cols()) {
    throw DimensionError("LabeledDataset::from_levels: feature dimension mismatch");
  }
  const Index dim = x_low.rows() > 0 ? x_low.cols() : x_high.cols();
  Matrix x(x_low.rows() + x_high.rows(), dim);
  if (x_low.rows() > 0) x.topRows(x_low.rows()) = x_low;
  if (x_high.rows() > 0) x.bottomRows(x_high.rows()) = x_high;
  LabelVector y(y_low.size() + y_high.size());
  y << y_low, y_high;
  std::vector<Fidelity> fid(static_cast<std::size_t>(x_low.rows()), Fidelity::Low);
  fid.resize(static_cast<std::size_t>(x.rows()), Fidelity::High);
  return LabeledDataset(std::move(x), std::move(y), std::move(fid));
}

LabeledDataset LabeledDataset::single_level(const Matrix& x, const LabelVector& y, Fidelity level) {
  return LabeledDataset(x, y, std::vector<Fidelity>(static_cast<std::size_t>(x.rows()), level));
}

LabeledDataset LabeledDataset::with_high(const Vector& x, int label) const {
  if (!empty() && x.size() != dim()) throw DimensionError("with_high: dimension mismatch");
  Matrix in(size() + 1, x.size());
  if (size() > 0) in.topRows(size()) = inputs_;
  in.row(size()) = x.transpose();
  LabelVector y(size() + 1);
  y << labels_, label;
  auto fid = fidelity_;
  fid.push_back(Fidelity::High);
  return LabeledDataset(std::move(in), std::move(y), std::move(fid));
}

LabeledDataset LabeledDataset::high_only() const {
  return single_level(high_inputs(), high_labels(), Fidelity::High);
}

LabeledDataset LabeledDataset::retagged(Fidelity level) const {
  LabeledDataset out = single_level(inputs_, labels_, level);
  if (empty()) out.inputs_.resize(0, dim());
  return out;
}

bool operator==(const LabeledDataset& a, const LabeledDataset& b) {
  return a.inputs_.rows() == b.inputs_.rows() && a.inputs_.cols() == b.inputs_.cols() &&
         a.inputs_ == b.inputs_ && a.labels_ == b.labels_ && a.fidelity_ == b.fidelity_;
}

// ---------------------------------------------------------------------------

Matrix latin_hypercube(const BoxDomain& domain, Index n, std::uint64_t seed) {
  if (n <= 0) throw DomainError("latin_hypercube: empty design (n must be >= 1)");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Index d = domain.dim();
  Matrix out(n, d);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (Index j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    const double lo = domain.lower()[j];
    const double w = domain.upper()[j] - lo;
    for (Index i = 0; i < n; ++i) {
      const double u = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + unif(rng)) / static_cast<double>(n);
      out(i, j) = lo + w * std::min(u, std::nextafter(1.0, 0.0));
    }
  }
  return out;
}

Matrix balanced_seed_selection(const LabeledDataset& pool, Index n_high, std::uint64_t seed) {
  if (n_high <= 0 || n_high % 2 != 0) {
    throw DomainError("balanced_seed_selection: n_high must be a positive even count");
  }
  std::vector<Index> ones, zeros;
  for (Index i = 0; i < pool.size(); ++i) (pool.labels()[i] == 1 ? ones : zeros).push_back(i);
  const auto half = static_cast<std::size_t>(n_high / 2);
  if (ones.size() < half) {
    throw ImbalanceError(1, "balanced_seed_selection: class 1 has " + std::to_string(ones.size()) +
                      " points, need " + std::to_string(half));
  }
  if (zeros.size() < half) {
    throw ImbalanceError(0, "balanced_seed_selection: class 0 has " + std::to_string(zeros.size()) +
                      " points, need " + std::to_string(half));
  }
  std::mt19937_64 rng(seed);
  std::shuffle(ones.begin(), ones.end(), rng);
  std::shuffle(zeros.begin(), zeros.end(), rng);
  Matrix out(n_high, pool.dim());
  for (std::size_t k = 0; k < half; ++k) {
    out.row(static_cast<Index>(k)) = pool.inputs().row(ones[k]);
    out.row(static_cast<Index>(half + k)) = pool.inputs().row(zeros[k]);
  }
  return out;
}

// ---------------------------------------------------------------------------

void save_dataset(const LabeledDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (Index j = 0; j < dataset.dim(); ++j) out << 'x' << (j + 1) << ',';
  out << "y,fidelity\n";
  for (Index i = 0; i < dataset.size(); ++i) {
    for (Index j = 0; j < dataset.dim(); ++j) out << detail::format_double(dataset.inputs()(i, j)) << ',';
    out << dataset.labels()[i] << ',' << to_string(dataset.fidelity()[static_cast<std::size_t>(i)]) << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  const auto header = detail::split_csv(detail::trim(line));
  if (header.size() < 2 || detail::trim(header[header.size() - 2]) != "y" ||
      detail::trim(header.back()) != "fidelity") {
    throw ParseError(1, "header must end with y,fidelity");
  }
  const auto dim = static_cast<Index>(header.size() - 2);
  for (Index j = 0; j < dim; ++j) {
    if (detail::trim(header[static_cast<std::size_t>(j)]) != "x" + std::to_string(j + 1)) {
      throw ParseError(1, "expected column x" + std::to_string(j + 1));
    }
  }
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::vector<Fidelity> fid;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto tok = detail::split_csv(line);
    if (tok.size() != header.size()) {
      throw ParseError(lineno, "expected " + std::to_string(header.size()) + " fields, got " +
                                   std::to_string(tok.size()));
    }
    std::vector<double> row(static_cast<std::size_t>(dim));
    for (Index j = 0; j < dim; ++j) row[static_cast<std::size_t>(j)] = detail::parse_double(tok[static_cast<std::size_t>(j)], lineno);
    const auto y = detail::parse_int(tok[static_cast<std::size_t>(dim)], lineno);
    if (y != 0 && y != 1) throw SchemaError("line " + std::to_string(lineno) + ": label must be 0 or 1");
    const auto f = detail::trim(tok.back());
    if (f == "L") {
      fid.push_back(Fidelity::Low);
    } else if (f == "H") {
      fid.push_back(Fidelity::High);
    } else {
      throw SchemaError("line " + std::to_string(lineno) + ": unknown fidelity tag '" + std::string(f) + "'");
    }
    rows.push_back(std::move(row));
    labels.push_back(static_cast<int>(y));
  }
  Matrix x(static_cast<Index>(rows.size()), dim);
  LabelVector y(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Index j = 0; j < dim; ++j) x(static_cast<Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
    y[static_cast<Index>(i)] = labels[i];
  }
  return LabeledDataset(std::move(x), std::move(y), std::move(fid));
}

void save_matrix(const Matrix& m, const std::vector<std::string>& header, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << detail::format_double(m(i, j));
    out << '\n';
  }
}

Matrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  const auto cols = detail::split_csv(detail::trim(line)).size();
  std::vector<double> values;
  std::size_t lineno = 1, nrows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto tok = detail::split_csv(line);
    if (tok.size() != cols) throw ParseError(lineno, "wrong field count");
    for (auto t : tok) values.push_back(detail::parse_double(t, lineno));
    ++nrows;
  }
  Matrix m(static_cast<Index>(nrows), static_cast<Index>(cols));
  for (std::size_t i = 0; i < nrows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = values[i * cols + j];
  return m;
}

}  // namespace mfgpc
