#ifndef MFGPC_TYPES_HPP
#define MFGPC_TYPES_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mfgpc {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using LabelVector = Eigen::VectorXi;

/// Information source of a labeled sample. LOW is the cheap approximation,
/// HIGH the expensive reference.
enum class Fidelity : std::uint8_t { Low, High };

inline const char* to_string(Fidelity f) { return f == Fidelity::Low ? "L" : "H"; }

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameter outside its admissible domain (nonpositive variance, lengthscale, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Cholesky failed even at the largest jitter of the ladder.
class FactorizationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Not enough samples of one class for a balanced selection.
class ImbalanceError : public Error {
 public:
  ImbalanceError(int deficient_class, const std::string& what)
      : Error(what), deficient_class_(deficient_class) {}
  int deficient_class() const { return deficient_class_; }

 private:
  int deficient_class_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure that is not a factorization problem (sampler divergence,
/// simulator blowup, degenerate prediction).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Derives an independent seed for a sub-stream (splitmix64 finalizer).
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace mfgpc

#endif  // MFGPC_TYPES_HPP
