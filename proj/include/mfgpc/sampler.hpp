#ifndef MFGPC_SAMPLER_HPP
#define MFGPC_SAMPLER_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mfgpc/types.hpp"

namespace mfgpc {

/// Differentiable log density over an unconstrained vector.
class LogDensity {
 public:
  virtual ~LogDensity() = default;
  virtual Index dim() const = 0;
  /// Returns the log density, or -infinity for a rejected state. `grad` is
  /// resized and filled whenever the value is finite.
  virtual double log_density(const Vector& q, Vector& grad) const = 0;
  /// Starting point for a chain; defaults to uniform(-2, 2) per coordinate.
  virtual Vector initial_point(std::mt19937_64& rng) const;
};

enum class SamplerAlgorithm { Nuts, Hmc };

struct SamplerConfig {
  int n_chains = 2;
  int n_warmup = 1000;
  int n_samples = 1000;
  double target_accept = 0.95;
  int max_tree_depth = 10;
  std::uint64_t seed = 0;
  SamplerAlgorithm algorithm = SamplerAlgorithm::Nuts;
  /// Mean leapfrog count of the static sampler; each trajectory draws its
  /// length uniformly from [hmc_steps/2, 3*hmc_steps/2].
  int hmc_steps = 16;
  bool adapt_metric = true;
  int max_consecutive_warmup_divergences = 100;

  void validate() const;
};

struct DrawStats {
  double accept_stat = 0.0;
  double step_size = 0.0;
  int tree_depth = 0;
  int n_leapfrog = 0;
  bool divergent = false;
  double energy = 0.0;
  double log_density = 0.0;
};

struct ChainResult {
  int chain = 0;
  /// Post-warmup draws, one per row, in the unconstrained space.
  Matrix draws;
  std::vector<DrawStats> stats;
  double step_size = 0.0;
  Vector inv_metric;
  int warmup_divergences = 0;
  int sampling_divergences = 0;

  double mean_accept_stat() const;
};

/// One leapfrog step with diagonal inverse metric; `grad` and `logp` are
/// updated at the new position. Returns false when the density is rejected.
bool leapfrog(const LogDensity& target, Vector& q, Vector& p, Vector& grad, double& logp, double step,
              const Vector& inv_metric);

/// Dual-averaging step size adaptation towards a target acceptance statistic.
class DualAveraging {
 public:
  explicit DualAveraging(double target, double gamma = 0.05, double t0 = 10.0, double kappa = 0.75)
      : target_(target), gamma_(gamma), t0_(t0), kappa_(kappa) {}

  void restart(double initial_step);
  /// Feeds one acceptance statistic and returns the next step size.
  double update(double accept_stat);
  double final_step() const;

 private:
  double target_, gamma_, t0_, kappa_;
  double mu_ = 0.0;
  double counter_ = 0.0;
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
};

ChainResult run_chain(const LogDensity& target, const SamplerConfig& config, int chain_index);

/// Runs all chains concurrently; results are ordered by chain index and do
/// not depend on thread scheduling.
std::vector<ChainResult> run_chains(const LogDensity& target, const SamplerConfig& config);

}  // namespace mfgpc

#endif  // MFGPC_SAMPLER_HPP
