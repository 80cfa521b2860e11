#ifndef MFGPC_TRACE_HPP
#define MFGPC_TRACE_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "mfgpc/sampler.hpp"
#include "mfgpc/types.hpp"

namespace mfgpc {

struct ParameterDiagnostics {
  std::string name;
  double rhat = 0.0;
  double ess = 0.0;
};

/// Retained draws of every chain, chain-major: row r belongs to chain
/// chain[r], draw index draw[r]. Hyperparameters are stored constrained,
/// latents whitened.
struct PosteriorTrace {
  std::vector<std::string> names;
  Matrix values;
  std::vector<int> chain;
  std::vector<int> draw;
  std::vector<DrawStats> stats;  // empty for imported traces
  std::vector<ParameterDiagnostics> diagnostics;

  Index n_draws() const { return values.rows(); }
  Index n_parameters() const { return values.cols(); }
  int n_chains() const;
  /// Column index of a parameter; throws SchemaError when unknown.
  Index index_of(const std::string& name) const;
  /// Draws of one parameter split by chain.
  std::vector<Vector> by_chain(Index column) const;
  int divergences() const;
  double max_rhat() const;
  double min_ess() const;
};

/// Split potential scale reduction over chains of equal length.
double split_rhat(const std::vector<Vector>& chains);
/// Effective sample size using autocorrelations pooled across chains and
/// Geyer's initial monotone sequence.
double effective_sample_size(const std::vector<Vector>& chains);

void compute_diagnostics(PosteriorTrace& trace);

/// Long-format CSV with columns chain,draw,parameter,value.
void export_trace(const PosteriorTrace& trace, const std::filesystem::path& path);
PosteriorTrace import_trace(const std::filesystem::path& path);

}  // namespace mfgpc

#endif  // MFGPC_TRACE_HPP
