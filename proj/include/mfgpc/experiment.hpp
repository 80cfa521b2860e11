#ifndef MFGPC_EXPERIMENT_HPP
#define MFGPC_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mfgpc/inference.hpp"
#include "mfgpc/model.hpp"

namespace mfgpc {

inline constexpr const char* kVersion = "0.1.0";

enum class ExperimentId { SyntheticSweep, SyntheticAl, Cardiac2d, Cardiac3d };
std::string to_string(ExperimentId id);
ExperimentId parse_experiment_id(const std::string& s);

struct SyntheticSettings {
  std::vector<Index> n_high = {10, 20, 30, 40, 50};
  Index n_test = 1000;
  Index pool_size = 500;
  int al_iterations = 24;
  Index al_initial_high = 10;
  /// Size of the non-active-learning comparison arm.
  Index non_al_high = 30;
  Index n_inducing = 30;
  double target_error = 10.0;
};

struct CardiacSettings {
  double dx_2d = 0.5;
  double dt_2d = 0.01;
  double dx_1d = 0.25;
  double dt_1d = 0.01;
  Index n_test = 200;
  /// LOW-level campaign (single-fidelity on the cable) for the 2-parameter study.
  Index low_initial = 10;
  Index low_target = 84;
  /// Size of the cable-labeled pool the balanced seeds come from.
  Index seed_pool = 500;
  Index high_initial = 10;
  Index high_target = 50;
  /// Candidate grid (points along s2 time and b) for the 2-parameter study.
  Index grid_time = 31;
  Index grid_b = 26;
  Index n_inducing = 30;
  /// 3-parameter study.
  Index low_sweep = 1000;
  Index low_positives = 109;
  Index low_negatives = 400;
  Index high_initial_3d = 30;
  Index n_inducing_3d = 50;
  int iterations_3d = 100;
  Index window_grid = 21;
};

struct ExperimentConfig {
  ExperimentId id = ExperimentId::SyntheticSweep;
  /// Empty selects the default set of the experiment.
  std::vector<ClassifierKind> kinds;
  SamplerConfig sampler;
  PredictionConfig prediction;
  double sparse_sigma = 0.1;
  int repeats = 10;
  std::uint64_t seed_base = 0;
  std::filesystem::path output_dir = "results";
  int workers = 1;
  bool export_traces = true;
  SyntheticSettings synthetic;
  CardiacSettings cardiac;

  std::vector<ClassifierKind> effective_kinds() const;
  /// Throws ConfigError.
  void validate() const;
};

/// JSON text <-> config. Unknown keys are rejected with ConfigError.
ExperimentConfig experiment_config_from_json(const std::string& text);
std::string experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
/// Reads the config line of a manifest written by run_experiment.
ExperimentConfig config_from_manifest(const std::filesystem::path& manifest);

/// Canonical JSON with the output directory and worker count removed; the
/// results depend on nothing else.
std::string canonical_config(const ExperimentConfig& config);
std::uint64_t config_hash(const ExperimentConfig& config);

enum class ExperimentStatus { Complete, Partial, Failed };

struct ExperimentResult {
  ExperimentStatus status = ExperimentStatus::Complete;
  std::vector<int> incomplete_repeats;
  std::vector<std::string> notes;
  std::filesystem::path manifest;

  /// 0 complete, 3 every repeat failed numerically, 4 partial.
  int exit_code() const;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Runs every repeat on a pool of `workers` threads and writes per-repeat
/// files under repeat_XX/, merged metric tables, summaries and manifest.txt.
/// Metric tables carry no wall times, so reruns are byte-identical.
ExperimentResult run_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});

}  // namespace mfgpc

#endif  // MFGPC_EXPERIMENT_HPP
