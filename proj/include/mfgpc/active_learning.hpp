#ifndef MFGPC_ACTIVE_LEARNING_HPP
#define MFGPC_ACTIVE_LEARNING_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mfgpc/inference.hpp"

namespace mfgpc {

constexpr double kSigmaFloor = 1e-8;

struct AcquisitionScore {
  Index index = 0;
  double mu_hat = 0.0;
  double sigma_hat = 0.0;
  double score = 0.0;
};

/// |mu| / max(sigma, 1e-8)
double acquisition_score(double mu_hat, double sigma_hat);

struct Selection {
  Index index = 0;
  std::vector<AcquisitionScore> scores;
};

/// Argmin of the score over candidates given Monte Carlo moments of f*;
/// ties go to the lowest index. Throws NumericalError when no score is finite.
Selection select_next(const Vector& mu_hat, const Vector& var_hat);
Selection select_next(const PosteriorTrace& trace, const GpClassifier& model, const Matrix& candidates,
                      const PredictionConfig& prediction = {});

enum class PoolStrategy { FreshLhs, FixedGrid };

/// HIGH-level labeler in model coordinates. Exceptions halt the campaign.
using HighOracle = std::function<int(const Vector& x)>;

struct CampaignConfig {
  int iterations = 24;
  PoolStrategy pool = PoolStrategy::FreshLhs;
  /// LHS size per iteration (FreshLhs) over the unit box of the model coordinates.
  Index pool_size = 500;
  /// Candidate rows for FixedGrid; acquired rows are removed.
  Matrix grid;
  std::uint64_t seed = 0;
  ModelConfig model;
  SamplerConfig sampler;
  PredictionConfig prediction;
  /// Optional test set for per-iteration error.
  Matrix test_x;
  LabelVector test_y;
  /// When set, the log is rewritten after every row so a halted campaign
  /// leaves its partial log on disk.
  std::optional<std::filesystem::path> log_path;
  /// Called after every successful fit (iteration 0 is the initial one).
  std::function<void(int iteration, const PosteriorTrace&, const GpClassifier&)> on_fit;
};

/// Row 0 is the initial fit (no acquisition); row i >= 1 records the i-th
/// acquired point and the test error of the model retrained with it.
struct CampaignRow {
  int iteration = 0;
  Vector x;
  int y = -1;
  double score = 0.0;
  Index n_high = 0;
  double test_error = 0.0;  // percent, NaN without a test set
  double wall_time = 0.0;   // seconds
};

struct CampaignLog {
  std::vector<CampaignRow> rows;
  LabeledDataset final_data;
  bool complete = true;
  std::string failure;

  /// Rows with an acquisition.
  std::size_t n_acquisitions() const { return rows.empty() ? 0 : rows.size() - 1; }
  /// (n_high, test_error) for every row.
  std::vector<std::pair<Index, double>> trajectory() const;
};

/// Train, select, label, append, repeat. SF models see only the HIGH rows
/// of the data; MF kinds see all of it. Retraining starts from scratch.
CampaignLog run_campaign(const LabeledDataset& initial, const CampaignConfig& config, const HighOracle& oracle);

/// CSV: iteration,x1..xD,y,score,n_high,test_error,wall_time
void save_campaign_log(const CampaignLog& log, Index dim, const std::filesystem::path& path);
/// Same rows without the wall-time column, for reproducibility checks.
void save_campaign_metrics(const CampaignLog& log, Index dim, const std::filesystem::path& path);

/// Percent of misclassified test points for one trained model.
double classification_error(const PosteriorTrace& trace, const GpClassifier& model, const Matrix& x,
                            const LabelVector& y, const PredictionConfig& prediction = {});

}  // namespace mfgpc

#endif  // MFGPC_ACTIVE_LEARNING_HPP
