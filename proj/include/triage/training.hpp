#pragma once

// End-to-end training: split, IQR repair, scaling, RFECV feature selection,
// optional tuning, final GBT + ANN fits, held-out metrics and bundles.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "triage/core_types.hpp"
#include "triage/learners.hpp"
#include "triage/model_store.hpp"
#include "triage/predictor.hpp"
#include "triage/selection.hpp"

namespace triage {

enum class Tuning { None, Grid, Random, Halving };

std::string_view tuning_name(Tuning t);
std::optional<Tuning> tuning_from_name(std::string_view name);

struct TrainOptions {
  std::uint64_t seed = 42;  // split, folds, model seeds
  double test_fraction = 0.2;
  std::size_t k_folds = 5;
  /// IQR rules are fitted on the training split and applied to held-out and
  /// prediction inputs; this also repairs the training rows themselves.
  bool repair_training_rows = true;
  bool feature_selection = true;
  std::size_t rfecv_step = 2;
  /// Lighter boosting used only to rank features inside RFECV.
  ParamSet rfecv_params{{"n_rounds", 30}, {"learning_rate", 0.3}, {"max_depth", 3}};
  Tuning tuning = Tuning::None;
  std::size_t budget = 8;
  ParamSet gbt_params;
  ParamSet ann_params;
  /// Called with one line per pipeline step; may be empty.
  std::function<void(const std::string&)> progress;

  /// Stable text of every option that influences the result.
  std::string canonical_string() const;
};

struct ComplicationMetrics {
  Complication complication;
  MetricsReport gbt;
  MetricsReport ann;
  std::size_t features = 0;
};

struct TrainResult {
  std::vector<ComplicationBundle> bundles;
  std::vector<ComplicationMetrics> metrics;
  std::array<std::optional<RfecvResult>, kComplicationCount> rfecv;
  std::array<std::optional<SearchResult>, kComplicationCount> search;
};

/// Trains on the 32 canonical features; extra dataset columns are ignored.
/// `source` describes the data (e.g. the generator config) for the fingerprint.
TrainResult train_all(const LabeledDataset& data, const TrainOptions& options, const std::string& source);

/// Held-out metrics in one row per complication (accuracy, precision, recall
/// for GBT and ANN, four decimals).
std::string format_metrics_table(std::span<const ComplicationMetrics> metrics);
std::string format_metrics_table(const TrainResult& result);

/// Metrics of loaded models on a labeled dataset (threshold 0.5).
std::vector<ComplicationMetrics> evaluate_engine(const PredictionEngine& engine, const LabeledDataset& data);

/// Bundles, manifest, metrics.txt and (when tuned) leaderboard_<key>.csv.
void write_training_outputs(const TrainResult& result, const std::filesystem::path& out_dir);

}  // namespace triage
