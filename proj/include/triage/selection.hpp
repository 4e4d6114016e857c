#pragma once

// Cross-validation, metrics, feature selection and hyperparameter search.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "triage/learners.hpp"
#include "triage/matrix.hpp"

namespace triage {

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  bool operator==(const Confusion&) const = default;
};

struct MetricsReport {
  std::optional<double> precision;  // undefined when nothing is predicted positive
  double accuracy = 0.0;
  std::optional<double> recall;  // undefined when there are no positives
  Confusion confusion;
  double threshold = 0.5;
};

/// Probability >= threshold predicts 1. Empty input raises Error{Evaluation}.
MetricsReport evaluate(std::span<const int> y_true, std::span<const double> y_prob, double threshold = 0.5);

/// k disjoint folds covering [0,n), sizes differing by at most one. With
/// labels, each class is spread round-robin so per-fold class counts also
/// differ by at most one. Indices inside a fold are ascending.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed,
                                                  std::span<const int> labels = {});

struct CvResult {
  double mean_accuracy = 0.0;
  double stddev_accuracy = 0.0;
  std::optional<double> mean_precision;  // mean over folds where defined
  std::optional<double> mean_recall;
  std::vector<double> fold_accuracy;
};

/// Stratified k-fold cross-validation of one family/hyperparameter setting.
CvResult cross_validate(Family family, const Matrix& x, std::span<const int> y, const ParamSet& params,
                        std::size_t k, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Feature selection

struct RfecvPoint {
  std::vector<std::size_t> features;  // column indices, ascending
  double mean_accuracy = 0.0;
  double std_error = 0.0;
};

struct RfecvResult {
  std::vector<std::size_t> selected;
  std::vector<RfecvPoint> curve;  // from all features down to one
};

/// Recursive elimination: score the current subset by k-fold CV, refit on
/// all rows, drop the `step` least important features, repeat down to one.
/// Picks the smallest subset whose mean accuracy is within one standard
/// error of the best. Families without importances raise Error{Selection}.
RfecvResult rfecv(Family family, const Matrix& x, std::span<const int> y, const ParamSet& params, std::size_t k,
                  std::size_t step, std::uint64_t seed);

/// Pearson correlation between a column and 0/1 labels; 0 for constant input.
double point_biserial(std::span<const double> column, std::span<const int> y);

/// Columns with |r| >= threshold; at least the single strongest column.
std::vector<std::size_t> correlation_filter(const Matrix& x, std::span<const int> y, double threshold = 0.05);

// ---------------------------------------------------------------------------
// Hyperparameter search

struct Dimension {
  std::string name;
  /// Discrete candidates. When empty the dimension samples [lo, hi].
  std::vector<double> values;
  double lo = 0.0;
  double hi = 0.0;
  bool log_scale = false;
  bool integer = false;
};

struct SearchSpace {
  std::vector<Dimension> dimensions;
  std::size_t budget = 10;
  std::uint64_t seed = 42;
};

struct LeaderboardEntry {
  std::size_t config_id = 0;
  ParamSet params;  // fully resolved
  CvResult score;
};

struct SearchResult {
  ParamSet best;
  double best_score = 0.0;
  std::vector<LeaderboardEntry> leaderboard;  // in evaluation order
};

/// Exhaustive Cartesian product of the discrete values (ignores budget).
SearchResult grid_search(Family family, const SearchSpace& space, const Matrix& x, std::span<const int> y,
                         std::size_t k, const ParamSet& base = {});

/// `budget` seeded draws.
SearchResult random_search(Family family, const SearchSpace& space, const Matrix& x, std::span<const int> y,
                           std::size_t k, const ParamSet& base = {});

/// `budget` seeded draws raced over rounds (GBT) or epochs (ANN), starting at
/// a quarter of the full resource and doubling while keeping the better half.
/// Other families fall back to random_search.
SearchResult successive_halving(Family family, const SearchSpace& space, const Matrix& x, std::span<const int> y,
                                std::size_t k, const ParamSet& base = {});
SearchResult successive_halving(Family family, std::span<const ParamSet> candidates, const Matrix& x,
                                std::span<const int> y, std::size_t k, std::uint64_t seed, const ParamSet& base = {});

/// `config_id,params,mean_accuracy,precision,recall`
std::string leaderboard_csv(const SearchResult& result);

/// Search space used by the training pipeline for a family.
SearchSpace default_search_space(Family family, std::size_t budget, std::uint64_t seed);

}  // namespace triage
