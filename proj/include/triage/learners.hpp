#pragma once

// Binary classifiers behind one contract: fit on a labeled matrix, predict a
// probability in [0,1], report feature importances where they are defined.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "triage/matrix.hpp"

namespace triage {

enum class Family { Gbt, Ann, Lr, Nb, Knn, Svm, Rf, DecisionTree };

inline constexpr std::array<Family, 8> kAllFamilies = {Family::Gbt, Family::Ann, Family::Lr,  Family::Nb,
                                                       Family::Knn, Family::Svm, Family::Rf, Family::DecisionTree};

std::string_view family_name(Family f);
Family family_from_name(std::string_view name);

/// Hyperparameters by name. Integer-valued settings are stored as doubles.
using ParamSet = std::map<std::string, double>;

ParamSet default_params(Family f);
/// Defaults overlaid with `overrides`; unknown names raise Error{Config}.
ParamSet resolve_params(Family f, const ParamSet& overrides);
std::string format_params(const ParamSet& params);

struct GbtHyperparams {
  int n_rounds = 200;
  double learning_rate = 0.1;
  int max_depth = 4;
  double lambda = 1.0;
  double min_child_weight = 1.0;
  double subsample = 1.0;
  double positive_weight = 1.0;
  /// When false the boosting starts from `base_score` instead of the
  /// log-odds of the weighted base rate.
  bool init_from_base_rate = true;
  double base_score = 0.0;
  std::uint64_t seed = 0;

  static GbtHyperparams from(const ParamSet& params);
};

struct AnnHyperparams {
  std::array<int, 2> hidden_sizes{32, 16};
  int epochs = 200;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double l2 = 0.0;
  std::uint64_t seed = 0;

  static AnnHyperparams from(const ParamSet& params);
};

// ---------------------------------------------------------------------------
// Learned state

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool operator==(const TreeNode&) const = default;
};

/// Binary tree stored as a node array; x[feature] <= threshold goes left.
struct Tree {
  std::vector<TreeNode> nodes;

  double evaluate(std::span<const double> x) const;
  bool operator==(const Tree&) const = default;
};

struct GbtState {
  double base_score = 0.0;
  double learning_rate = 0.1;
  std::vector<Tree> trees;  // leaf values are unshrunk weights -G/(H+lambda)
  std::vector<double> gain;

  bool operator==(const GbtState&) const = default;
};

struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;  // outputs x inputs, row-major
  std::vector<double> bias;

  bool operator==(const DenseLayer&) const = default;
};

/// Two rectified hidden layers and one sigmoid output unit.
struct AnnState {
  std::array<DenseLayer, 3> layers;

  bool operator==(const AnnState&) const = default;
};

struct LinearState {
  std::vector<double> weights;
  double intercept = 0.0;

  bool operator==(const LinearState&) const = default;
};

struct NbState {
  std::vector<bool> binary;                      // Bernoulli vs Gaussian per feature
  std::array<double, 2> log_prior{};             // index = class
  std::array<std::vector<double>, 2> p_one;      // Bernoulli P(x=1 | class)
  std::array<std::vector<double>, 2> mean;       // Gaussian
  std::array<std::vector<double>, 2> variance;   // Gaussian (smoothed)

  bool operator==(const NbState&) const = default;
};

struct KnnState {
  int k = 5;
  Matrix points;
  std::vector<int> labels;

  bool operator==(const KnnState&) const = default;
};

struct SvmState {
  LinearState margin;
  double platt_a = -1.0;  // P(y=1|f) = 1 / (1 + exp(a*f + b))
  double platt_b = 0.0;

  bool operator==(const SvmState&) const = default;
};

struct ForestState {
  std::vector<Tree> trees;  // leaf value = positive class frequency
  std::vector<double> gain;

  bool operator==(const ForestState&) const = default;
};

using ModelState = std::variant<GbtState, AnnState, LinearState, NbState, KnnState, SvmState, ForestState>;

class TrainedModel {
 public:
  TrainedModel(Family family, ParamSet hyperparams, std::vector<std::string> feature_names, ModelState state);

  Family family() const noexcept { return family_; }
  const ParamSet& hyperparams() const noexcept { return hyperparams_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  std::size_t width() const noexcept { return feature_names_.size(); }
  const ModelState& state() const noexcept { return state_; }

  /// Throws Error{Shape} unless |x| == width().
  double predict_proba(std::span<const double> x) const;

  /// Normalized total gain (trees) or |weight| (linear models); nullopt for
  /// families without a meaningful importance (NB, KNN, ANN).
  std::optional<std::vector<double>> feature_importance() const;

  nlohmann::json to_json() const;
  static TrainedModel from_json(const nlohmann::json& j);

  bool operator==(const TrainedModel&) const = default;

 private:
  Family family_;
  ParamSet hyperparams_;
  std::vector<std::string> feature_names_;
  ModelState state_;
};

/// Fits one model. `y` holds 0/1 labels. Default feature names are f0..f(d-1).
/// Errors: Error{Fit} for a single-class target (except KNN) or too few rows,
/// Error{Data} for non-finite inputs, Error{Shape} for length mismatches.
TrainedModel fit(Family family, const Matrix& x, std::span<const int> y, const ParamSet& params = {},
                 std::vector<std::string> feature_names = {});

inline double predict_proba(const TrainedModel& model, std::span<const double> x) { return model.predict_proba(x); }
inline std::optional<std::vector<double>> feature_importance(const TrainedModel& model) {
  return model.feature_importance();
}

/// Gradient boosting fit that also reports mean training log-loss after
/// each round (index 0 = before the first tree).
struct GbtTrace {
  std::vector<double> training_loss;
};
TrainedModel fit_gbt_traced(const Matrix& x, std::span<const int> y, const ParamSet& params, GbtTrace& trace,
                            std::vector<std::string> feature_names = {});

// ---------------------------------------------------------------------------
// Objectives exposed for gradient verification.

struct Objective {
  double loss = 0.0;
  std::vector<double> gradient;
};

/// Mean binary cross-entropy plus (l2/2)*||w||^2 (intercept excluded).
Objective logistic_objective(const LinearState& model, const Matrix& x, std::span<const int> y, double l2);
std::vector<double> flatten(const LinearState& model);
LinearState unflatten_linear(std::span<const double> params, std::size_t width);

/// Mean binary cross-entropy plus (l2/2)*sum of squared weights (biases excluded).
Objective ann_objective(const AnnState& model, const Matrix& x, std::span<const int> y, double l2);
std::vector<double> flatten(const AnnState& model);
AnnState unflatten_ann(std::span<const double> params, const AnnState& shape);
AnnState init_ann(std::size_t inputs, std::array<int, 2> hidden_sizes, std::uint64_t seed);
double ann_forward(const AnnState& model, std::span<const double> x);

double sigmoid(double z);

}  // namespace triage
