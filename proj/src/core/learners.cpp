#include "triage/learners.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "random.hpp"
#include "trees.hpp"
#include "ann_fit.hpp"
#include "triage/error.hpp"

namespace triage {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 8> kFamilyNames = {"gbt", "ann", "lr", "nb", "knn", "svm", "rf", "tree"};

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double param(const ParamSet& p, const std::string& name) {
  auto it = p.find(name);
  if (it == p.end()) throw Error(ErrorCode::Config, "missing hyperparameter " + name, name);
  return it->second;
}

int int_param(const ParamSet& p, const std::string& name) { return static_cast<int>(std::lround(param(p, name))); }

std::uint64_t seed_param(const ParamSet& p) { return static_cast<std::uint64_t>(std::llround(param(p, "seed"))); }

void check_inputs(Family family, const Matrix& x, std::span<const int> y) {
  if (x.rows() != y.size()) {
    throw Error(ErrorCode::Shape, "feature matrix has " + std::to_string(x.rows()) + " rows but " +
                                      std::to_string(y.size()) + " labels");
  }
  if (x.cols() == 0) throw Error(ErrorCode::Shape, "feature matrix has no columns");
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::Data, "feature matrix contains NaN or infinity");
  }
  std::size_t positives = 0;
  for (int label : y) {
    if (label != 0 && label != 1) throw Error(ErrorCode::Data, "labels must be 0 or 1");
    positives += label;
  }
  if (family == Family::Knn) return;
  if (x.rows() < 2) throw Error(ErrorCode::Fit, "need at least 2 rows to fit " + std::string(family_name(family)));
  if (positives == 0 || positives == y.size()) {
    throw Error(ErrorCode::Fit, "single-class target; " + std::string(family_name(family)) + " needs both classes");
  }
}

std::vector<double> normalized(std::vector<double> v) {
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  if (total > 0.0) {
    for (auto& x : v) x /= total;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Gradient boosting

TrainedModel fit_gbt_impl(const Matrix& x, std::span<const int> y, const ParamSet& params,
                          std::vector<std::string> names, GbtTrace* trace) {
  const auto hp = GbtHyperparams::from(params);
  const std::size_t n = x.rows();
  std::vector<double> weight(n);
  double wy = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    weight[i] = y[i] ? hp.positive_weight : 1.0;
    wy += weight[i] * y[i];
    wsum += weight[i];
  }

  GbtState state;
  state.learning_rate = hp.learning_rate;
  if (hp.init_from_base_rate) {
    const double p0 = std::clamp(wy / wsum, 1e-6, 1.0 - 1e-6);
    state.base_score = std::log(p0 / (1.0 - p0));
  } else {
    state.base_score = hp.base_score;
  }

  std::vector<double> score(n, state.base_score);
  auto mean_loss = [&] {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += weight[i] * (softplus(score[i]) - y[i] * score[i]);
    return total / wsum;
  };
  if (trace) trace->training_loss = {mean_loss()};

  const auto sorted = detail::SortedColumns::build(x);
  detail::TreeGrowth growth;
  growth.criterion = detail::SplitCriterion::Newton;
  growth.max_depth = hp.max_depth;
  growth.lambda = hp.lambda;
  growth.min_child = hp.min_child_weight;

  detail::Rng rng(hp.seed);
  std::vector<double> grad(n), hess(n);
  std::vector<char> included(n, 1);
  state.gain.assign(x.cols(), 0.0);

  for (int round = 0; round < hp.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(score[i]);
      grad[i] = weight[i] * (p - y[i]);
      hess[i] = weight[i] * p * (1.0 - p);
    }
    if (hp.subsample < 1.0) {
      for (std::size_t i = 0; i < n; ++i) included[i] = rng.bernoulli(hp.subsample) ? 1 : 0;
    }
    Tree tree = detail::grow_tree(x, sorted, grad, hess, included, growth, state.gain, nullptr);
    for (std::size_t i = 0; i < n; ++i) score[i] += hp.learning_rate * tree.evaluate(x.row(i));
    state.trees.push_back(std::move(tree));
    if (trace) trace->training_loss.push_back(mean_loss());
  }

  return TrainedModel(Family::Gbt, params, std::move(names), std::move(state));
}

// ---------------------------------------------------------------------------
// Logistic regression

LinearState fit_linear_logistic(const Matrix& x, std::span<const int> y, double learning_rate, int epochs,
                                double l2) {
  LinearState model;
  model.weights.assign(x.cols(), 0.0);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const auto obj = logistic_objective(model, x, y, l2);
    for (std::size_t j = 0; j < x.cols(); ++j) model.weights[j] -= learning_rate * obj.gradient[j];
    model.intercept -= learning_rate * obj.gradient.back();
  }
  return model;
}

double linear_score(const LinearState& m, std::span<const double> x) {
  double z = m.intercept;
  for (std::size_t j = 0; j < x.size(); ++j) z += m.weights[j] * x[j];
  return z;
}

// ---------------------------------------------------------------------------
// Naive Bayes

bool is_binary_column(const Matrix& x, std::size_t c) {
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double v = x(r, c);
    if (v != 0.0 && v != 1.0) return false;
  }
  return true;
}

NbState fit_nb(const Matrix& x, std::span<const int> y, double alpha, double var_smoothing) {
  const std::size_t d = x.cols();
  NbState s;
  s.binary.resize(d);
  for (std::size_t j = 0; j < d; ++j) s.binary[j] = is_binary_column(x, j);

  std::array<double, 2> count{};
  for (int label : y) count[label] += 1.0;
  const double n = static_cast<double>(y.size());
  double max_var = 0.0;
  for (int c = 0; c < 2; ++c) {
    s.log_prior[c] = std::log(count[c] / n);
    s.p_one[c].assign(d, 0.0);
    s.mean[c].assign(d, 0.0);
    s.variance[c].assign(d, 0.0);
  }
  for (std::size_t j = 0; j < d; ++j) {
    std::array<double, 2> ones{}, sum{}, sq{};
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const int c = y[r];
      const double v = x(r, j);
      ones[c] += v >= 0.5 ? 1.0 : 0.0;
      sum[c] += v;
    }
    for (int c = 0; c < 2; ++c) {
      s.p_one[c][j] = (ones[c] + alpha) / (count[c] + 2.0 * alpha);
      s.mean[c][j] = sum[c] / count[c];
    }
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const int c = y[r];
      const double dv = x(r, j) - s.mean[y[r]][j];
      sq[c] += dv * dv;
    }
    for (int c = 0; c < 2; ++c) {
      s.variance[c][j] = sq[c] / count[c];
      if (!s.binary[j]) max_var = std::max(max_var, s.variance[c][j]);
    }
  }
  const double epsilon = var_smoothing * (max_var > 0.0 ? max_var : 1.0);
  for (int c = 0; c < 2; ++c) {
    for (std::size_t j = 0; j < d; ++j) {
      if (s.binary[j]) {
        s.mean[c][j] = 0.0;
        s.variance[c][j] = 0.0;
      } else {
        s.variance[c][j] += epsilon;
        s.p_one[c][j] = 0.0;
      }
    }
  }
  return s;
}

double nb_predict(const NbState& s, std::span<const double> x) {
  std::array<double, 2> log_joint = s.log_prior;
  for (int c = 0; c < 2; ++c) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (s.binary[j]) {
        log_joint[c] += x[j] >= 0.5 ? std::log(s.p_one[c][j]) : std::log1p(-s.p_one[c][j]);
      } else {
        const double var = s.variance[c][j];
        const double dv = x[j] - s.mean[c][j];
        log_joint[c] += -0.5 * std::log(2.0 * M_PI * var) - dv * dv / (2.0 * var);
      }
    }
  }
  return sigmoid(log_joint[1] - log_joint[0]);
}

// ---------------------------------------------------------------------------
// k nearest neighbours

double knn_predict(const KnnState& s, std::span<const double> x) {
  const std::size_t n = s.points.rows();
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d2 = 0.0;
    auto p = s.points.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) d2 += (p[j] - x[j]) * (p[j] - x[j]);
    dist[i] = {d2, i};
  }
  const auto k = static_cast<std::size_t>(s.k);
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  double positives = 0.0;
  for (std::size_t i = 0; i < k; ++i) positives += s.labels[dist[i].second];
  return positives / static_cast<double>(k);
}

// ---------------------------------------------------------------------------
// Linear SVM with Platt calibration

struct PlattFit {
  double a;
  double b;
};

// Newton iterations with backtracking on the regularized-target likelihood.
PlattFit fit_platt(std::span<const double> f, std::span<const int> y) {
  double prior1 = 0.0, prior0 = 0.0;
  for (int label : y) (label ? prior1 : prior0) += 1.0;
  const double hi = (prior1 + 1.0) / (prior1 + 2.0);
  const double lo = 1.0 / (prior0 + 2.0);
  std::vector<double> t(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) t[i] = y[i] ? hi : lo;

  double a = 0.0;
  double b = std::log((prior0 + 1.0) / (prior1 + 1.0));
  auto objective = [&](double aa, double bb) {
    double total = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double z = aa * f[i] + bb;
      // -[t log p + (1-t) log(1-p)] with p = 1/(1+exp(z))
      total += t[i] * softplus(z) + (1.0 - t[i]) * softplus(-z);
    }
    return total;
  };
  double value = objective(a, b);
  for (int iter = 0; iter < 100; ++iter) {
    double h11 = 1e-12, h22 = 1e-12, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double z = a * f[i] + b;
      const double p = sigmoid(-z);  // model probability of class 1
      const double q = 1.0 - p;
      const double d2 = p * q;
      h11 += f[i] * f[i] * d2;
      h22 += d2;
      h21 += f[i] * d2;
      const double d1 = t[i] - p;
      g1 += f[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < 1e-10 && std::abs(g2) < 1e-10) break;
    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;
    double step = 1.0;
    bool moved = false;
    while (step >= 1e-10) {
      const double na = a + step * da;
      const double nb = b + step * db;
      const double nv = objective(na, nb);
      if (nv < value + 1e-4 * step * gd) {
        a = na;
        b = nb;
        value = nv;
        moved = true;
        break;
      }
      step /= 2.0;
    }
    if (!moved) break;
  }
  return {a, b};
}

SvmState fit_svm(const Matrix& x, std::span<const int> y, const ParamSet& params) {
  const double lambda = param(params, "lambda");
  const int epochs = int_param(params, "epochs");
  const double holdout = param(params, "holdout");
  detail::Rng rng(seed_param(params));

  const std::size_t n = x.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  auto n_hold = static_cast<std::size_t>(std::floor(holdout * static_cast<double>(n)));
  std::vector<std::size_t> train_idx, hold_idx;
  if (n_hold == 0 || n_hold >= n) {
    train_idx = order;
    hold_idx = order;
  } else {
    hold_idx.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_hold));
    train_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(n_hold), order.end());
  }

  // Subgradient descent on lambda/2 ||w||^2 + mean hinge loss with the step
  // 1/(lambda t); the bias is an extra constant feature. The returned weights
  // are the average iterate of the final epoch.
  const std::size_t d = x.cols();
  std::vector<double> w(d + 1, 0.0), avg(d + 1, 0.0);
  std::size_t t = 0;
  std::vector<std::size_t> visit = train_idx;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(visit);
    const bool last_epoch = epoch == epochs - 1;
    for (std::size_t i : visit) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const double label = y[i] ? 1.0 : -1.0;
      auto xi = x.row(i);
      double margin = w[d];
      for (std::size_t j = 0; j < d; ++j) margin += w[j] * xi[j];
      margin *= label;
      const double shrink = 1.0 - eta * lambda;
      for (auto& wj : w) wj *= shrink;
      if (margin < 1.0) {
        for (std::size_t j = 0; j < d; ++j) w[j] += eta * label * xi[j];
        w[d] += eta * label;
      }
      if (last_epoch) {
        for (std::size_t j = 0; j <= d; ++j) avg[j] += w[j];
      }
    }
  }
  const double count = static_cast<double>(visit.size());
  SvmState s;
  s.margin.weights.assign(avg.begin(), avg.begin() + static_cast<std::ptrdiff_t>(d));
  for (auto& v : s.margin.weights) v /= count;
  s.margin.intercept = avg[d] / count;

  std::vector<double> scores;
  std::vector<int> labels;
  for (std::size_t i : hold_idx) {
    scores.push_back(linear_score(s.margin, x.row(i)));
    labels.push_back(y[i]);
  }
  const auto platt = fit_platt(scores, labels);
  s.platt_a = platt.a;
  s.platt_b = platt.b;
  return s;
}

// ---------------------------------------------------------------------------
// CART forests

ForestState fit_forest(const Matrix& x, std::span<const int> y, int n_trees, int max_depth, double min_leaf,
                       std::size_t max_features, bool bootstrap, std::uint64_t seed) {
  const std::size_t n = x.rows();
  const auto sorted = detail::SortedColumns::build(x);
  detail::TreeGrowth growth;
  growth.criterion = detail::SplitCriterion::Gini;
  growth.max_depth = max_depth;
  growth.min_child = min_leaf;
  growth.max_features = max_features;

  detail::Rng rng(seed);
  ForestState s;
  s.gain.assign(x.cols(), 0.0);
  std::vector<double> wy(n), w(n);
  std::vector<char> included(n);
  for (int t = 0; t < n_trees; ++t) {
    std::fill(w.begin(), w.end(), bootstrap ? 0.0 : 1.0);
    if (bootstrap) {
      for (std::size_t k = 0; k < n; ++k) w[rng.below(n)] += 1.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
      wy[i] = w[i] * y[i];
      included[i] = w[i] > 0.0;
    }
    s.trees.push_back(detail::grow_tree(x, sorted, wy, w, included, growth, s.gain, &rng));
  }
  return s;
}

double forest_predict(const ForestState& s, std::span<const double> x) {
  double total = 0.0;
  for (const auto& tree : s.trees) total += tree.evaluate(x);
  return total / static_cast<double>(s.trees.size());
}

// ---------------------------------------------------------------------------
// JSON helpers

json tree_to_json(const Tree& tree) {
  json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
       value = json::array();
  for (const auto& node : tree.nodes) {
    feature.push_back(node.feature);
    threshold.push_back(node.threshold);
    left.push_back(node.left);
    right.push_back(node.right);
    value.push_back(node.value);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}};
}

Tree tree_from_json(const json& j) {
  const auto& feature = j.at("feature");
  Tree tree;
  tree.nodes.resize(feature.size());
  for (std::size_t k = 0; k < feature.size(); ++k) {
    auto& node = tree.nodes[k];
    node.feature = feature.at(k).get<int>();
    node.threshold = j.at("threshold").at(k).get<double>();
    node.left = j.at("left").at(k).get<int>();
    node.right = j.at("right").at(k).get<int>();
    node.value = j.at("value").at(k).get<double>();
  }
  const int size = static_cast<int>(tree.nodes.size());
  if (size == 0) throw Error(ErrorCode::Parse, "tree without nodes");
  for (int k = 0; k < size; ++k) {
    const auto& node = tree.nodes[k];
    if (node.feature >= 0 && (node.left <= k || node.right <= k || node.left >= size || node.right >= size)) {
      throw Error(ErrorCode::Parse, "tree node " + std::to_string(k) + " has invalid children");
    }
  }
  return tree;
}

json trees_to_json(const std::vector<Tree>& trees) {
  json out = json::array();
  for (const auto& t : trees) out.push_back(tree_to_json(t));
  return out;
}

std::vector<Tree> trees_from_json(const json& j) {
  std::vector<Tree> out;
  for (const auto& t : j) out.push_back(tree_from_json(t));
  return out;
}

json layer_to_json(const DenseLayer& layer) {
  return {{"inputs", layer.inputs}, {"outputs", layer.outputs}, {"weights", layer.weights}, {"bias", layer.bias}};
}

DenseLayer layer_from_json(const json& j) {
  DenseLayer layer;
  layer.inputs = j.at("inputs").get<std::size_t>();
  layer.outputs = j.at("outputs").get<std::size_t>();
  layer.weights = j.at("weights").get<std::vector<double>>();
  layer.bias = j.at("bias").get<std::vector<double>>();
  if (layer.weights.size() != layer.inputs * layer.outputs || layer.bias.size() != layer.outputs) {
    throw Error(ErrorCode::Parse, "dense layer arrays do not match its shape");
  }
  return layer;
}

json linear_to_json(const LinearState& s) { return {{"weights", s.weights}, {"intercept", s.intercept}}; }

LinearState linear_from_json(const json& j) {
  return {j.at("weights").get<std::vector<double>>(), j.at("intercept").get<double>()};
}

void check_width(std::size_t expected, std::size_t actual, const char* what) {
  if (expected != actual) {
    throw Error(ErrorCode::Parse, std::string(what) + " width " + std::to_string(actual) + " does not match " +
                                      std::to_string(expected) + " features");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::string_view family_name(Family f) { return kFamilyNames[static_cast<std::size_t>(f)]; }

Family family_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kFamilyNames.size(); ++i) {
    if (kFamilyNames[i] == name) return static_cast<Family>(i);
  }
  throw Error(ErrorCode::Config, "unknown model family '" + std::string(name) + "'");
}

ParamSet default_params(Family f) {
  switch (f) {
    case Family::Gbt:
      return {{"n_rounds", 200},        {"learning_rate", 0.1},       {"max_depth", 4},
              {"lambda", 1.0},          {"min_child_weight", 1.0},    {"subsample", 1.0},
              {"positive_weight", 1.0}, {"init_from_base_rate", 1.0}, {"base_score", 0.0},
              {"seed", 0}};
    case Family::Ann:
      return {{"hidden1", 32}, {"hidden2", 16},        {"epochs", 200}, {"batch_size", 32},
              {"learning_rate", 1e-3}, {"l2", 0.0}, {"seed", 0}};
    case Family::Lr: return {{"learning_rate", 0.5}, {"epochs", 500}, {"l2", 0.0}};
    case Family::Nb: return {{"alpha", 1.0}, {"var_smoothing", 1e-9}};
    case Family::Knn: return {{"k", 5}};
    case Family::Svm: return {{"lambda", 1e-2}, {"epochs", 30}, {"holdout", 0.2}, {"seed", 0}};
    case Family::Rf:
      return {{"n_trees", 100}, {"max_depth", 8}, {"min_samples_leaf", 1}, {"max_features", 0}, {"seed", 0}};
    case Family::DecisionTree: return {{"max_depth", 6}, {"min_samples_leaf", 1}};
  }
  return {};
}

ParamSet resolve_params(Family f, const ParamSet& overrides) {
  ParamSet params = default_params(f);
  for (const auto& [name, value] : overrides) {
    auto it = params.find(name);
    if (it == params.end()) {
      throw Error(ErrorCode::Config,
                  "unknown hyperparameter '" + name + "' for " + std::string(family_name(f)), name);
    }
    if (!std::isfinite(value)) throw Error(ErrorCode::Config, "hyperparameter " + name + " must be finite", name);
    it->second = value;
  }
  return params;
}

std::string format_params(const ParamSet& params) {
  std::string out;
  for (const auto& [name, value] : params) {
    if (!out.empty()) out += ';';
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    out += name + '=' + std::string(buf, end);
  }
  return out;
}

GbtHyperparams GbtHyperparams::from(const ParamSet& p) {
  GbtHyperparams hp;
  hp.n_rounds = int_param(p, "n_rounds");
  hp.learning_rate = param(p, "learning_rate");
  hp.max_depth = int_param(p, "max_depth");
  hp.lambda = param(p, "lambda");
  hp.min_child_weight = param(p, "min_child_weight");
  hp.subsample = param(p, "subsample");
  hp.positive_weight = param(p, "positive_weight");
  hp.init_from_base_rate = param(p, "init_from_base_rate") != 0.0;
  hp.base_score = param(p, "base_score");
  hp.seed = seed_param(p);
  if (hp.n_rounds < 1) throw Error(ErrorCode::Config, "n_rounds must be >= 1", "n_rounds");
  if (!(hp.learning_rate > 0.0 && hp.learning_rate <= 1.0)) {
    throw Error(ErrorCode::Config, "learning_rate must lie in (0,1]", "learning_rate");
  }
  if (hp.lambda < 0.0) throw Error(ErrorCode::Config, "lambda must be >= 0", "lambda");
  if (hp.max_depth < 0) throw Error(ErrorCode::Config, "max_depth must be >= 0", "max_depth");
  if (!(hp.subsample > 0.0 && hp.subsample <= 1.0)) throw Error(ErrorCode::Config, "subsample must lie in (0,1]", "subsample");
  if (!(hp.positive_weight > 0.0)) throw Error(ErrorCode::Config, "positive_weight must be > 0", "positive_weight");
  return hp;
}

AnnHyperparams AnnHyperparams::from(const ParamSet& p) {
  AnnHyperparams hp;
  hp.hidden_sizes = {int_param(p, "hidden1"), int_param(p, "hidden2")};
  hp.epochs = int_param(p, "epochs");
  hp.batch_size = int_param(p, "batch_size");
  hp.learning_rate = param(p, "learning_rate");
  hp.l2 = param(p, "l2");
  hp.seed = seed_param(p);
  if (hp.hidden_sizes[0] < 1 || hp.hidden_sizes[1] < 1) throw Error(ErrorCode::Config, "hidden layer widths must be >= 1");
  if (hp.epochs < 1) throw Error(ErrorCode::Config, "epochs must be >= 1", "epochs");
  if (hp.batch_size < 1) throw Error(ErrorCode::Config, "batch_size must be >= 1", "batch_size");
  if (!(hp.learning_rate > 0.0)) throw Error(ErrorCode::Config, "learning_rate must be > 0", "learning_rate");
  return hp;
}

double Tree::evaluate(std::span<const double> x) const {
  std::size_t k = 0;
  while (nodes[k].feature >= 0) {
    const auto& node = nodes[k];
    k = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
  }
  return nodes[k].value;
}

// ---------------------------------------------------------------------------
// Linear objective

Objective logistic_objective(const LinearState& model, const Matrix& x, std::span<const int> y, double l2) {
  const std::size_t d = x.cols();
  Objective obj;
  obj.gradient.assign(d + 1, 0.0);
  const double n = static_cast<double>(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto xi = x.row(i);
    const double z = linear_score(model, xi);
    obj.loss += softplus(z) - y[i] * z;
    const double residual = sigmoid(z) - y[i];
    for (std::size_t j = 0; j < d; ++j) obj.gradient[j] += residual * xi[j];
    obj.gradient[d] += residual;
  }
  obj.loss /= n;
  for (auto& g : obj.gradient) g /= n;
  for (std::size_t j = 0; j < d; ++j) {
    obj.loss += 0.5 * l2 * model.weights[j] * model.weights[j];
    obj.gradient[j] += l2 * model.weights[j];
  }
  return obj;
}

std::vector<double> flatten(const LinearState& model) {
  std::vector<double> out = model.weights;
  out.push_back(model.intercept);
  return out;
}

LinearState unflatten_linear(std::span<const double> params, std::size_t width) {
  if (params.size() != width + 1) throw Error(ErrorCode::Shape, "linear parameter vector has the wrong length");
  return {std::vector<double>(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(width)), params[width]};
}

// ---------------------------------------------------------------------------
// TrainedModel

TrainedModel::TrainedModel(Family family, ParamSet hyperparams, std::vector<std::string> feature_names,
                           ModelState state)
    : family_(family),
      hyperparams_(std::move(hyperparams)),
      feature_names_(std::move(feature_names)),
      state_(std::move(state)) {}

double TrainedModel::predict_proba(std::span<const double> x) const {
  if (x.size() != width()) {
    throw Error(ErrorCode::Shape, std::string(family_name(family_)) + " model expects " + std::to_string(width()) +
                                      " features, got " + std::to_string(x.size()));
  }
  double p = 0.0;
  switch (family_) {
    case Family::Gbt: {
      const auto& s = std::get<GbtState>(state_);
      double z = s.base_score;
      for (const auto& tree : s.trees) z += s.learning_rate * tree.evaluate(x);
      p = sigmoid(z);
      break;
    }
    case Family::Ann: p = ann_forward(std::get<AnnState>(state_), x); break;
    case Family::Lr: p = sigmoid(linear_score(std::get<LinearState>(state_), x)); break;
    case Family::Nb: p = nb_predict(std::get<NbState>(state_), x); break;
    case Family::Knn: p = knn_predict(std::get<KnnState>(state_), x); break;
    case Family::Svm: {
      const auto& s = std::get<SvmState>(state_);
      p = sigmoid(-(s.platt_a * linear_score(s.margin, x) + s.platt_b));
      break;
    }
    case Family::Rf:
    case Family::DecisionTree: p = forest_predict(std::get<ForestState>(state_), x); break;
  }
  if (std::isnan(p)) return 0.5;
  return std::clamp(p, 0.0, 1.0);
}

std::optional<std::vector<double>> TrainedModel::feature_importance() const {
  switch (family_) {
    case Family::Gbt: return normalized(std::get<GbtState>(state_).gain);
    case Family::Rf:
    case Family::DecisionTree: return normalized(std::get<ForestState>(state_).gain);
    case Family::Lr:
    case Family::Svm: {
      const auto& w = family_ == Family::Lr ? std::get<LinearState>(state_).weights
                                            : std::get<SvmState>(state_).margin.weights;
      std::vector<double> out(w.size());
      std::transform(w.begin(), w.end(), out.begin(), [](double v) { return std::abs(v); });
      return normalized(std::move(out));
    }
    case Family::Nb:
    case Family::Knn:
    case Family::Ann: return std::nullopt;
  }
  return std::nullopt;
}

json TrainedModel::to_json() const {
  json state;
  switch (family_) {
    case Family::Gbt: {
      const auto& s = std::get<GbtState>(state_);
      state = {{"base_score", s.base_score}, {"learning_rate", s.learning_rate}, {"gain", s.gain},
               {"trees", trees_to_json(s.trees)}};
      break;
    }
    case Family::Ann: {
      json layers = json::array();
      for (const auto& layer : std::get<AnnState>(state_).layers) layers.push_back(layer_to_json(layer));
      state = {{"layers", layers}};
      break;
    }
    case Family::Lr: state = linear_to_json(std::get<LinearState>(state_)); break;
    case Family::Nb: {
      const auto& s = std::get<NbState>(state_);
      std::vector<int> binary(s.binary.begin(), s.binary.end());
      state = {{"binary", binary}, {"log_prior", s.log_prior}, {"p_one", s.p_one}, {"mean", s.mean},
               {"variance", s.variance}};
      break;
    }
    case Family::Knn: {
      const auto& s = std::get<KnnState>(state_);
      state = {{"k", s.k},
               {"rows", s.points.rows()},
               {"cols", s.points.cols()},
               {"points", std::vector<double>(s.points.data().begin(), s.points.data().end())},
               {"labels", s.labels}};
      break;
    }
    case Family::Svm: {
      const auto& s = std::get<SvmState>(state_);
      state = {{"margin", linear_to_json(s.margin)}, {"platt_a", s.platt_a}, {"platt_b", s.platt_b}};
      break;
    }
    case Family::Rf:
    case Family::DecisionTree: {
      const auto& s = std::get<ForestState>(state_);
      state = {{"gain", s.gain}, {"trees", trees_to_json(s.trees)}};
      break;
    }
  }
  return {{"family", family_name(family_)},
          {"hyperparams", hyperparams_},
          {"feature_names", feature_names_},
          {"state", state}};
}

TrainedModel TrainedModel::from_json(const json& j) {
  try {
    const Family family = family_from_name(j.at("family").get<std::string>());
    const auto params = resolve_params(family, j.at("hyperparams").get<ParamSet>());
    auto names = j.at("feature_names").get<std::vector<std::string>>();
    const std::size_t d = names.size();
    const auto& s = j.at("state");
    ModelState state;
    switch (family) {
      case Family::Gbt: {
        GbtState g;
        g.base_score = s.at("base_score").get<double>();
        g.learning_rate = s.at("learning_rate").get<double>();
        g.gain = s.at("gain").get<std::vector<double>>();
        g.trees = trees_from_json(s.at("trees"));
        check_width(d, g.gain.size(), "gain");
        for (const auto& t : g.trees) {
          for (const auto& node : t.nodes) {
            if (node.feature >= static_cast<int>(d)) throw Error(ErrorCode::Parse, "tree split on a feature out of range");
          }
        }
        state = std::move(g);
        break;
      }
      case Family::Ann: {
        AnnState a;
        const auto& layers = s.at("layers");
        if (layers.size() != 3) throw Error(ErrorCode::Parse, "ANN must have exactly three dense layers");
        for (std::size_t k = 0; k < 3; ++k) a.layers[k] = layer_from_json(layers.at(k));
        check_width(d, a.layers[0].inputs, "ANN input");
        if (a.layers[1].inputs != a.layers[0].outputs || a.layers[2].inputs != a.layers[1].outputs ||
            a.layers[2].outputs != 1) {
          throw Error(ErrorCode::Parse, "ANN layer shapes are inconsistent");
        }
        state = std::move(a);
        break;
      }
      case Family::Lr: {
        auto l = linear_from_json(s);
        check_width(d, l.weights.size(), "weights");
        state = std::move(l);
        break;
      }
      case Family::Nb: {
        NbState nb;
        auto binary = s.at("binary").get<std::vector<int>>();
        nb.binary.assign(binary.begin(), binary.end());
        nb.log_prior = s.at("log_prior").get<std::array<double, 2>>();
        nb.p_one = s.at("p_one").get<std::array<std::vector<double>, 2>>();
        nb.mean = s.at("mean").get<std::array<std::vector<double>, 2>>();
        nb.variance = s.at("variance").get<std::array<std::vector<double>, 2>>();
        check_width(d, nb.binary.size(), "naive Bayes");
        for (int c = 0; c < 2; ++c) {
          check_width(d, nb.p_one[c].size(), "naive Bayes");
          check_width(d, nb.mean[c].size(), "naive Bayes");
          check_width(d, nb.variance[c].size(), "naive Bayes");
        }
        state = std::move(nb);
        break;
      }
      case Family::Knn: {
        KnnState k;
        k.k = s.at("k").get<int>();
        const auto rows = s.at("rows").get<std::size_t>();
        const auto cols = s.at("cols").get<std::size_t>();
        const auto points = s.at("points").get<std::vector<double>>();
        if (points.size() != rows * cols) throw Error(ErrorCode::Parse, "KNN point array does not match its shape");
        check_width(d, cols, "KNN");
        k.points = Matrix(rows, cols);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < cols; ++c) k.points(r, c) = points[r * cols + c];
        }
        k.labels = s.at("labels").get<std::vector<int>>();
        if (k.labels.size() != rows || k.k < 1 || static_cast<std::size_t>(k.k) > rows) {
          throw Error(ErrorCode::Parse, "KNN labels or k inconsistent with stored points");
        }
        state = std::move(k);
        break;
      }
      case Family::Svm: {
        SvmState sv;
        sv.margin = linear_from_json(s.at("margin"));
        sv.platt_a = s.at("platt_a").get<double>();
        sv.platt_b = s.at("platt_b").get<double>();
        check_width(d, sv.margin.weights.size(), "SVM");
        state = std::move(sv);
        break;
      }
      case Family::Rf:
      case Family::DecisionTree: {
        ForestState f;
        f.gain = s.at("gain").get<std::vector<double>>();
        f.trees = trees_from_json(s.at("trees"));
        check_width(d, f.gain.size(), "gain");
        if (f.trees.empty()) throw Error(ErrorCode::Parse, "forest without trees");
        state = std::move(f);
        break;
      }
    }
    return TrainedModel(family, params, std::move(names), std::move(state));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed model: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Parse) throw;
    throw Error(ErrorCode::Parse, std::string("malformed model: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

TrainedModel fit(Family family, const Matrix& x, std::span<const int> y, const ParamSet& overrides,
                 std::vector<std::string> feature_names) {
  check_inputs(family, x, y);
  if (feature_names.empty()) {
    for (std::size_t j = 0; j < x.cols(); ++j) feature_names.push_back("f" + std::to_string(j));
  }
  if (feature_names.size() != x.cols()) {
    throw Error(ErrorCode::Shape, "feature_names has " + std::to_string(feature_names.size()) + " entries for " +
                                      std::to_string(x.cols()) + " columns");
  }
  const ParamSet params = resolve_params(family, overrides);

  switch (family) {
    case Family::Gbt: return fit_gbt_impl(x, y, params, std::move(feature_names), nullptr);
    case Family::Ann: break;  // handled below
    case Family::Lr: {
      auto state = fit_linear_logistic(x, y, param(params, "learning_rate"), int_param(params, "epochs"),
                                       param(params, "l2"));
      return TrainedModel(family, params, std::move(feature_names), std::move(state));
    }
    case Family::Nb: {
      auto state = fit_nb(x, y, param(params, "alpha"), param(params, "var_smoothing"));
      return TrainedModel(family, params, std::move(feature_names), std::move(state));
    }
    case Family::Knn: {
      const int k = int_param(params, "k");
      if (k < 1) throw Error(ErrorCode::Config, "k must be >= 1", "k");
      if (x.rows() < static_cast<std::size_t>(k)) {
        throw Error(ErrorCode::Fit, "KNN needs at least k=" + std::to_string(k) + " rows");
      }
      KnnState state{k, x, std::vector<int>(y.begin(), y.end())};
      return TrainedModel(family, params, std::move(feature_names), std::move(state));
    }
    case Family::Svm: {
      if (!(param(params, "lambda") > 0.0)) throw Error(ErrorCode::Config, "lambda must be > 0", "lambda");
      auto state = fit_svm(x, y, params);
      return TrainedModel(family, params, std::move(feature_names), std::move(state));
    }
    case Family::Rf:
    case Family::DecisionTree: {
      const bool forest = family == Family::Rf;
      const int depth = int_param(params, "max_depth");
      const double min_leaf = param(params, "min_samples_leaf");
      if (depth < 0) throw Error(ErrorCode::Config, "max_depth must be >= 0", "max_depth");
      std::size_t max_features = 0;
      int n_trees = 1;
      std::uint64_t seed = 0;
      if (forest) {
        n_trees = int_param(params, "n_trees");
        if (n_trees < 1) throw Error(ErrorCode::Config, "n_trees must be >= 1", "n_trees");
        const int mf = int_param(params, "max_features");
        max_features = mf > 0 ? static_cast<std::size_t>(mf)
                              : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(x.cols()))));
        seed = seed_param(params);
      }
      auto state = fit_forest(x, y, n_trees, depth, min_leaf, max_features, forest, seed);
      return TrainedModel(family, params, std::move(feature_names), std::move(state));
    }
  }
  return detail::fit_ann(x, y, params, std::move(feature_names));
}

TrainedModel fit_gbt_traced(const Matrix& x, std::span<const int> y, const ParamSet& overrides, GbtTrace& trace,
                            std::vector<std::string> feature_names) {
  check_inputs(Family::Gbt, x, y);
  if (feature_names.empty()) {
    for (std::size_t j = 0; j < x.cols(); ++j) feature_names.push_back("f" + std::to_string(j));
  }
  return fit_gbt_impl(x, y, resolve_params(Family::Gbt, overrides), std::move(feature_names), &trace);
}

}  // namespace triage
