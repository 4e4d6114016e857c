#include "triage/selection.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "random.hpp"
#include "triage/csv.hpp"
#include "triage/error.hpp"

namespace triage {

namespace {

std::string number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::vector<int> gather(std::span<const int> y, std::span<const std::size_t> idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(y[i]);
  return out;
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev_of(std::span<const double> v) {
  const double m = mean_of(v);
  double sq = 0.0;
  for (double x : v) sq += (x - m) * (x - m);
  return std::sqrt(sq / static_cast<double>(v.size()));
}

bool has_importance(Family f) {
  return f == Family::Gbt || f == Family::Rf || f == Family::DecisionTree || f == Family::Lr || f == Family::Svm;
}

void check_space(const SearchSpace& space) {
  if (space.dimensions.empty()) throw Error(ErrorCode::Search, "search space has no dimensions");
  if (space.budget < 1) throw Error(ErrorCode::Search, "search budget must be >= 1");
  for (const auto& d : space.dimensions) {
    if (d.values.empty() && !(d.hi >= d.lo)) {
      throw Error(ErrorCode::Search, "dimension " + d.name + " has neither values nor a valid range", d.name);
    }
    if (d.values.empty() && d.log_scale && !(d.lo > 0.0)) {
      throw Error(ErrorCode::Search, "log-scale dimension " + d.name + " needs a positive lower bound", d.name);
    }
  }
}

ParamSet draw(const SearchSpace& space, detail::Rng& rng) {
  ParamSet p;
  for (const auto& d : space.dimensions) {
    double v;
    if (!d.values.empty()) {
      v = d.values[rng.below(d.values.size())];
    } else if (d.log_scale) {
      v = std::exp(std::log(d.lo) + rng.uniform() * (std::log(d.hi) - std::log(d.lo)));
    } else {
      v = d.lo + rng.uniform() * (d.hi - d.lo);
    }
    if (d.integer) v = std::round(v);
    p[d.name] = v;
  }
  return p;
}

ParamSet overlay(const ParamSet& base, const ParamSet& over) {
  ParamSet out = base;
  for (const auto& [k, v] : over) out[k] = v;
  return out;
}

SearchResult run_candidates(Family family, std::span<const ParamSet> candidates, const Matrix& x,
                            std::span<const int> y, std::size_t k, std::uint64_t seed, const ParamSet& base) {
  SearchResult result;
  bool first = true;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const ParamSet params = resolve_params(family, overlay(base, candidates[i]));
    LeaderboardEntry entry{i, params, cross_validate(family, x, y, params, k, seed)};
    if (first || entry.score.mean_accuracy > result.best_score) {
      result.best = params;
      result.best_score = entry.score.mean_accuracy;
      first = false;
    }
    result.leaderboard.push_back(std::move(entry));
  }
  return result;
}

}  // namespace

MetricsReport evaluate(std::span<const int> y_true, std::span<const double> y_prob, double threshold) {
  if (y_true.empty()) throw Error(ErrorCode::Evaluation, "cannot evaluate an empty prediction set");
  if (y_true.size() != y_prob.size()) {
    throw Error(ErrorCode::Evaluation, "label and probability lists differ in length");
  }
  MetricsReport r;
  r.threshold = threshold;
  auto& c = r.confusion;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double p = y_prob[i];
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::Evaluation, "probability outside [0,1]");
    const bool predicted = p >= threshold;
    const bool actual = y_true[i] == 1;
    if (predicted && actual) ++c.tp;
    else if (predicted) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  if (c.tp + c.fp > 0) r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(y_true.size());
  return r;
}

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed,
                                                  std::span<const int> labels) {
  if (k < 2) throw Error(ErrorCode::Split, "k must be >= 2");
  if (k > n) throw Error(ErrorCode::Split, "k=" + std::to_string(k) + " exceeds " + std::to_string(n) + " rows");
  if (!labels.empty() && labels.size() != n) throw Error(ErrorCode::Split, "label count does not match n");

  detail::Rng rng(seed);
  std::vector<std::size_t> sequence;
  sequence.reserve(n);
  if (labels.empty()) {
    sequence.resize(n);
    std::iota(sequence.begin(), sequence.end(), std::size_t{0});
    rng.shuffle(sequence);
  } else {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < n; ++i) (labels[i] ? pos : neg).push_back(i);
    rng.shuffle(pos);
    rng.shuffle(neg);
    sequence = pos;
    sequence.insert(sequence.end(), neg.begin(), neg.end());
  }
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < n; ++i) folds[i % k].push_back(sequence[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

CvResult cross_validate(Family family, const Matrix& x, std::span<const int> y, const ParamSet& params,
                        std::size_t k, std::uint64_t seed) {
  const auto folds = kfold_split(x.rows(), k, seed, y);
  CvResult r;
  std::vector<double> precisions, recalls;
  std::vector<char> in_fold(x.rows());
  for (const auto& fold : folds) {
    std::fill(in_fold.begin(), in_fold.end(), 0);
    for (auto i : fold) in_fold[i] = 1;
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      if (!in_fold[i]) train.push_back(i);
    }
    const auto model = fit(family, x.select_rows(train), gather(y, train), params);
    std::vector<double> prob;
    for (auto i : fold) prob.push_back(model.predict_proba(x.row(i)));
    const auto m = evaluate(gather(y, fold), prob);
    r.fold_accuracy.push_back(m.accuracy);
    if (m.precision) precisions.push_back(*m.precision);
    if (m.recall) recalls.push_back(*m.recall);
  }
  r.mean_accuracy = mean_of(r.fold_accuracy);
  r.stddev_accuracy = stddev_of(r.fold_accuracy);
  if (!precisions.empty()) r.mean_precision = mean_of(precisions);
  if (!recalls.empty()) r.mean_recall = mean_of(recalls);
  return r;
}

RfecvResult rfecv(Family family, const Matrix& x, std::span<const int> y, const ParamSet& params, std::size_t k,
                  std::size_t step, std::uint64_t seed) {
  if (!has_importance(family)) {
    throw Error(ErrorCode::Selection, std::string(family_name(family)) +
                                          " has no feature importances; use correlation_filter instead");
  }
  if (x.cols() < 2) throw Error(ErrorCode::Selection, "RFECV needs at least 2 features");
  if (step < 1) throw Error(ErrorCode::Selection, "step must be >= 1");

  RfecvResult result;
  std::vector<std::size_t> current(x.cols());
  std::iota(current.begin(), current.end(), std::size_t{0});
  while (true) {
    const Matrix sub = x.select_columns(current);
    const auto cv = cross_validate(family, sub, y, params, k, seed);
    result.curve.push_back(
        {current, cv.mean_accuracy, cv.stddev_accuracy / std::sqrt(static_cast<double>(cv.fold_accuracy.size()))});
    if (current.size() == 1) break;

    const auto importance = fit(family, sub, y, params).feature_importance().value();
    std::vector<std::size_t> order(current.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Least important first; among equals the later column goes first.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (importance[a] != importance[b]) return importance[a] < importance[b];
      return a > b;
    });
    const std::size_t drop = std::min(step, current.size() - 1);
    std::vector<char> dropped(current.size(), 0);
    for (std::size_t i = 0; i < drop; ++i) dropped[order[i]] = 1;
    std::vector<std::size_t> next;
    for (std::size_t i = 0; i < current.size(); ++i) {
      if (!dropped[i]) next.push_back(current[i]);
    }
    current = std::move(next);
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < result.curve.size(); ++i) {
    if (result.curve[i].mean_accuracy > result.curve[best].mean_accuracy) best = i;
  }
  const double cutoff = result.curve[best].mean_accuracy - result.curve[best].std_error;
  std::size_t chosen = best;
  for (std::size_t i = 0; i < result.curve.size(); ++i) {
    const auto& p = result.curve[i];
    if (p.mean_accuracy >= cutoff && p.features.size() < result.curve[chosen].features.size()) chosen = i;
  }
  result.selected = result.curve[chosen].features;
  return result;
}

double point_biserial(std::span<const double> column, std::span<const int> y) {
  const std::size_t n = column.size();
  if (n == 0 || n != y.size()) throw Error(ErrorCode::Selection, "column and labels must be non-empty and equal length");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += column[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = column[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<std::size_t> correlation_filter(const Matrix& x, std::span<const int> y, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::Selection, "correlation threshold must lie in (0,1)");
  }
  if (x.cols() == 0) throw Error(ErrorCode::Selection, "no features to filter");
  std::vector<std::size_t> keep;
  std::size_t strongest = 0;
  double strongest_r = -1.0;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    const double r = std::abs(point_biserial(x.column(j), y));
    if (r >= threshold) keep.push_back(j);
    if (r > strongest_r) {
      strongest_r = r;
      strongest = j;
    }
  }
  if (keep.empty()) keep.push_back(strongest);
  return keep;
}

SearchResult grid_search(Family family, const SearchSpace& space, const Matrix& x, std::span<const int> y,
                         std::size_t k, const ParamSet& base) {
  check_space(space);
  for (const auto& d : space.dimensions) {
    if (d.values.empty()) throw Error(ErrorCode::Search, "grid dimension " + d.name + " has no values", d.name);
  }
  std::vector<ParamSet> candidates{ParamSet{}};
  for (const auto& d : space.dimensions) {
    std::vector<ParamSet> next;
    for (const auto& partial : candidates) {
      for (double v : d.values) {
        ParamSet p = partial;
        p[d.name] = v;
        next.push_back(std::move(p));
      }
    }
    candidates = std::move(next);
  }
  return run_candidates(family, candidates, x, y, k, space.seed, base);
}

SearchResult random_search(Family family, const SearchSpace& space, const Matrix& x, std::span<const int> y,
                           std::size_t k, const ParamSet& base) {
  check_space(space);
  detail::Rng rng(space.seed);
  std::vector<ParamSet> candidates;
  for (std::size_t i = 0; i < space.budget; ++i) candidates.push_back(draw(space, rng));
  return run_candidates(family, candidates, x, y, k, space.seed, base);
}

SearchResult successive_halving(Family family, const SearchSpace& space, const Matrix& x, std::span<const int> y,
                                std::size_t k, const ParamSet& base) {
  check_space(space);
  if (family != Family::Gbt && family != Family::Ann) return random_search(family, space, x, y, k, base);
  detail::Rng rng(space.seed);
  std::vector<ParamSet> candidates;
  for (std::size_t i = 0; i < space.budget; ++i) candidates.push_back(draw(space, rng));
  return successive_halving(family, candidates, x, y, k, space.seed, base);
}

SearchResult successive_halving(Family family, std::span<const ParamSet> candidates, const Matrix& x,
                                std::span<const int> y, std::size_t k, std::uint64_t seed, const ParamSet& base) {
  if (candidates.empty()) throw Error(ErrorCode::Search, "no candidates to race");
  if (family != Family::Gbt && family != Family::Ann) {
    return run_candidates(family, candidates, x, y, k, seed, base);
  }
  const std::string resource = family == Family::Gbt ? "n_rounds" : "epochs";

  struct Alive {
    std::size_t id;
    ParamSet full;
    double score = 0.0;
  };
  std::vector<Alive> alive;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    alive.push_back({i, resolve_params(family, overlay(base, candidates[i]))});
  }

  SearchResult result;
  double fraction = 0.25;
  while (true) {
    for (auto& a : alive) {
      ParamSet params = a.full;
      params[resource] = std::max(1.0, std::round(a.full.at(resource) * fraction));
      LeaderboardEntry entry{a.id, params, cross_validate(family, x, y, params, k, seed)};
      a.score = entry.score.mean_accuracy;
      result.leaderboard.push_back(std::move(entry));
    }
    // Better half survives; stable sort keeps enumeration order among ties.
    std::stable_sort(alive.begin(), alive.end(), [](const Alive& a, const Alive& b) { return a.score > b.score; });
    if (fraction >= 1.0 || alive.size() == 1) break;
    alive.resize((alive.size() + 1) / 2);
    fraction = std::min(1.0, fraction * 2.0);
  }
  result.best = alive.front().full;
  result.best_score = alive.front().score;
  return result;
}

std::string leaderboard_csv(const SearchResult& result) {
  csv::Document doc;
  doc.header = {"config_id", "params", "mean_accuracy", "precision", "recall"};
  for (const auto& e : result.leaderboard) {
    doc.rows.push_back({std::to_string(e.config_id), format_params(e.params), number(e.score.mean_accuracy),
                        e.score.mean_precision ? number(*e.score.mean_precision) : "",
                        e.score.mean_recall ? number(*e.score.mean_recall) : ""});
  }
  return csv::format(doc);
}

SearchSpace default_search_space(Family family, std::size_t budget, std::uint64_t seed) {
  SearchSpace s;
  s.budget = budget;
  s.seed = seed;
  switch (family) {
    case Family::Gbt:
      s.dimensions = {{"max_depth", {2, 3, 4, 6}},
                      {"learning_rate", {0.05, 0.1, 0.3}},
                      {"lambda", {0.1, 1.0, 10.0}}};
      break;
    case Family::Ann:
      s.dimensions = {{"learning_rate", {3e-4, 1e-3, 3e-3}}, {"l2", {0.0, 1e-4, 1e-3}}};
      break;
    case Family::Lr: s.dimensions = {{"l2", {0.0, 1e-3, 1e-2, 1e-1}}}; break;
    case Family::Nb: s.dimensions = {{"alpha", {0.5, 1.0, 2.0}}}; break;
    case Family::Knn: s.dimensions = {{"k", {3, 5, 9, 15}}}; break;
    case Family::Svm: s.dimensions = {{"lambda", {1e-4, 1e-3, 1e-2, 1e-1}}}; break;
    case Family::Rf: s.dimensions = {{"max_depth", {4, 8, 12}}, {"n_trees", {50, 100}}}; break;
    case Family::DecisionTree: s.dimensions = {{"max_depth", {3, 6, 9}}, {"min_samples_leaf", {1, 5, 20}}}; break;
  }
  return s;
}

}  // namespace triage
