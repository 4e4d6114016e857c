#include "triage/training.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "random.hpp"
#include "triage/error.hpp"
#include "triage/preprocess.hpp"

namespace triage {

namespace {

constexpr std::array<std::string_view, 4> kTuningNames = {"none", "grid", "random", "halving"};

void say(const TrainOptions& o, const std::string& line) {
  if (o.progress) o.progress(line);
}

std::string metric(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *v);
  return buf;
}

std::string pad(std::string s, std::size_t width, bool left = false) {
  if (s.size() >= width) return s;
  return left ? std::string(width - s.size(), ' ') + s : s + std::string(width - s.size(), ' ');
}

std::vector<int> gather(const std::vector<int>& y, const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(y[i]);
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

MetricsReport held_out(const TrainedModel& model, const Matrix& x, const std::vector<int>& y) {
  std::vector<double> prob;
  prob.reserve(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) prob.push_back(model.predict_proba(x.row(i)));
  return evaluate(y, prob);
}

}  // namespace

std::string_view tuning_name(Tuning t) { return kTuningNames[static_cast<std::size_t>(t)]; }

std::optional<Tuning> tuning_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kTuningNames.size(); ++i) {
    if (kTuningNames[i] == name) return static_cast<Tuning>(i);
  }
  return std::nullopt;
}

std::string TrainOptions::canonical_string() const {
  std::string s = "seed=" + std::to_string(seed) + ";test=" + std::to_string(test_fraction) +
                  ";k=" + std::to_string(k_folds) + ";repair_train=" + (repair_training_rows ? "1" : "0") + ";select=" + (feature_selection ? "rfecv" : "none") +
                  ";step=" + std::to_string(rfecv_step) + ";rfecv_params=" + format_params(rfecv_params) +
                  ";tuning=" + std::string(tuning_name(tuning)) + ";budget=" + std::to_string(budget) +
                  ";gbt=" + format_params(gbt_params) + ";ann=" + format_params(ann_params);
  return s;
}

TrainResult train_all(const LabeledDataset& data, const TrainOptions& options, const std::string& source) {
  data.validate();
  const std::size_t n = data.size();
  if (!(options.test_fraction > 0.0 && options.test_fraction < 1.0)) {
    throw Error(ErrorCode::Config, "test fraction must lie in (0,1)", "test_fraction");
  }
  const auto n_test = static_cast<std::size_t>(std::llround(options.test_fraction * static_cast<double>(n)));
  if (n_test < 1 || n - n_test < std::max<std::size_t>(2, options.k_folds)) {
    throw Error(ErrorCode::InsufficientData, "dataset with " + std::to_string(n) + " records is too small to train");
  }

  // One seeded split shared by all complications.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  detail::Rng rng(options.seed);
  rng.shuffle(order);
  std::vector<std::size_t> test(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());

  Matrix canonical(n, kFeatureCount);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = encode(data.records[i]);
    std::copy(row.begin(), row.end(), canonical.row(i).begin());
  }
  Matrix x_train = canonical.select_rows(train);
  Matrix x_test = canonical.select_rows(test);
  const auto repairs = fit_vital_repairs(x_train);
  if (options.repair_training_rows) apply_repairs(repairs, x_train);
  apply_repairs(repairs, x_test);
  const Scaler scaler = fit_scaler(x_train, canonical_numeric_mask(kFeatureCount));
  x_train = scaler.apply(x_train);
  x_test = scaler.apply(x_test);
  say(options, "split " + std::to_string(train.size()) + " train / " + std::to_string(test.size()) + " test rows");

  const std::string fingerprint = "source=" + fnv1a_hex(source) + ";options=" + fnv1a_hex(options.canonical_string());
  const auto& names = canonical_feature_names();

  TrainResult result;
  for (auto c : kAllComplications) {
    const auto ci = index_of(c);
    const std::string key(key_name(c));
    const auto y_train = gather(data.label(c), train);
    const auto y_test = gather(data.label(c), test);

    std::vector<std::size_t> selected;
    if (options.feature_selection) {
      ParamSet p = options.rfecv_params;
      p["seed"] = static_cast<double>(options.seed);
      result.rfecv[ci] = rfecv(Family::Gbt, x_train, y_train, p, options.k_folds, options.rfecv_step, options.seed);
      selected = result.rfecv[ci]->selected;
    } else {
      selected.resize(kFeatureCount);
      std::iota(selected.begin(), selected.end(), std::size_t{0});
    }
    std::vector<std::string> selected_names;
    for (auto j : selected) selected_names.push_back(names[j]);
    say(options, key + ": " + std::to_string(selected.size()) + " features selected");

    const Matrix xs_train = x_train.select_columns(selected);
    const Matrix xs_test = x_test.select_columns(selected);

    ParamSet gbt_params = options.gbt_params;
    gbt_params["seed"] = static_cast<double>(options.seed);
    if (options.tuning != Tuning::None) {
      const auto space = default_search_space(Family::Gbt, options.budget, options.seed + ci);
      SearchResult search;
      switch (options.tuning) {
        case Tuning::Grid: search = grid_search(Family::Gbt, space, xs_train, y_train, options.k_folds, gbt_params); break;
        case Tuning::Random:
          search = random_search(Family::Gbt, space, xs_train, y_train, options.k_folds, gbt_params);
          break;
        case Tuning::Halving:
          search = successive_halving(Family::Gbt, space, xs_train, y_train, options.k_folds, gbt_params);
          break;
        case Tuning::None: break;
      }
      gbt_params = search.best;
      say(options, key + ": tuned GBT " + format_params(gbt_params) + " (cv accuracy " + metric(search.best_score) + ")");
      result.search[ci] = std::move(search);
    }
    ParamSet ann_params = options.ann_params;
    ann_params["seed"] = static_cast<double>(options.seed + ci);

    auto gbt = fit(Family::Gbt, xs_train, y_train, gbt_params, selected_names);
    auto ann = fit(Family::Ann, xs_train, y_train, ann_params, selected_names);
    ComplicationMetrics m{c, held_out(gbt, xs_test, y_test), held_out(ann, xs_test, y_test), selected.size()};
    say(options, key + ": held-out accuracy GBT " + metric(m.gbt.accuracy) + ", ANN " + metric(m.ann.accuracy));
    result.metrics.push_back(m);
    result.bundles.push_back(ComplicationBundle{c, std::move(gbt), std::move(ann), scaler, repairs,
                                                std::move(selected_names), kSchemaVersion, fingerprint});
  }
  return result;
}

std::string format_metrics_table(std::span<const ComplicationMetrics> metrics) {
  std::string out = pad("Complication", 16);
  for (const char* h : {"GBT acc", "GBT prec", "GBT rec", "ANN acc", "ANN prec", "ANN rec", "Features"}) {
    out += pad(h, 10, true);
  }
  out += '\n';
  for (const auto& m : metrics) {
    out += pad(std::string(display_name(m.complication)), 16);
    for (const auto& r : {m.gbt, m.ann}) {
      out += pad(metric(r.accuracy), 10, true) + pad(metric(r.precision), 10, true) + pad(metric(r.recall), 10, true);
    }
    out += pad(std::to_string(m.features), 10, true) + '\n';
  }
  return out;
}

std::string format_metrics_table(const TrainResult& result) { return format_metrics_table(result.metrics); }

std::vector<ComplicationMetrics> evaluate_engine(const PredictionEngine& engine, const LabeledDataset& data) {
  data.validate();
  if (data.size() == 0) throw Error(ErrorCode::InsufficientData, "dataset has no records");
  std::array<std::vector<double>, kComplicationCount> gbt, ann;
  for (const auto& record : data.records) {
    const auto set = engine.probabilities(record);
    for (auto c : kAllComplications) {
      gbt[index_of(c)].push_back(set.at(c).gbt_pct / 100.0);
      ann[index_of(c)].push_back(set.at(c).ann_pct / 100.0);
    }
  }
  std::vector<ComplicationMetrics> out;
  for (auto c : kAllComplications) {
    const auto& y = data.label(c);
    out.push_back({c, evaluate(y, gbt[index_of(c)]), evaluate(y, ann[index_of(c)]),
                   engine.bundle(c).selected_features.size()});
  }
  return out;
}

void write_training_outputs(const TrainResult& result, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  for (const auto& b : result.bundles) save_bundle(b, bundle_path(out_dir, b.complication));
  write_manifest(out_dir);
  write_text(out_dir / "metrics.txt", format_metrics_table(result));
  for (auto c : kAllComplications) {
    if (const auto& s = result.search[index_of(c)]) {
      write_text(out_dir / ("leaderboard_" + std::string(key_name(c)) + ".csv"), leaderboard_csv(*s));
    }
  }
}

}  // namespace triage
