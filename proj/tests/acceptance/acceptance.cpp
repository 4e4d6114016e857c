// Acceptance checks; one PASS/FAIL line per criterion.
//
// Expects a model directory and its training stdout produced by
// `triage-cli train --synthetic 42` (the ctest fixture does this).

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"
#include "triage/learners.hpp"
#include "triage/predictor.hpp"
#include "triage/preprocess.hpp"
#include "triage/selection.hpp"
#include "triage/service.hpp"
#include "triage/synthgen.hpp"
#include "triage/testcases.hpp"
#include "triage/training.hpp"

using namespace triage;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Paths {
  fs::path models, train_stdout, cli, golden, work;
};

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

int run(const std::string& command) {
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

// ---- 1: oracle equivalence -------------------------------------------------

double oracle_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return v[lo] + (v[hi] - v[lo]) * (pos - std::floor(pos));
}

std::size_t iqr_mismatches(std::mt19937_64& rng, int trials) {
  std::size_t bad = 0;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> v(4 + rng() % 30);
    for (auto& x : v) x = static_cast<double>(rng() % 50) + ((rng() % 10 == 0) ? 500.0 : 0.0);
    const auto b = iqr_bounds(v);
    const double q1 = oracle_quantile(v, 0.25), q3 = oracle_quantile(v, 0.75);
    const double lower = q1 - 1.5 * (q3 - q1), upper = q3 + 1.5 * (q3 - q1);
    bool ok = std::abs(b.q1 - q1) <= 1e-12 && std::abs(b.q3 - q3) <= 1e-12 && std::abs(b.lower - lower) <= 1e-12 &&
              std::abs(b.upper - upper) <= 1e-12;
    double sum = 0.0;
    std::size_t inside = 0;
    for (double x : v) {
      if (x >= lower && x <= upper) {
        sum += x;
        ++inside;
      }
    }
    const auto r = repair_outliers(v, b);
    ok = ok && r.repairs == v.size() - inside;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double expect = (v[i] >= lower && v[i] <= upper) ? v[i] : sum / static_cast<double>(inside);
      ok = ok && std::abs(r.column[i] - expect) <= 1e-12;
    }
    bad += !ok;
  }
  return bad;
}

std::size_t knn_mismatches(std::mt19937_64& rng, int trials) {
  std::size_t bad = 0;
  for (int t = 0; t < trials; ++t) {
    const std::size_t n = 5 + rng() % 20, d = 1 + rng() % 3;
    const int k = 1 + static_cast<int>(rng() % 5);
    Matrix x(n, d);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) x(i, j) = static_cast<double>(rng() % 4);
      y[i] = static_cast<int>(rng() % 2);
    }
    std::vector<double> q(d);
    for (auto& v : q) v = static_cast<double>(rng() % 4);
    std::vector<double> dist(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) dist[i] += (x(i, j) - q[j]) * (x(i, j) - q[j]);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return dist[a] < dist[b]; });
    int votes = 0;
    for (int i = 0; i < k; ++i) votes += y[order[static_cast<std::size_t>(i)]];
    const auto m = fit(Family::Knn, x, y, {{"k", k}});
    bad += m.predict_proba(q) != static_cast<double>(votes) / k;
  }
  return bad;
}

std::size_t nb_mismatches(std::mt19937_64& rng, int trials) {
  std::size_t bad = 0;
  for (int t = 0; t < trials; ++t) {
    const std::size_t n = 6 + rng() % 20, d = 1 + rng() % 4;
    Matrix x(n, d);
    std::vector<int> y(n);
    std::vector<bool> binary(d);
    for (std::size_t j = 0; j < d; ++j) binary[j] = rng() % 2;
    auto draw = [&](std::size_t j) {
      return binary[j] ? static_cast<double>(rng() % 2) : static_cast<double>(rng() % 7) + 2.0;
    };
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = i < 2 ? static_cast<int>(i) : static_cast<int>(rng() % 2);
      for (std::size_t j = 0; j < d; ++j) x(i, j) = draw(j);
    }
    const double alpha = 1.0, smoothing = 1e-9;
    const auto m = fit(Family::Nb, x, y, {{"alpha", alpha}, {"var_smoothing", smoothing}});

    std::array<double, 2> count{};
    for (int v : y) count[static_cast<std::size_t>(v)] += 1;
    std::array<std::vector<double>, 2> mean, var, p1;
    double max_var = 0;
    for (int c = 0; c < 2; ++c) {
      mean[c].assign(d, 0);
      var[c].assign(d, 0);
      p1[c].assign(d, 0);
      for (std::size_t j = 0; j < d; ++j) {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) s += y[i] == c ? x(i, j) : 0.0;
        mean[c][j] = s / count[c];
        p1[c][j] = (s + alpha) / (count[c] + 2 * alpha);
        double ss = 0;
        for (std::size_t i = 0; i < n; ++i) ss += y[i] == c ? (x(i, j) - mean[c][j]) * (x(i, j) - mean[c][j]) : 0.0;
        var[c][j] = ss / count[c];
        if (!binary[j]) max_var = std::max(max_var, var[c][j]);
      }
    }
    const double eps = smoothing * (max_var > 0 ? max_var : 1.0);
    std::vector<double> q(d);
    for (std::size_t j = 0; j < d; ++j) q[j] = draw(j);
    std::array<double, 2> joint{};
    for (int c = 0; c < 2; ++c) {
      double like = count[c] / static_cast<double>(n);
      for (std::size_t j = 0; j < d; ++j) {
        if (binary[j]) {
          like *= q[j] == 1.0 ? p1[c][j] : 1.0 - p1[c][j];
        } else {
          const double v = var[c][j] + eps;
          like *= std::exp(-(q[j] - mean[c][j]) * (q[j] - mean[c][j]) / (2 * v)) / std::sqrt(2 * M_PI * v);
        }
      }
      joint[c] = like;
    }
    const double expected = joint[1] / (joint[0] + joint[1]);
    if (!std::isfinite(expected)) continue;
    bad += !(std::abs(m.predict_proba(q) - expected) <= 1e-12);
  }
  return bad;
}

std::size_t metrics_mismatches(std::mt19937_64& rng, int trials) {
  std::size_t bad = 0;
  for (int t = 0; t < trials; ++t) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<int> y(n);
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng() % 2);
      p[i] = static_cast<double>(rng() % 11) / 10.0;
    }
    const double threshold = (t % 3 == 0) ? 0.3 : 0.5;
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool pred = !(p[i] < threshold);
      tp += pred && y[i];
      fp += pred && !y[i];
      fn += !pred && y[i];
      tn += !pred && !y[i];
    }
    const auto m = evaluate(y, p, threshold);
    bool ok = m.confusion == Confusion{tp, fp, fn, tn};
    ok = ok && std::abs(m.accuracy - static_cast<double>(tp + tn) / static_cast<double>(n)) <= 1e-12;
    ok = ok && m.precision.has_value() == (tp + fp > 0) && m.recall.has_value() == (tp + fn > 0);
    if (ok && m.precision) ok = std::abs(*m.precision - static_cast<double>(tp) / static_cast<double>(tp + fp)) <= 1e-12;
    if (ok && m.recall) ok = std::abs(*m.recall - static_cast<double>(tp) / static_cast<double>(tp + fn)) <= 1e-12;
    bad += !ok;
  }
  return bad;
}

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  const int trials = 1000;
  const auto iqr = iqr_mismatches(rng, trials);
  const auto knn = knn_mismatches(rng, trials);
  const auto nb = nb_mismatches(rng, trials);
  const auto met = metrics_mismatches(rng, trials);
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = iqr + knn + nb + met == 0 && secs < 60.0;
  o.detail = "mismatches iqr/repair " + std::to_string(iqr) + ", knn " + std::to_string(knn) + ", nb " +
             std::to_string(nb) + ", metrics " + std::to_string(met) + " over " + std::to_string(trials) +
             " instances each; " + fmt(secs) + " s (< 60)";
  return o;
}

// ---- 2: gradient checks ----------------------------------------------------

template <class Loss>
std::vector<double> central_differences(std::vector<double> params, Loss&& loss, double h = 1e-6) {
  std::vector<double> g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    const double up = loss(params);
    params[i] = keep - h;
    const double down = loss(params);
    params[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double max_relative_error(const std::vector<double>& a, const std::vector<double>& n) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - n[i]) / std::max({std::abs(a[i]), std::abs(n[i]), 1e-6}));
  }
  return worst;
}

Outcome gradient_checks() {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd(0, 1);
  double worst_ann = 0.0, worst_lr = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t rows = 2 + rng() % 6, d = 1 + rng() % 4;
    Matrix x(rows, d);
    std::vector<int> y(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < d; ++j) x(i, j) = nd(rng);
      y[i] = static_cast<int>(rng() % 2);
    }
    const auto shape = init_ann(d, {4, 3}, static_cast<std::uint64_t>(t));
    auto params = flatten(shape);
    for (auto& p : params) p = nd(rng);
    const auto net = unflatten_ann(params, shape);
    const double l2 = (t % 2) ? 0.01 : 0.0;
    const auto numeric = central_differences(
        params, [&](const std::vector<double>& p) { return ann_objective(unflatten_ann(p, shape), x, y, l2).loss; });
    worst_ann = std::max(worst_ann, max_relative_error(ann_objective(net, x, y, l2).gradient, numeric));

    LinearState lr;
    for (std::size_t j = 0; j < d; ++j) lr.weights.push_back(nd(rng));
    lr.intercept = nd(rng);
    const auto numeric_lr = central_differences(flatten(lr), [&](const std::vector<double>& p) {
      return logistic_objective(unflatten_linear(p, d), x, y, l2 * 10).loss;
    });
    worst_lr = std::max(worst_lr, max_relative_error(logistic_objective(lr, x, y, l2 * 10).gradient, numeric_lr));
  }
  return {worst_ann < 1e-4 && worst_lr < 1e-4,
          "max relative error ann[4,3] " + fmt(worst_ann) + ", lr " + fmt(worst_lr) + " over 100 instances (< 1e-4)"};
}

// ---- 3: boosting -----------------------------------------------------------

Outcome boosting() {
  const auto x = Matrix::from_rows({{0.0}, {1.0}, {2.0}});
  const std::vector<int> y{1, 1, 0};
  const ParamSet one_leaf{{"n_rounds", 1},      {"max_depth", 0},          {"lambda", 1},
                          {"learning_rate", 1}, {"init_from_base_rate", 0}, {"base_score", 0}};
  const auto m = fit(Family::Gbt, x, y, one_leaf);
  const auto& s = std::get<GbtState>(m.state());
  const double leaf = s.trees.at(0).nodes.at(0).value;
  const bool leaf_ok = s.trees.size() == 1 && s.trees[0].nodes.size() == 1 && std::abs(leaf - 2.0 / 7.0) <= 1e-12;

  const auto data = generate(default_generator_config(42, 10000));
  const auto fx = data.feature_matrix();
  std::size_t increases = 0;
  for (auto c : kAllComplications) {
    GbtTrace trace;
    fit_gbt_traced(fx, data.label(c), {{"n_rounds", 50}}, trace);
    if (trace.training_loss.size() != 51) ++increases;
    for (std::size_t r = 1; r < trace.training_loss.size(); ++r) increases += trace.training_loss[r] > trace.training_loss[r - 1];
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15f", leaf);
  return {leaf_ok && increases == 0, std::string("leaf weight ") + buf + " (2/7 +- 1e-12); loss increases in 50 rounds x 6 labels: " +
                                         std::to_string(increases)};
}

// ---- 4 and 5: determinism and model quality --------------------------------

Outcome determinism(const Paths& p, double& train_seconds) {
  const auto out = p.work / "rerun";
  fs::remove_all(out);
  const auto t0 = Clock::now();
  const int code = run(quote(p.cli) + " train --synthetic 42 --out " + quote(out) + " --quiet > " +
                       quote(p.work / "rerun_stdout.txt"));
  train_seconds = seconds_since(t0);
  if (code != 0) return {false, "second training run exited " + std::to_string(code)};
  std::size_t files = 0, differ = 0;
  for (const auto& e : fs::directory_iterator(p.models)) {
    ++files;
    const auto other = out / e.path().filename();
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) ++differ;
  }
  for (const auto& e : fs::directory_iterator(out)) differ += !fs::exists(p.models / e.path().filename());
  const bool same_stdout = slurp(p.train_stdout) == slurp(p.work / "rerun_stdout.txt");
  return {files >= 7 && differ == 0 && same_stdout,
          std::to_string(files) + " files compared, " + std::to_string(differ) + " differ; metrics output " +
              (same_stdout ? "identical" : "differs")};
}

Outcome model_quality(const Paths& p, double train_seconds) {
  std::istringstream in(slurp(p.train_stdout));
  std::string line;
  std::getline(in, line);  // header
  std::size_t rows = 0;
  double min_gbt = 1.0, min_ann = 1.0;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string name;
    double gbt_acc = 0, gbt_prec = 0, gbt_rec = 0, ann_acc = 0;
    if (!(row >> name >> gbt_acc >> gbt_prec >> gbt_rec >> ann_acc)) continue;
    ++rows;
    min_gbt = std::min(min_gbt, gbt_acc);
    min_ann = std::min(min_ann, ann_acc);
  }
  return {rows == kComplicationCount && min_gbt >= 0.85 && min_ann >= 0.80 && train_seconds < 600.0,
          "min GBT acc " + fmt(min_gbt) + " (>= 0.85), min ANN acc " + fmt(min_ann) + " (>= 0.80) over " +
              std::to_string(rows) + " complications; training " + fmt(train_seconds) + " s (< 600)"};
}

// ---- 6 and 7: rankings and perturbation -------------------------------------

Outcome rankings(const PredictionEngine& e) {
  const auto& cases = bundled_test_cases();
  const auto r1 = e.predict(cases[0].record).baseline.ranking;
  const auto r2 = e.predict(cases[1].record).baseline.ranking;
  const auto r3 = e.predict(cases[2].record).baseline.ranking;
  const bool ok = r1[0] == Complication::Cardiovascular && r2[0] == Complication::Abdominal &&
                  r3[0] == Complication::Neurological && r3[1] == Complication::Psychiatric;
  return {ok, "uc1 " + std::string(display_name(r1[0])) + "; uc2 " + std::string(display_name(r2[0])) + "; uc3 " +
                  std::string(display_name(r3[0])) + ", " + std::string(display_name(r3[1]))};
}

Outcome perturbation(const PredictionEngine& e) {
  const auto& cases = bundled_test_cases();
  std::size_t kept = 0;
  bool uc3 = false;
  std::string changed;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto r = e.predict_with_deviation(cases[i].record, Deviation::all(20));
    const bool same = r.baseline.ranking[0] == r.modified->ranking[0];
    kept += same;
    if (i == 2) uc3 = same;
    if (!same) changed += " " + cases[i].record.case_id;
  }
  return {uc3 && kept >= 5, "uc3 top " + std::string(uc3 ? "kept" : "changed") + "; top-1 preserved in " +
                                std::to_string(kept) + "/6 (>= 5)" + (changed.empty() ? "" : "; changed:" + changed)};
}

// ---- 8: feature selection ---------------------------------------------------

Outcome feature_selection() {
  auto cfg = default_generator_config(42, 10000);
  cfg.noise_features = 6;
  const auto data = generate(cfg);
  const auto names = data.feature_names();
  const TrainOptions defaults;
  const auto r = rfecv(Family::Gbt, data.feature_matrix(), data.label(Complication::Cardiovascular),
                       defaults.rfecv_params, defaults.k_folds, defaults.rfecv_step, defaults.seed);
  std::size_t noise = 0;
  bool chest = false;
  for (auto j : r.selected) {
    noise += names[j].rfind("noise_", 0) == 0;
    chest = chest || names[j] == "chest_pain";
  }
  return {noise == 0 && chest, "cardiovascular keeps " + std::to_string(r.selected.size()) + " of " +
                                   std::to_string(names.size()) + " features, " + std::to_string(noise) +
                                   " noise, chest_pain " + (chest ? "kept" : "dropped")};
}

// ---- 9: CLI transcripts -----------------------------------------------------

Outcome cli_transcripts(const Paths& p) {
  struct Script {
    std::string name, args;
  };
  const std::vector<Script> scripts{{"usecase-1", "--case 1 --modify no"},
                                    {"usecase-2", "--case 2 --modify no"},
                                    {"usecase-3", "--case 3 --modify yes --deviation 20"}};
  std::size_t matched = 0;
  for (const auto& s : scripts) {
    const auto out = p.work / (s.name + ".txt");
    const int code = run(quote(p.cli) + " demonstrate --models " + quote(p.models) + " " + s.args + " > " + quote(out));
    matched += code == 0 && slurp(out) == slurp(p.golden / (s.name + ".txt"));
  }

  const auto broken = p.work / "broken_models";
  fs::remove_all(broken);
  fs::copy(p.models, broken);
  std::ofstream(broken / "respiratory.bundle", std::ios::app) << "x";
  const auto nolabel = p.work / "nolabel.csv";
  {
    std::istringstream in(dataset_to_csv(generate(default_generator_config(1, 20))));
    std::ofstream out(nolabel);
    std::string line;
    while (std::getline(in, line)) out << line.substr(0, line.rfind(',')) << "\n";
  }
  const std::string quiet = " > /dev/null 2>&1";
  const std::string demo = quote(p.cli) + " demonstrate --models " + quote(p.models);
  const std::vector<std::pair<std::string, int>> errors{
      {demo + " --case 9", 2},
      {demo + " --case 1 --deviation abc", 2},
      {demo + " --case 1 --modify yes", 2},
      {quote(p.cli) + " demonstrate --bogus", 2},
      {quote(p.cli) + " train --dataset " + quote(nolabel) + " --out " + quote(p.work / "never"), 2},
      {quote(p.cli) + " demonstrate --models " + quote(p.work / "absent") + " --case 1", 3},
      {quote(p.cli) + " demonstrate --models " + quote(broken) + " --case 1", 3},
  };
  std::size_t right = 0;
  std::string wrong;
  for (const auto& [cmd, expect] : errors) {
    const int code = run(cmd + quiet);
    if (code == expect) {
      ++right;
    } else {
      wrong += "; exit " + std::to_string(code) + " for `" + cmd.substr(cmd.find(' ') + 1) + "`";
    }
  }
  return {matched == scripts.size() && right == errors.size(),
          std::to_string(matched) + "/3 transcripts byte-identical; " + std::to_string(right) + "/" +
              std::to_string(errors.size()) + " error paths exit 2/3" + wrong};
}

// ---- 10: service ------------------------------------------------------------

Outcome service(const Paths& p) {
  TriageService s(p.models);
  if (!s.load()) return {false, "load failed: " + s.load_error()};
  const int port = s.start_background();
  if (port <= 0) return {false, "could not bind"};
  httplib::Client client("127.0.0.1", port);
  client.set_keep_alive(true);
  client.set_tcp_nodelay(true);

  const auto& cases = bundled_test_cases();
  std::vector<std::string> bodies;
  for (const auto& c : cases) bodies.push_back(nlohmann::json{{"record", record_to_json(c.record)}}.dump());
  bool all_ok = true;
  for (int i = 0; i < 20; ++i) {
    auto r = client.Post("/api/v1/predict", bodies[i % bodies.size()], "application/json");
    all_ok = all_ok && r && r->status == 200;
  }
  std::vector<double> ms;
  for (int i = 0; i < 200; ++i) {
    const auto t0 = Clock::now();
    auto r = client.Post("/api/v1/predict", bodies[i % bodies.size()], "application/json");
    ms.push_back(seconds_since(t0) * 1000.0);
    all_ok = all_ok && r && r->status == 200;
  }
  std::sort(ms.begin(), ms.end());
  const double p95 = ms[static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(ms.size()))) - 1];

  auto typo = nlohmann::json::parse(bodies[0]);
  typo["record"]["heihgt"] = 180;
  auto bad = client.Post("/api/v1/predict", typo.dump(), "application/json");
  bool strict = bad && bad->status == 400;
  if (strict) {
    const auto e = nlohmann::json::parse(bad->body);
    strict = e["error"]["code"] == "unknown_field" && e["error"]["field"] == "heihgt";
  }
  bool routes = true;
  for (const char* path : {"/api/v1/health", "/api/v1/models", "/api/v1/testcases"}) {
    auto r = client.Get(path);
    routes = routes && r && r->status == 200;
  }
  s.stop();
  return {all_ok && p95 < 100.0 && strict && routes,
          "warm /predict p95 " + fmt(p95) + " ms over 200 keep-alive requests, TCP_NODELAY (< 100); unknown field -> " +
              (bad ? std::to_string(bad->status) : std::string("no reply")) + "; api routes " +
              (routes ? "up" : "down") + " without any UI build"};
}

}  // namespace

int main(int argc, char** argv) {
  Paths p;
  CLI::App app{"acceptance checks"};
  app.add_option("--models", p.models, "models trained with seed 42")->required();
  app.add_option("--train-stdout", p.train_stdout, "stdout of that training run")->required();
  app.add_option("--cli", p.cli, "triage-cli executable")->required();
  app.add_option("--golden", p.golden, "directory of golden transcripts")->required();
  app.add_option("--work", p.work, "scratch directory")->required();
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(p.work);

  std::size_t failed = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2d %-22s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  };

  double train_seconds = 0.0;
  report(1, "oracle-equivalence", oracle_equivalence);
  report(2, "gradient-checks", gradient_checks);
  report(3, "boosting", boosting);
  report(4, "determinism", [&] { return determinism(p, train_seconds); });
  report(5, "model-quality", [&] { return model_quality(p, train_seconds); });
  std::shared_ptr<const PredictionEngine> engine;
  try {
    engine = PredictionEngine::load(p.models);
  } catch (const std::exception& e) {
    std::printf("cannot load %s: %s\n", p.models.c_str(), e.what());
  }
  report(6, "ranking-fixtures", [&] { return engine ? rankings(*engine) : Outcome{false, "no engine"}; });
  report(7, "perturbation", [&] { return engine ? perturbation(*engine) : Outcome{false, "no engine"}; });
  report(8, "feature-selection", feature_selection);
  report(9, "cli-transcripts", [&] { return cli_transcripts(p); });
  report(10, "service", [&] { return service(p); });
  std::printf("%zu of 10 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
