#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "triage/preprocess.hpp"

using namespace triage;

namespace {

// Quartile by the textbook "linear between closest ranks" rule, written out
// independently of the library: position p*(n-1), blend the two neighbours.
double oracle_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto below = static_cast<std::size_t>(std::floor(pos));
  const auto above = static_cast<std::size_t>(std::ceil(pos));
  return v[below] + (v[above] - v[below]) * (pos - std::floor(pos));
}

std::size_t oracle_levenshtein(const std::string& a, const std::string& b, std::size_t i, std::size_t j) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  if (a[i] == b[j]) return oracle_levenshtein(a, b, i + 1, j + 1);
  return 1 + std::min({oracle_levenshtein(a, b, i + 1, j), oracle_levenshtein(a, b, i, j + 1),
                       oracle_levenshtein(a, b, i + 1, j + 1)});
}

RawTable table(std::string name, std::vector<std::pair<std::string, std::map<std::string, std::string>>> rows) {
  RawTable t;
  t.name = std::move(name);
  for (auto& [id, values] : rows) {
    for (const auto& [k, v] : values) {
      if (std::find(t.columns.begin(), t.columns.end(), k) == t.columns.end()) t.columns.push_back(k);
    }
    t.rows.push_back({id, values});
  }
  return t;
}

}  // namespace

TEST_CASE("iqr bounds on hand-computed samples") {
  const std::vector<double> skewed{70, 72, 75, 78, 80, 200};
  const auto b = iqr_bounds(skewed);
  CHECK(b.q1 == doctest::Approx(72.75).epsilon(1e-12));
  CHECK(b.q3 == doctest::Approx(79.5).epsilon(1e-12));
  CHECK(b.lower == doctest::Approx(62.625).epsilon(1e-12));
  CHECK(b.upper == doctest::Approx(89.625).epsilon(1e-12));

  const std::vector<double> constant{5, 5, 5, 5};
  CHECK(iqr_bounds(constant) == IqrBounds{5, 5, 5, 5});

  const std::vector<double> symmetric{1, 2, 3, 4, 5};
  const auto s = iqr_bounds(symmetric);
  CHECK(s.q1 == 2.0);
  CHECK(s.q3 == 4.0);
  CHECK(s.lower == -1.0);
  CHECK(s.upper == 7.0);
}

TEST_CASE("iqr bounds need four finite values") {
  const std::vector<double> three{1, 2, 3};
  CHECK(testutil::error_code_of([&] { iqr_bounds(three); }) == ErrorCode::InsufficientData);
  const std::vector<double> nan{1, 2, 3, std::nan("")};
  CHECK(testutil::error_code_of([&] { iqr_bounds(nan); }) == ErrorCode::Data);
}

TEST_CASE("outlier repair on hand-computed samples") {
  const std::vector<double> skewed{70, 72, 75, 78, 80, 200};
  const auto r = repair_outliers(skewed, iqr_bounds(skewed));
  CHECK(r.column == std::vector<double>{70, 72, 75, 78, 80, 75});
  CHECK(r.repairs == 1);

  const std::vector<double> clean{1, 2, 3, 4, 5};
  const auto c = repair_outliers(clean, iqr_bounds(clean));
  CHECK(c.column == clean);
  CHECK(c.repairs == 0);

  const std::vector<double> both{0, 80, 82, 84, 300};
  const auto t = repair_outliers(both, iqr_bounds(both));
  CHECK(t.column == std::vector<double>{82, 80, 82, 84, 82});
  CHECK(t.repairs == 2);
}

TEST_CASE("iqr bounds and repair agree with a brute-force oracle on random samples") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 4 + rng() % 30;
    std::vector<double> v(n);
    // integers give ties; occasional wide values give outliers
    for (auto& x : v) x = static_cast<double>(static_cast<int>(rng() % 50)) + ((rng() % 10 == 0) ? 500.0 : 0.0);
    const auto b = iqr_bounds(v);
    const double q1 = oracle_quantile(v, 0.25), q3 = oracle_quantile(v, 0.75);
    CHECK(std::abs(b.q1 - q1) <= 1e-12);
    CHECK(std::abs(b.q3 - q3) <= 1e-12);
    CHECK(std::abs(b.lower - (q1 - 1.5 * (q3 - q1))) <= 1e-12);
    CHECK(std::abs(b.upper - (q3 + 1.5 * (q3 - q1))) <= 1e-12);

    double sum = 0.0;
    std::size_t inside = 0, outside = 0;
    for (double x : v) {
      if (x >= b.lower && x <= b.upper) {
        sum += x;
        ++inside;
      } else {
        ++outside;
      }
    }
    const auto r = repair_outliers(v, b);
    CHECK(r.repairs == outside);
    const double mean = sum / static_cast<double>(inside);
    for (std::size_t i = 0; i < n; ++i) {
      const bool in = v[i] >= b.lower && v[i] <= b.upper;
      CHECK(std::abs(r.column[i] - (in ? v[i] : mean)) <= 1e-12);
    }
  }
}

TEST_CASE("repair rules fitted on a matrix skip gcs and circulation") {
  std::mt19937_64 rng(3);
  Matrix x(200, kFeatureCount);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = encode(testutil::random_record(rng));
    std::copy(row.begin(), row.end(), x.row(i).begin());
  }
  const auto rules = fit_vital_repairs(x);
  std::vector<std::string> names;
  for (const auto& r : rules) names.push_back(r.feature);
  CHECK(std::find(names.begin(), names.end(), "gcs_total") == names.end());
  CHECK(std::find(names.begin(), names.end(), "circulation_state") == names.end());
  CHECK(names.size() == iqr_filtered_vitals().size());

  std::vector<double> row(x.row(0).begin(), x.row(0).end());
  row[feature_index(Vital::PulseRate)] = 1e6;
  apply_repairs(rules, row);
  for (const auto& r : rules) {
    if (r.feature == "pulse_rate") CHECK(row[feature_index(Vital::PulseRate)] == r.replacement);
  }
}

TEST_CASE("merge keys rows by case id with first-wins conflicts") {
  const std::vector<RawTable> disjoint{table("A", {{"c1", {{"x", "1"}}}}),
                                       table("B", {{"c1", {{"y", "2"}}}, {"c2", {{"y", "3"}}}})};
  const auto m = merge_tables(disjoint);
  REQUIRE(m.table.rows.size() == 2);
  CHECK(m.table.rows[0].values == std::map<std::string, std::string>{{"x", "1"}, {"y", "2"}});
  CHECK(m.table.rows[1].values.at("y") == "3");
  CHECK(m.conflicts == 0);

  const std::vector<RawTable> clash{table("A", {{"c1", {{"x", "1"}}}}), table("B", {{"c1", {{"x", "9"}}}})};
  const auto c = merge_tables(clash);
  CHECK(c.table.rows[0].values.at("x") == "1");
  CHECK(c.conflicts == 1);
}

TEST_CASE("merging 80 single-column tables over 100 cases") {
  std::vector<RawTable> tables;
  for (int t = 0; t < 80; ++t) {
    RawTable tab;
    tab.name = "t" + std::to_string(t);
    tab.columns = {"col" + std::to_string(t)};
    for (int c = 0; c < 100; ++c) {
      // every table covers a shifted subset so row order must come from first appearance
      if ((c + t) % 3 == 0 || t == 0) tab.rows.push_back({"case" + std::to_string(c), {{tab.columns[0], "v"}}});
    }
    tables.push_back(tab);
  }
  const auto m = merge_tables(tables);
  CHECK(m.table.columns.size() == 80);
  CHECK(m.table.rows.size() == 100);
}

TEST_CASE("column reduction drops empty and duplicate columns") {
  RawTable t = table("A", {{"c1", {{"a", "1"}, {"b", "1"}, {"e", ""}}}, {"c2", {{"a", "2"}, {"b", "2"}, {"e", ""}}}});
  const auto r = reduce_columns(t);
  CHECK(r.table.columns == std::vector<std::string>{"a"});
  REQUIRE(r.dropped.size() == 2);
  CHECK(r.dropped[0].column == "e");
  CHECK(r.dropped[0].reason == "below fill threshold");
  CHECK(r.dropped[1].column == "b");
  CHECK(r.dropped[1].reason == "duplicate of a");
}

TEST_CASE("planted empty and duplicate columns in a 452-column table") {
  std::mt19937_64 rng(452);
  RawTable t;
  t.name = "wide";
  std::vector<std::string> kept;
  for (int j = 0; j < 380; ++j) kept.push_back("k" + std::to_string(j));
  std::vector<std::string> all = kept;
  for (int j = 0; j < 36; ++j) all.push_back("empty" + std::to_string(j));
  for (int j = 0; j < 36; ++j) all.push_back("dup" + std::to_string(j));
  std::shuffle(all.begin() + 1, all.end(), rng);  // originals may follow their copies; first stays an original
  t.columns = all;
  for (int c = 0; c < 100; ++c) {
    RawRow row{"case" + std::to_string(c), {}};
    for (const auto& k : kept) row.values[k] = std::to_string(rng() % 1000000);
    for (int j = 0; j < 36; ++j) row.values["dup" + std::to_string(j)] = row.values[kept[static_cast<std::size_t>(j)]];
    t.rows.push_back(row);
  }
  const auto r = reduce_columns(t);
  CHECK(r.table.columns.size() == 380);
  CHECK(r.dropped.size() == 72);
}

TEST_CASE("levenshtein matches the recursive definition") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 1000; ++trial) {
    std::string a, b;
    for (std::size_t i = rng() % 7; i > 0; --i) a += static_cast<char>('a' + rng() % 3);
    for (std::size_t i = rng() % 7; i > 0; --i) b += static_cast<char>('a' + rng() % 3);
    CHECK(levenshtein(a, b) == oracle_levenshtein(a, b, 0, 0));
  }
}

TEST_CASE("token normalization") {
  const SynonymMap dict{{"brustschmerz", "chest_pain"}};
  CHECK(normalize_token("Brustschmerz", dict) == "chest_pain");
  CHECK(normalize_token("brustschmer", dict) == "chest_pain");
  CHECK(normalize_token("xyzzy", dict) == "xyzzy");
  CHECK(normalize_token("Atemnot", default_synonyms()) == "respiratory_distress");
  CHECK(parse_flag_token("ja") == true);
  CHECK(parse_flag_token("Nein") == false);
  CHECK(parse_flag_token("1") == true);
  CHECK_FALSE(parse_flag_token("2").has_value());
  CHECK_FALSE(parse_flag_token("").has_value());
}

TEST_CASE("mean arterial pressure") {
  CHECK(derive_map(142, 85) == doctest::Approx(104.0).epsilon(1e-12));
  CHECK(derive_map(132, 82) == doctest::Approx(98.6667).epsilon(1e-5));
  CHECK(derive_map(100, 100) == 100.0);
}

TEST_CASE("scaler standardizes numeric columns with population stddev") {
  const auto x = Matrix::from_rows({{1, 0}, {2, 1}, {3, 1}});
  const auto s = fit_scaler(x, {true, false});
  CHECK(s.columns[0].mean == doctest::Approx(2.0));
  CHECK(s.columns[0].stddev == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));
  CHECK(s.columns[1].scaled == false);
  const std::vector<double> mid{2, 1};
  CHECK(s.apply(mid) == std::vector<double>{0.0, 1.0});

  const auto constant = Matrix::from_rows({{4, 1}, {4, 0}, {4, 1}});
  const auto c = fit_scaler(constant, {true, false});
  CHECK(c.constant_columns == std::vector<std::size_t>{0});
  CHECK(c.apply(std::vector<double>{4, 1}) == std::vector<double>{4, 1});
}

TEST_CASE("scaler on already standardized data is close to identity") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> v(1000);
  for (auto& x : v) x = n(rng);
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / 1000.0;
  double ss = 0;
  for (auto& x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / 1000.0);
  Matrix m(1000, 1);
  for (std::size_t i = 0; i < 1000; ++i) m(i, 0) = (v[i] - mean) / sd;
  const auto s = fit_scaler(m, {true});
  for (std::size_t i = 0; i < 1000; i += 97) CHECK(std::abs(s.apply(m.row(i))[0] - m(i, 0)) < 1e-9);
}

TEST_CASE("dataset csv round-trips and reports missing labels") {
  auto cfg = default_generator_config(3, 50);
  cfg.noise_features = 2;
  const auto data = generate(cfg);
  const auto text = dataset_to_csv(data);
  const auto back = dataset_from_csv(text, true);
  CHECK(back.records == data.records);
  CHECK(back.labels == data.labels);
  CHECK(back.extra_feature_names == data.extra_feature_names);
  CHECK(dataset_to_csv(back) == text);

  std::string without = text;
  const auto pos = without.find(",label_metabolic");
  REQUIRE(pos != std::string::npos);
  // drop the header name and the last cell of every row
  std::string rebuilt;
  std::size_t start = 0;
  bool header = true;
  while (start < without.size()) {
    auto end = without.find('\n', start);
    std::string line = without.substr(start, end - start);
    line = header ? line.substr(0, line.rfind(",label_metabolic")) : line.substr(0, line.rfind(','));
    header = false;
    rebuilt += line + "\n";
    start = end + 1;
  }
  try {
    dataset_from_csv(rebuilt, true);
    FAIL("missing label column accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Data);
    CHECK(e.field() == "label_metabolic");
  }
  CHECK_NOTHROW(dataset_from_csv(rebuilt, false));
}

TEST_CASE("test-case csv derives a missing mean arterial pressure") {
  std::string header = "case_id";
  std::string row = "x";
  for (const auto& name : canonical_feature_names()) {
    if (name == "mean_arterial_pressure") continue;
    header += "," + name;
    if (name == "systolic_bp") row += ",142";
    else if (name == "diastolic_bp") row += ",85";
    else if (name == "gcs_total") row += ",15";
    else if (name == "respiratory_rate") row += ",16";
    else if (name == "pulse_rate") row += ",80";
    else if (name == "blood_glucose") row += ",100";
    else if (name == "spo2") row += ",98";
    else if (name == "body_temperature") row += ",36.8";
    else row += ",0";
  }
  const auto cases = cases_from_csv(header + "\n" + row + "\n");
  REQUIRE(cases.size() == 1);
  CHECK(cases[0].vitals.mean_arterial_pressure == doctest::Approx(104.0));
  CHECK(cases_from_csv(cases_to_csv(cases)) == cases);
}
