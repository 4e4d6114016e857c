#include "triage/preprocess.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "triage/csv.hpp"
#include "triage/error.hpp"

namespace triage {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::optional<double> parse_double(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
    throw Error(ErrorCode::Data, "not a number: '" + std::string(cell) + "'");
  }
  return value;
}

}  // namespace

// ---------------------------------------------------------------------------
// Integration

RawTable raw_table_from_csv(std::string name, std::string_view text) {
  auto doc = csv::parse(text);
  if (doc.header.empty() || trim(doc.header.front()) != "case_id") {
    throw Error(ErrorCode::Parse, name + ": first column must be case_id");
  }
  RawTable table;
  table.name = std::move(name);
  table.columns.assign(doc.header.begin() + 1, doc.header.end());
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    RawRow row;
    row.case_id = std::string(trim(doc.rows[r].front()));
    if (row.case_id.empty()) {
      throw Error(ErrorCode::Data, table.name + ": empty case_id on data row " + std::to_string(r + 1), "case_id");
    }
    for (std::size_t c = 1; c < doc.header.size(); ++c) row.values[doc.header[c]] = doc.rows[r][c];
    table.rows.push_back(std::move(row));
  }
  return table;
}

RawTable read_raw_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return raw_table_from_csv(path.filename().string(), buffer.str());
}

std::string raw_table_to_csv(const RawTable& table) {
  csv::Document doc;
  doc.header.push_back("case_id");
  doc.header.insert(doc.header.end(), table.columns.begin(), table.columns.end());
  for (const auto& row : table.rows) {
    std::vector<std::string> out{row.case_id};
    for (const auto& col : table.columns) {
      auto it = row.values.find(col);
      out.push_back(it == row.values.end() ? std::string{} : it->second);
    }
    doc.rows.push_back(std::move(out));
  }
  return csv::format(doc);
}

MergeResult merge_tables(std::span<const RawTable> tables) {
  if (tables.empty()) throw Error(ErrorCode::Integration, "merge_tables needs at least one table");

  MergeResult result;
  result.table.name = "merged";
  std::unordered_map<std::string, std::size_t> row_of;
  std::unordered_set<std::string> known_columns;

  for (const auto& table : tables) {
    std::unordered_set<std::string> seen_in_table;
    for (const auto& col : table.columns) {
      if (known_columns.insert(col).second) result.table.columns.push_back(col);
    }
    for (const auto& row : table.rows) {
      if (!seen_in_table.insert(row.case_id).second) {
        throw Error(ErrorCode::Integration,
                    "duplicate case_id '" + row.case_id + "' in table " + table.name, "case_id");
      }
      auto [it, inserted] = row_of.try_emplace(row.case_id, result.table.rows.size());
      if (inserted) result.table.rows.push_back(RawRow{row.case_id, {}});
      auto& target = result.table.rows[it->second].values;
      for (const auto& [col, value] : row.values) {
        if (known_columns.insert(col).second) result.table.columns.push_back(col);
        auto existing = target.find(col);
        if (existing == target.end() || existing->second.empty()) {
          target[col] = value;
        } else if (!value.empty() && value != existing->second) {
          ++result.conflicts;
        }
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Reduction

ReduceResult reduce_columns(const RawTable& table, double min_fill, double duplicate_threshold) {
  ReduceResult result;
  result.table.name = table.name;
  const double n = static_cast<double>(table.rows.size());

  auto cell = [&](std::size_t row, const std::string& col) -> const std::string* {
    const auto& values = table.rows[row].values;
    auto it = values.find(col);
    if (it == values.end() || it->second.empty()) return nullptr;
    return &it->second;
  };

  std::vector<std::string> filled;
  for (const auto& col : table.columns) {
    std::size_t present = 0;
    for (std::size_t r = 0; r < table.rows.size(); ++r) present += cell(r, col) != nullptr;
    double ratio = n > 0 ? static_cast<double>(present) / n : 0.0;
    if (ratio < min_fill || present == 0) {
      result.dropped.push_back({col, "below fill threshold"});
    } else {
      filled.push_back(col);
    }
  }

  for (const auto& col : filled) {
    std::optional<std::string> duplicate_of;
    for (const auto& kept : result.table.columns) {
      std::size_t co_present = 0;
      std::size_t equal = 0;
      for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto* a = cell(r, kept);
        const auto* b = cell(r, col);
        if (!a || !b) continue;
        ++co_present;
        equal += *a == *b;
      }
      if (co_present > 0 &&
          static_cast<double>(equal) >= duplicate_threshold * static_cast<double>(co_present)) {
        duplicate_of = kept;
        break;
      }
    }
    if (duplicate_of) {
      result.dropped.push_back({col, "duplicate of " + *duplicate_of});
    } else {
      result.table.columns.push_back(col);
    }
  }

  std::unordered_set<std::string> keep(result.table.columns.begin(), result.table.columns.end());
  for (const auto& row : table.rows) {
    RawRow out{row.case_id, {}};
    for (const auto& [col, value] : row.values) {
      if (keep.contains(col)) out.values[col] = value;
    }
    result.table.rows.push_back(std::move(out));
  }
  return result;
}

std::string format_drop_report(std::span<const DroppedColumn> dropped) {
  std::string out;
  for (const auto& d : dropped) out += d.column + "\t" + d.reason + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Filtering

double interpolated_quantile(std::span<const double> sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

IqrBounds iqr_bounds(std::span<const double> values) {
  if (values.size() < 4) {
    throw Error(ErrorCode::InsufficientData,
                "IQR needs at least 4 values, got " + std::to_string(values.size()));
  }
  std::vector<double> sorted(values.begin(), values.end());
  for (double v : sorted) {
    if (!std::isfinite(v)) throw Error(ErrorCode::Data, "IQR input contains a non-finite value");
  }
  std::sort(sorted.begin(), sorted.end());
  IqrBounds b;
  b.q1 = interpolated_quantile(sorted, 0.25);
  b.q3 = interpolated_quantile(sorted, 0.75);
  const double iqr = b.q3 - b.q1;
  b.lower = b.q1 - 1.5 * iqr;
  b.upper = b.q3 + 1.5 * iqr;
  return b;
}

RepairResult repair_outliers(std::span<const double> column, const IqrBounds& bounds) {
  double sum = 0.0;
  std::size_t inside = 0;
  for (double v : column) {
    if (bounds.contains(v)) {
      sum += v;
      ++inside;
    }
  }
  if (inside == 0 && !column.empty()) {
    throw Error(ErrorCode::Repair, "every value lies outside the IQR bounds; column unusable");
  }
  RepairResult result;
  result.replacement = inside ? sum / static_cast<double>(inside) : 0.0;
  result.column.reserve(column.size());
  for (double v : column) {
    if (bounds.contains(v)) {
      result.column.push_back(v);
    } else {
      result.column.push_back(result.replacement);
      ++result.repairs;
    }
  }
  return result;
}

std::vector<Vital> iqr_filtered_vitals() {
  return {Vital::RespiratoryRate, Vital::SystolicBp, Vital::DiastolicBp, Vital::MeanArterialPressure,
          Vital::PulseRate,       Vital::BloodGlucose, Vital::Spo2,      Vital::BodyTemperature};
}

std::vector<VitalRepair> fit_vital_repairs(const Matrix& x) {
  if (x.cols() < kFeatureCount) throw Error(ErrorCode::Shape, "repair expects canonical feature columns");
  std::vector<VitalRepair> repairs;
  for (auto vital : iqr_filtered_vitals()) {
    const auto values = x.column(feature_index(vital));
    const auto bounds = iqr_bounds(values);
    const auto repaired = repair_outliers(values, bounds);
    repairs.push_back({std::string(vital_name(vital)), bounds, repaired.replacement});
  }
  return repairs;
}

std::vector<VitalRepair> fit_and_repair_vitals(Matrix& x) {
  auto repairs = fit_vital_repairs(x);
  apply_repairs(repairs, x);
  return repairs;
}

void apply_repairs(std::span<const VitalRepair> repairs, std::span<double> row) {
  for (const auto& rule : repairs) {
    auto index = canonical_feature_index(rule.feature);
    if (!index) throw Error(ErrorCode::Data, "repair rule for unknown feature " + rule.feature, rule.feature);
    if (!rule.bounds.contains(row[*index])) row[*index] = rule.replacement;
  }
}

void apply_repairs(std::span<const VitalRepair> repairs, Matrix& x) {
  for (std::size_t r = 0; r < x.rows(); ++r) apply_repairs(repairs, x.row(r));
}

// ---------------------------------------------------------------------------
// Text unification

std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t subst = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, subst});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string normalize_token(std::string_view word, const SynonymMap& dictionary) {
  const std::string needle = lowercase(trim(word));
  std::optional<std::string> best;
  std::size_t best_distance = 3;
  for (const auto& [variant, canonical] : dictionary) {
    const std::string v = lowercase(variant);
    if (v == needle) return canonical;
    const std::size_t d = levenshtein(needle, v);
    if (d < best_distance || (d == best_distance && best && canonical < *best)) {
      best_distance = d;
      best = canonical;
    }
  }
  if (best && best_distance <= 2) return *best;
  return needle;
}

const SynonymMap& default_synonyms() {
  static const SynonymMap dictionary = {
      {"brustschmerz", "chest_pain"},
      {"brustschmerzen", "chest_pain"},
      {"thoraxschmerz", "chest_pain"},
      {"chest pain", "chest_pain"},
      {"atemnot", "respiratory_distress"},
      {"dyspnoe", "respiratory_distress"},
      {"dyspnea", "respiratory_distress"},
      {"bauchschmerz", "abdominal_pain"},
      {"bauchschmerzen", "abdominal_pain"},
      {"abdominal pain", "abdominal_pain"},
      {"kopfschmerz", "head_discomfort"},
      {"kopfverletzung", "head_injury"},
      {"schaedelhirntrauma", "head_injury"},
      {"krampfanfall", "seizure_observed"},
      {"schwindel", "dizziness"},
      {"erbrechen", "nausea_vomiting"},
      {"uebelkeit", "nausea_vomiting"},
      {"alkohol", "alcohol_intoxication"},
      {"drogen", "drug_intoxication"},
  };
  return dictionary;
}

std::optional<bool> parse_flag_token(std::string_view cell) {
  static const SynonymMap booleans = {
      {"1", "yes"},    {"0", "no"},     {"1.0", "yes"}, {"0.0", "no"},  {"true", "yes"},
      {"false", "no"}, {"yes", "yes"},  {"no", "no"},   {"ja", "yes"},  {"nein", "no"},
      {"y", "yes"},    {"n", "no"},     {"j", "yes"},
  };
  const std::string token = lowercase(trim(cell));
  if (token.empty()) return std::nullopt;
  std::string canonical;
  if (auto it = booleans.find(token); it != booleans.end()) {
    canonical = it->second;
  } else if (token.size() >= 4) {
    // Fuzzy matching only for longer words; "2" must not resolve to "1".
    canonical = normalize_token(token, booleans);
  }
  if (canonical == "yes") return true;
  if (canonical == "no") return false;
  return std::nullopt;
}

double derive_map(double systolic, double diastolic) {
  if (!(diastolic > 0.0) || !(systolic >= diastolic)) {
    throw Error(ErrorCode::Range, "derive_map requires systolic >= diastolic > 0", "mean_arterial_pressure");
  }
  return (systolic + 2.0 * diastolic) / 3.0;
}

// ---------------------------------------------------------------------------
// Scaling

std::vector<double> Scaler::apply(std::span<const double> x) const {
  std::vector<double> out(x.begin(), x.end());
  apply_in_place(out);
  return out;
}

void Scaler::apply_in_place(std::span<double> x) const {
  if (x.size() != columns.size()) {
    throw Error(ErrorCode::Shape, "scaler fitted on " + std::to_string(columns.size()) + " features, got " +
                                      std::to_string(x.size()));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (columns[i].scaled) x[i] = (x[i] - columns[i].mean) / columns[i].stddev;
  }
}

Matrix Scaler::apply(const Matrix& x) const {
  Matrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) apply_in_place(out.row(r));
  return out;
}

Scaler fit_scaler(const Matrix& x, const std::vector<bool>& numeric) {
  if (numeric.size() != x.cols()) throw Error(ErrorCode::Shape, "numeric mask width does not match data");
  if (x.rows() == 0) throw Error(ErrorCode::InsufficientData, "cannot fit a scaler on zero rows");
  Scaler scaler;
  scaler.columns.resize(x.cols());
  const double n = static_cast<double>(x.rows());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    if (!numeric[c]) continue;
    double mean = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) mean += x(r, c);
    mean /= n;
    double var = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) var += (x(r, c) - mean) * (x(r, c) - mean);
    const double sd = std::sqrt(var / n);
    if (sd < 1e-12) {
      scaler.constant_columns.push_back(c);
      continue;
    }
    scaler.columns[c] = {mean, sd, true};
  }
  return scaler;
}

std::vector<bool> canonical_numeric_mask(std::size_t width) {
  std::vector<bool> mask(width, false);
  for (std::size_t i = 0; i < std::min(width, kVitalCount); ++i) mask[i] = true;
  return mask;
}

// ---------------------------------------------------------------------------
// Dataset files

namespace {

struct ParsedRows {
  std::vector<PatientRecord> records;
  std::vector<std::string> extra_names;
  Matrix extras;
  std::array<std::vector<int>, kComplicationCount> labels;
  std::array<bool, kComplicationCount> has_label{};
};

double default_for(Vital v) {
  switch (v) {
    case Vital::BodyTemperature: return 36.8;
    case Vital::GcsTotal: return 15.0;
    case Vital::CirculationState: return 0.0;
    default: return std::nan("");
  }
}

ParsedRows parse_rows(std::string_view text, bool allow_extras) {
  auto doc = csv::parse(text);
  if (doc.header.empty() || trim(doc.header.front()) != "case_id") {
    throw Error(ErrorCode::Parse, "first column must be case_id", "case_id");
  }

  std::array<std::optional<std::size_t>, kFeatureCount> feature_col;
  std::array<std::optional<std::size_t>, kComplicationCount> label_col;
  std::vector<std::size_t> extra_cols;
  ParsedRows out;

  for (std::size_t c = 1; c < doc.header.size(); ++c) {
    const std::string name(trim(doc.header[c]));
    if (auto idx = canonical_feature_index(name)) {
      feature_col[*idx] = c;
      continue;
    }
    bool is_label = false;
    for (auto comp : kAllComplications) {
      if (name == label_column(comp)) {
        label_col[index_of(comp)] = c;
        is_label = true;
      }
    }
    if (is_label) continue;
    if (!allow_extras) throw Error(ErrorCode::Data, "unknown column " + name, name);
    extra_cols.push_back(c);
    out.extra_names.push_back(name);
  }

  for (std::size_t i = 0; i < kVitalCount; ++i) {
    auto v = static_cast<Vital>(i);
    if (!feature_col[i] && std::isnan(default_for(v)) && v != Vital::MeanArterialPressure) {
      throw Error(ErrorCode::Data, "missing column " + std::string(vital_name(v)), std::string(vital_name(v)));
    }
  }

  out.extras = Matrix(0, extra_cols.size());
  for (std::size_t k = 0; k < kComplicationCount; ++k) out.has_label[k] = label_col[k].has_value();

  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& row = doc.rows[r];
    PatientRecord rec;
    rec.case_id = std::string(trim(row.front()));
    if (rec.case_id.empty()) throw Error(ErrorCode::Data, "empty case_id on data row " + std::to_string(r + 1), "case_id");

    auto where = [&](std::string_view col) { return std::string(col) + " (case " + rec.case_id + ")"; };

    bool map_given = false;
    for (std::size_t i = 0; i < kVitalCount; ++i) {
      auto v = static_cast<Vital>(i);
      std::optional<double> value;
      if (feature_col[i]) {
        try {
          value = parse_double(row[*feature_col[i]]);
        } catch (const Error& e) {
          throw Error(ErrorCode::Data, std::string(e.what()) + " in " + where(vital_name(v)),
                      std::string(vital_name(v)));
        }
      }
      if (!value) {
        if (v == Vital::MeanArterialPressure) continue;
        if (std::isnan(default_for(v))) {
          throw Error(ErrorCode::Data, "missing value for " + where(vital_name(v)), std::string(vital_name(v)));
        }
        value = default_for(v);
      }
      if (v == Vital::MeanArterialPressure) map_given = true;
      rec.vitals.set(v, *value);
    }
    if (!map_given) rec.vitals.mean_arterial_pressure = derive_map(rec.vitals.systolic_bp, rec.vitals.diastolic_bp);

    for (std::size_t i = 0; i < kFlagCount; ++i) {
      const auto col = feature_col[kVitalCount + i];
      if (!col) continue;
      const auto& cell = row[*col];
      if (trim(cell).empty()) continue;
      auto flag = parse_flag_token(cell);
      if (!flag) {
        throw Error(ErrorCode::Data, "cannot read '" + cell + "' as a flag in " + where(flag_name(static_cast<Flag>(i))),
                    std::string(flag_name(static_cast<Flag>(i))));
      }
      rec.flags.values[i] = *flag;
    }

    std::vector<double> extra_values;
    for (std::size_t j = 0; j < extra_cols.size(); ++j) {
      auto value = parse_double(row[extra_cols[j]]);
      extra_values.push_back(value.value_or(0.0));
    }
    if (!extra_cols.empty()) out.extras.append_row(extra_values);

    for (std::size_t k = 0; k < kComplicationCount; ++k) {
      if (!label_col[k]) continue;
      const auto cell = trim(row[*label_col[k]]);
      if (cell != "0" && cell != "1") {
        throw Error(ErrorCode::Data, "label must be 0 or 1 in " + where(label_column(kAllComplications[k])),
                    label_column(kAllComplications[k]));
      }
      out.labels[k].push_back(cell == "1" ? 1 : 0);
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

std::vector<std::string> record_cells(const PatientRecord& rec) {
  std::vector<std::string> cells{rec.case_id};
  for (std::size_t i = 0; i < kVitalCount; ++i) cells.push_back(format_double(rec.vitals.get(static_cast<Vital>(i))));
  for (std::size_t i = 0; i < kFlagCount; ++i) cells.push_back(rec.flags.values[i] ? "1" : "0");
  return cells;
}

std::vector<std::string> base_header() {
  std::vector<std::string> header{"case_id"};
  const auto& names = canonical_feature_names();
  header.insert(header.end(), names.begin(), names.end());
  return header;
}

}  // namespace

std::string dataset_to_csv(const LabeledDataset& data) {
  data.validate();
  csv::Document doc;
  doc.header = base_header();
  doc.header.insert(doc.header.end(), data.extra_feature_names.begin(), data.extra_feature_names.end());
  for (auto c : kAllComplications) doc.header.push_back(label_column(c));
  for (std::size_t r = 0; r < data.size(); ++r) {
    auto cells = record_cells(data.records[r]);
    for (std::size_t j = 0; j < data.extra_feature_names.size(); ++j) cells.push_back(format_double(data.extra_features(r, j)));
    for (auto c : kAllComplications) cells.push_back(data.label(c)[r] ? "1" : "0");
    doc.rows.push_back(std::move(cells));
  }
  return csv::format(doc);
}

void write_dataset_csv(const std::filesystem::path& path, const LabeledDataset& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << dataset_to_csv(data);
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

LabeledDataset dataset_from_csv(std::string_view text, bool require_labels) {
  auto parsed = parse_rows(text, true);
  LabeledDataset data;
  for (std::size_t k = 0; k < kComplicationCount; ++k) {
    if (!parsed.has_label[k]) {
      if (require_labels) {
        auto name = label_column(kAllComplications[k]);
        throw Error(ErrorCode::Data, "missing label column " + name, name);
      }
      parsed.labels[k].assign(parsed.records.size(), 0);
    }
  }
  data.records = std::move(parsed.records);
  data.labels = std::move(parsed.labels);
  data.extra_feature_names = std::move(parsed.extra_names);
  data.extra_features = std::move(parsed.extras);
  if (data.extra_feature_names.empty()) data.extra_features = Matrix{};
  data.validate();
  return data;
}

LabeledDataset read_dataset_csv(const std::filesystem::path& path, bool require_labels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return dataset_from_csv(buffer.str(), require_labels);
}

std::vector<PatientRecord> cases_from_csv(std::string_view text) {
  auto parsed = parse_rows(text, false);
  for (const auto& rec : parsed.records) validate(rec);
  return std::move(parsed.records);
}

std::vector<PatientRecord> read_cases_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return cases_from_csv(buffer.str());
}

std::string cases_to_csv(std::span<const PatientRecord> cases) {
  csv::Document doc;
  doc.header = base_header();
  for (const auto& rec : cases) doc.rows.push_back(record_cells(rec));
  return csv::format(doc);
}

}  // namespace triage
