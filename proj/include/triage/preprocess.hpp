#pragma once

// Data preparation: table integration keyed by case number, column
// reduction, IQR outlier filtering with mean replacement, token
// unification, MAP derivation and feature standardization.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "triage/core_types.hpp"
#include "triage/matrix.hpp"

namespace triage {

struct RawRow {
  std::string case_id;
  std::map<std::string, std::string> values;
};

struct RawTable {
  std::string name;
  std::vector<RawRow> rows;
  /// Column order as first seen (excluding case_id).
  std::vector<std::string> columns;
};

/// Reads a CSV whose first column is `case_id`.
RawTable read_raw_table(const std::filesystem::path& path);
RawTable raw_table_from_csv(std::string name, std::string_view text);
std::string raw_table_to_csv(const RawTable& table);

struct MergeResult {
  RawTable table;
  std::size_t conflicts = 0;
};

/// One row per distinct case_id (first-appearance order), union of columns.
/// Conflicting non-empty values keep the earliest table's value.
MergeResult merge_tables(std::span<const RawTable> tables);

struct DroppedColumn {
  std::string column;
  std::string reason;
};

struct ReduceResult {
  RawTable table;
  std::vector<DroppedColumn> dropped;
};

/// Drops columns whose fill ratio is below `min_fill`, then among pairs that
/// agree on at least `duplicate_threshold` of their co-present rows keeps the
/// earlier column.
ReduceResult reduce_columns(const RawTable& table, double min_fill = 0.02,
                            double duplicate_threshold = 0.999);

/// `<column>\t<reason>` lines.
std::string format_drop_report(std::span<const DroppedColumn> dropped);

struct IqrBounds {
  double q1 = 0.0;
  double q3 = 0.0;
  double lower = 0.0;
  double upper = 0.0;

  bool contains(double v) const { return v >= lower && v <= upper; }
  bool operator==(const IqrBounds&) const = default;
};

/// Linear-interpolation quartile on an ascending sample at position p*(n-1).
double interpolated_quantile(std::span<const double> sorted, double p);

/// Requires at least four finite values.
IqrBounds iqr_bounds(std::span<const double> values);

struct RepairResult {
  std::vector<double> column;
  std::size_t repairs = 0;
  double replacement = 0.0;
};

/// Values outside the bounds become the mean of the in-bound values.
RepairResult repair_outliers(std::span<const double> column, const IqrBounds& bounds);

/// Training-time repair rule for one feature, reused unchanged at prediction.
struct VitalRepair {
  std::string feature;
  IqrBounds bounds;
  double replacement = 0.0;

  bool operator==(const VitalRepair&) const = default;
};

/// Vitals subject to IQR filtering: the continuous measurements. GCS and
/// circulation state are bounded ordinal scores and are not filtered.
std::vector<Vital> iqr_filtered_vitals();

/// Fits a repair rule per filtered vital on the canonical columns of `x`.
std::vector<VitalRepair> fit_vital_repairs(const Matrix& x);
/// Same, and repairs `x` in place.
std::vector<VitalRepair> fit_and_repair_vitals(Matrix& x);

/// Applies previously fitted repair rules to canonical 32-wide rows.
void apply_repairs(std::span<const VitalRepair> repairs, std::span<double> row);
void apply_repairs(std::span<const VitalRepair> repairs, Matrix& x);

using SynonymMap = std::map<std::string, std::string>;

/// Byte-level edit distance.
std::size_t levenshtein(std::string_view a, std::string_view b);

/// Exact (case-insensitive) dictionary hit, else the canonical whose closest
/// variant is within edit distance 2 (ties: smallest canonical), else the
/// lowercased input.
std::string normalize_token(std::string_view word, const SynonymMap& dictionary);

/// Small German/English dictionary for observation vocabulary and yes/no cells.
const SynonymMap& default_synonyms();

/// Parses a flag cell ("1", "0", "yes", "nein", "true", ...). Returns nullopt
/// when the token does not resolve to a boolean.
std::optional<bool> parse_flag_token(std::string_view cell);

/// (systolic + 2 * diastolic) / 3. Requires systolic >= diastolic > 0.
double derive_map(double systolic, double diastolic);

/// Per-feature standardization fitted on training data.
struct Scaler {
  struct Column {
    double mean = 0.0;
    double stddev = 1.0;
    bool scaled = false;  // false for pass-through (flags, constant columns)

    bool operator==(const Column&) const = default;
  };
  std::vector<Column> columns;
  /// Numeric columns that were constant on the fitting set.
  std::vector<std::size_t> constant_columns;

  std::vector<double> apply(std::span<const double> x) const;
  void apply_in_place(std::span<double> x) const;
  Matrix apply(const Matrix& x) const;

  bool operator==(const Scaler&) const = default;
};

/// Standardizes columns flagged numeric (population stddev); the rest pass through.
Scaler fit_scaler(const Matrix& x, const std::vector<bool>& numeric);
/// Numeric mask for the canonical layout: vitals numeric, flags not. Extra
/// columns beyond the canonical 32 are treated as flags.
std::vector<bool> canonical_numeric_mask(std::size_t width);

/// Dataset CSV: `case_id`, the 32 canonical columns, optional extra feature
/// columns, optional `label_<complication>` columns.
std::string dataset_to_csv(const LabeledDataset& data);
void write_dataset_csv(const std::filesystem::path& path, const LabeledDataset& data);

/// Parses a dataset CSV. Missing label columns raise Error{Data} naming the
/// column when `require_labels` is set. mean_arterial_pressure is derived
/// when the column is absent or the cell is empty.
LabeledDataset dataset_from_csv(std::string_view text, bool require_labels);
LabeledDataset read_dataset_csv(const std::filesystem::path& path, bool require_labels);

/// Test-case CSV: same schema without labels.
std::vector<PatientRecord> read_cases_csv(const std::filesystem::path& path);
std::vector<PatientRecord> cases_from_csv(std::string_view text);
std::string cases_to_csv(std::span<const PatientRecord> cases);

}  // namespace triage
