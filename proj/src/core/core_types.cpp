#include "triage/core_types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "triage/error.hpp"

namespace triage {

namespace {

constexpr std::array<std::string_view, kComplicationCount> kDisplayNames = {
    "Cardiovascular", "Respiratory", "Neurological", "Psychiatric", "Abdominal", "Metabolic"};
constexpr std::array<std::string_view, kComplicationCount> kKeyNames = {
    "cardiovascular", "respiratory", "neurological", "psychiatric", "abdominal", "metabolic"};

constexpr std::array<std::string_view, kVitalCount> kVitalNames = {
    "respiratory_rate", "systolic_bp", "diastolic_bp", "mean_arterial_pressure", "pulse_rate",
    "blood_glucose",    "spo2",        "body_temperature", "gcs_total",          "circulation_state"};

constexpr std::array<VitalRange, kVitalCount> kVitalRanges = {{
    {0, 80},     // respiratory_rate
    {40, 300},   // systolic_bp
    {20, 200},   // diastolic_bp
    {26, 233},   // mean_arterial_pressure
    {0, 300},    // pulse_rate
    {10, 1000},  // blood_glucose
    {0, 100},    // spo2
    {25, 45},    // body_temperature
    {3, 15},     // gcs_total
    {0, 2},      // circulation_state
}};

constexpr std::array<std::string_view, kFlagCount> kFlagNames = {
    "chest_pain",
    "respiratory_distress",
    "abdominal_pain",
    "head_discomfort",
    "injury_present",
    "head_injury",
    "mentally_unfit",
    "consciousness_impaired",
    "communication_disorder",
    "alcohol_intoxication",
    "drug_intoxication",
    "pre_cardiac_illness",
    "pre_respiratory_illness",
    "pre_neurological_illness",
    "pre_psychiatric_illness",
    "pre_abdominal_illness",
    "pre_metabolic_illness",
    "seizure_observed",
    "paralysis_signs",
    "speech_disturbance",
    "nausea_vomiting",
    "dizziness",
};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::string format_value(double v) {
  std::string s = std::to_string(v);
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

}  // namespace

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::Range: return "range error";
    case ErrorCode::Data: return "data error";
    case ErrorCode::Integration: return "integration error";
    case ErrorCode::InsufficientData: return "insufficient data";
    case ErrorCode::Repair: return "repair error";
    case ErrorCode::Fit: return "fit error";
    case ErrorCode::Shape: return "shape error";
    case ErrorCode::Parse: return "parse error";
    case ErrorCode::Version: return "version error";
    case ErrorCode::Config: return "config error";
    case ErrorCode::Evaluation: return "evaluation error";
    case ErrorCode::Search: return "search error";
    case ErrorCode::Split: return "split error";
    case ErrorCode::Selection: return "selection error";
    case ErrorCode::Io: return "io error";
    case ErrorCode::ModelLoad: return "model load error";
    case ErrorCode::Usage: return "usage error";
  }
  return "error";
}

std::string_view display_name(Complication c) { return kDisplayNames[index_of(c)]; }
std::string_view key_name(Complication c) { return kKeyNames[index_of(c)]; }

std::optional<Complication> complication_from_name(std::string_view name) {
  for (auto c : kAllComplications) {
    if (iequals(name, key_name(c))) return c;
  }
  return std::nullopt;
}

std::string label_column(Complication c) { return "label_" + std::string(key_name(c)); }

std::string_view vital_name(Vital v) { return kVitalNames[static_cast<std::size_t>(v)]; }
std::string_view flag_name(Flag f) { return kFlagNames[static_cast<std::size_t>(f)]; }
VitalRange valid_range(Vital v) { return kVitalRanges[static_cast<std::size_t>(v)]; }

std::optional<Vital> vital_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kVitalCount; ++i) {
    if (kVitalNames[i] == name) return static_cast<Vital>(i);
  }
  return std::nullopt;
}

std::optional<Flag> flag_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kFlagCount; ++i) {
    if (kFlagNames[i] == name) return static_cast<Flag>(i);
  }
  return std::nullopt;
}

const std::array<std::string, kFeatureCount>& canonical_feature_names() {
  static const auto names = [] {
    std::array<std::string, kFeatureCount> out;
    for (std::size_t i = 0; i < kVitalCount; ++i) out[i] = kVitalNames[i];
    for (std::size_t i = 0; i < kFlagCount; ++i) out[kVitalCount + i] = kFlagNames[i];
    return out;
  }();
  return names;
}

std::optional<std::size_t> canonical_feature_index(std::string_view name) {
  const auto& names = canonical_feature_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  return std::nullopt;
}

std::vector<Vital> continuous_vitals() {
  std::vector<Vital> out;
  for (std::size_t i = 0; i < kVitalCount; ++i) {
    auto v = static_cast<Vital>(i);
    if (v != Vital::CirculationState) out.push_back(v);
  }
  return out;
}

double VitalSigns::get(Vital v) const {
  switch (v) {
    case Vital::RespiratoryRate: return respiratory_rate;
    case Vital::SystolicBp: return systolic_bp;
    case Vital::DiastolicBp: return diastolic_bp;
    case Vital::MeanArterialPressure: return mean_arterial_pressure;
    case Vital::PulseRate: return pulse_rate;
    case Vital::BloodGlucose: return blood_glucose;
    case Vital::Spo2: return spo2;
    case Vital::BodyTemperature: return body_temperature;
    case Vital::GcsTotal: return gcs_total;
    case Vital::CirculationState: return circulation_state;
  }
  return 0.0;
}

void VitalSigns::set(Vital v, double value) {
  switch (v) {
    case Vital::RespiratoryRate: respiratory_rate = value; break;
    case Vital::SystolicBp: systolic_bp = value; break;
    case Vital::DiastolicBp: diastolic_bp = value; break;
    case Vital::MeanArterialPressure: mean_arterial_pressure = value; break;
    case Vital::PulseRate: pulse_rate = value; break;
    case Vital::BloodGlucose: blood_glucose = value; break;
    case Vital::Spo2: spo2 = value; break;
    case Vital::BodyTemperature: body_temperature = value; break;
    case Vital::GcsTotal: gcs_total = static_cast<int>(std::lround(value)); break;
    case Vital::CirculationState: circulation_state = static_cast<int>(std::lround(value)); break;
  }
}

void validate(const PatientRecord& record) {
  for (std::size_t i = 0; i < kVitalCount; ++i) {
    auto v = static_cast<Vital>(i);
    double value = record.vitals.get(v);
    auto range = valid_range(v);
    if (!std::isfinite(value) || value < range.lo || value > range.hi) {
      throw Error(ErrorCode::Range,
                  std::string(vital_name(v)) + " = " + format_value(value) + " outside valid range [" +
                      format_value(range.lo) + ", " + format_value(range.hi) + "]",
                  std::string(vital_name(v)));
    }
  }
  if (record.vitals.systolic_bp < record.vitals.diastolic_bp) {
    throw Error(ErrorCode::Range, "systolic_bp must not be below diastolic_bp", "systolic_bp");
  }
  if (record.flags[Flag::HeadInjury] && !record.flags[Flag::InjuryPresent]) {
    throw Error(ErrorCode::Range, "head_injury requires injury_present", "injury_present");
  }
}

std::vector<double> encode(const PatientRecord& record) {
  validate(record);
  std::vector<double> out(kFeatureCount);
  for (std::size_t i = 0; i < kVitalCount; ++i) out[i] = record.vitals.get(static_cast<Vital>(i));
  for (std::size_t i = 0; i < kFlagCount; ++i) out[kVitalCount + i] = record.flags.values[i] ? 1.0 : 0.0;
  return out;
}

PatientRecord decode(std::span<const double> features, std::string case_id) {
  if (features.size() < kFeatureCount) {
    throw Error(ErrorCode::Shape, "decode expects at least " + std::to_string(kFeatureCount) +
                                      " values, got " + std::to_string(features.size()));
  }
  PatientRecord record;
  record.case_id = std::move(case_id);
  for (std::size_t i = 0; i < kVitalCount; ++i) record.vitals.set(static_cast<Vital>(i), features[i]);
  for (std::size_t i = 0; i < kFlagCount; ++i) record.flags.values[i] = features[kVitalCount + i] >= 0.5;
  return record;
}

void LabeledDataset::validate() const {
  for (auto c : kAllComplications) {
    const auto& column = labels[index_of(c)];
    if (column.size() != records.size()) {
      throw Error(ErrorCode::Data, label_column(c) + " has " + std::to_string(column.size()) +
                                       " entries for " + std::to_string(records.size()) + " records",
                  label_column(c));
    }
    for (int y : column) {
      if (y != 0 && y != 1) throw Error(ErrorCode::Data, label_column(c) + " contains a value other than 0/1", label_column(c));
    }
  }
  if (!extra_feature_names.empty() &&
      (extra_features.rows() != records.size() || extra_features.cols() != extra_feature_names.size())) {
    throw Error(ErrorCode::Shape, "extra feature matrix does not match record count/names");
  }
}

Matrix LabeledDataset::feature_matrix() const {
  const std::size_t extras = extra_feature_names.size();
  Matrix out(records.size(), kFeatureCount + extras);
  for (std::size_t r = 0; r < records.size(); ++r) {
    auto encoded = encode(records[r]);
    auto row = out.row(r);
    std::copy(encoded.begin(), encoded.end(), row.begin());
    for (std::size_t j = 0; j < extras; ++j) row[kFeatureCount + j] = extra_features(r, j);
  }
  return out;
}

std::vector<std::string> LabeledDataset::feature_names() const {
  const auto& canonical = canonical_feature_names();
  std::vector<std::string> out(canonical.begin(), canonical.end());
  out.insert(out.end(), extra_feature_names.begin(), extra_feature_names.end());
  return out;
}

std::array<Complication, kComplicationCount> rank_by_gbt(
    const std::array<ComplicationProbability, kComplicationCount>& probs) {
  auto ranking = kAllComplications;
  std::stable_sort(ranking.begin(), ranking.end(), [&](Complication a, Complication b) {
    return probs[index_of(a)].gbt_pct > probs[index_of(b)].gbt_pct;
  });
  return ranking;
}

}  // namespace triage
