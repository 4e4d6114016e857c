#pragma once

// Domain vocabulary: complications, patient records, the canonical feature
// schema, labeled datasets and probability reports.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "triage/matrix.hpp"

namespace triage {

/// Version of the canonical feature list. Saved bundles carry it and the
/// predictor refuses bundles that disagree.
inline constexpr int kSchemaVersion = 1;

enum class Complication { Cardiovascular, Respiratory, Neurological, Psychiatric, Abdominal, Metabolic };

inline constexpr std::size_t kComplicationCount = 6;
inline constexpr std::array<Complication, kComplicationCount> kAllComplications = {
    Complication::Cardiovascular, Complication::Respiratory, Complication::Neurological,
    Complication::Psychiatric,    Complication::Abdominal,   Complication::Metabolic};

/// "Cardiovascular", "Respiratory", ...
std::string_view display_name(Complication c);
/// "cardiovascular", "respiratory", ... (used in file names, labels and JSON)
std::string_view key_name(Complication c);
/// Accepts either the key or the display name, case-insensitively.
std::optional<Complication> complication_from_name(std::string_view name);
std::string label_column(Complication c);

inline std::size_t index_of(Complication c) { return static_cast<std::size_t>(c); }

enum class Vital {
  RespiratoryRate,
  SystolicBp,
  DiastolicBp,
  MeanArterialPressure,
  PulseRate,
  BloodGlucose,
  Spo2,
  BodyTemperature,
  GcsTotal,
  CirculationState,
};
inline constexpr std::size_t kVitalCount = 10;

enum class Flag {
  ChestPain,
  RespiratoryDistress,
  AbdominalPain,
  HeadDiscomfort,
  InjuryPresent,
  HeadInjury,
  MentallyUnfit,
  ConsciousnessImpaired,
  CommunicationDisorder,
  AlcoholIntoxication,
  DrugIntoxication,
  PreCardiacIllness,
  PreRespiratoryIllness,
  PreNeurologicalIllness,
  PrePsychiatricIllness,
  PreAbdominalIllness,
  PreMetabolicIllness,
  SeizureObserved,
  ParalysisSigns,
  SpeechDisturbance,
  NauseaVomiting,
  Dizziness,
};
inline constexpr std::size_t kFlagCount = 22;
inline constexpr std::size_t kFeatureCount = kVitalCount + kFlagCount;

struct VitalRange {
  double lo;
  double hi;
};

std::string_view vital_name(Vital v);
std::string_view flag_name(Flag f);
VitalRange valid_range(Vital v);
std::optional<Vital> vital_from_name(std::string_view name);
std::optional<Flag> flag_from_name(std::string_view name);

inline constexpr std::size_t feature_index(Vital v) { return static_cast<std::size_t>(v); }
inline constexpr std::size_t feature_index(Flag f) { return kVitalCount + static_cast<std::size_t>(f); }

/// The 32 canonical feature names: vitals in declaration order, then flags.
const std::array<std::string, kFeatureCount>& canonical_feature_names();
std::optional<std::size_t> canonical_feature_index(std::string_view name);

/// The nine continuously valued vitals (everything except circulation_state).
std::vector<Vital> continuous_vitals();

struct VitalSigns {
  double respiratory_rate = 16.0;
  double systolic_bp = 120.0;
  double diastolic_bp = 80.0;
  double mean_arterial_pressure = 93.333333333333329;
  double pulse_rate = 75.0;
  double blood_glucose = 100.0;
  double spo2 = 98.0;
  double body_temperature = 36.8;
  int gcs_total = 15;
  int circulation_state = 0;  // 0 normal, 1 impaired, 2 critical

  double get(Vital v) const;
  void set(Vital v, double value);

  bool operator==(const VitalSigns&) const = default;
};

struct ObservationFlags {
  std::array<bool, kFlagCount> values{};

  bool operator[](Flag f) const { return values[static_cast<std::size_t>(f)]; }
  bool& operator[](Flag f) { return values[static_cast<std::size_t>(f)]; }

  bool operator==(const ObservationFlags&) const = default;
};

struct PatientRecord {
  std::string case_id;
  VitalSigns vitals;
  ObservationFlags flags;

  bool operator==(const PatientRecord&) const = default;
};

/// Throws Error{Range} naming the first field that violates the record
/// invariants (value ranges, systolic >= diastolic, head_injury => injury_present).
void validate(const PatientRecord& record);

/// 32-element canonical vector. Validates first.
std::vector<double> encode(const PatientRecord& record);

/// Inverse of encode. Flags decode as value >= 0.5.
PatientRecord decode(std::span<const double> features, std::string case_id = {});

/// Feature matrix plus one 0/1 label column per complication.
///
/// `extra_feature_names`/`extra_features` carry optional columns appended
/// after the canonical 32 (distractor features in synthetic data).
struct LabeledDataset {
  std::vector<PatientRecord> records;
  std::array<std::vector<int>, kComplicationCount> labels;
  std::vector<std::string> extra_feature_names;
  Matrix extra_features;

  std::size_t size() const noexcept { return records.size(); }
  const std::vector<int>& label(Complication c) const { return labels[index_of(c)]; }

  void validate() const;

  /// n x (32 + extras) matrix of encoded records.
  Matrix feature_matrix() const;
  std::vector<std::string> feature_names() const;
};

struct ComplicationProbability {
  double gbt_pct = 0.0;
  double ann_pct = 0.0;

  bool operator==(const ComplicationProbability&) const = default;
};

struct ProbabilitySet {
  std::array<ComplicationProbability, kComplicationCount> by_complication{};
  std::array<Complication, kComplicationCount> ranking = kAllComplications;

  const ComplicationProbability& at(Complication c) const { return by_complication[index_of(c)]; }

  bool operator==(const ProbabilitySet&) const = default;
};

/// Sorts complications by descending gbt_pct; equal values keep the fixed
/// complication order.
std::array<Complication, kComplicationCount> rank_by_gbt(
    const std::array<ComplicationProbability, kComplicationCount>& probs);

struct ProbabilityReport {
  ProbabilitySet baseline;
  std::optional<ProbabilitySet> modified;

  bool operator==(const ProbabilityReport&) const = default;
};

}  // namespace triage
