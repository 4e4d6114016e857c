#include "triage/predictor.hpp"

#include <algorithm>
#include <cmath>

#include "triage/error.hpp"
#include "triage/preprocess.hpp"

namespace triage {

Deviation Deviation::all(double percent) {
  Deviation d;
  d.percent = percent;
  for (auto v : continuous_vitals()) d.targets.insert(v);
  return d;
}

void Deviation::validate() const {
  if (!(percent >= -90.0 && percent <= 300.0)) {
    throw Error(ErrorCode::Range, "deviation percent must lie in [-90, 300]", "percent");
  }
}

PatientRecord apply_deviation(const PatientRecord& record, const Deviation& deviation) {
  deviation.validate();
  PatientRecord out = record;
  if (deviation.percent == 0.0 || deviation.targets.empty()) return out;
  const double factor = 1.0 + deviation.percent / 100.0;
  for (auto v : deviation.targets) {
    if (v == Vital::CirculationState || v == Vital::MeanArterialPressure) continue;
    const auto range = valid_range(v);
    double value = std::clamp(record.vitals.get(v) * factor, range.lo, range.hi);
    if (v == Vital::GcsTotal) value = std::round(value);
    out.vitals.set(v, value);
  }
  // Keep the pressures coherent after independent clamping.
  out.vitals.diastolic_bp = std::min(out.vitals.diastolic_bp, out.vitals.systolic_bp);
  const bool bp_changed = out.vitals.systolic_bp != record.vitals.systolic_bp ||
                          out.vitals.diastolic_bp != record.vitals.diastolic_bp;
  if (bp_changed || deviation.targets.contains(Vital::MeanArterialPressure)) {
    const auto range = valid_range(Vital::MeanArterialPressure);
    out.vitals.mean_arterial_pressure =
        std::clamp(derive_map(out.vitals.systolic_bp, out.vitals.diastolic_bp), range.lo, range.hi);
  }
  return out;
}

PredictionEngine::PredictionEngine(std::vector<ComplicationBundle> bundles) : bundles_(std::move(bundles)) {
  if (bundles_.size() != kComplicationCount) throw Error(ErrorCode::ModelLoad, "engine needs six bundles");
  for (auto c : kAllComplications) {
    const auto& b = bundles_[index_of(c)];
    if (b.complication != c) throw Error(ErrorCode::ModelLoad, "bundles out of complication order");
    if (b.schema_version != kSchemaVersion) {
      throw Error(ErrorCode::Version, "bundle for " + std::string(display_name(c)) + " has schema_version " +
                                          std::to_string(b.schema_version));
    }
    b.validate();
    selected_.push_back(b.selected_indices());
  }
}

std::shared_ptr<const PredictionEngine> PredictionEngine::load(const std::filesystem::path& model_dir) {
  return std::make_shared<const PredictionEngine>(load_model_dir(model_dir));
}

std::vector<double> PredictionEngine::model_input(const ComplicationBundle& bundle, const PatientRecord& record) const {
  std::vector<double> row = encode(record);
  apply_repairs(bundle.repairs, row);
  bundle.scaler.apply_in_place(row);
  const auto& selected = selected_[index_of(bundle.complication)];
  std::vector<double> out;
  out.reserve(selected.size());
  for (auto i : selected) out.push_back(row[i]);
  return out;
}

ProbabilitySet PredictionEngine::probabilities(const PatientRecord& record) const {
  validate(record);
  ProbabilitySet set;
  for (auto c : kAllComplications) {
    const auto& b = bundles_[index_of(c)];
    const auto x = model_input(b, record);
    set.by_complication[index_of(c)] = {100.0 * b.gbt.predict_proba(x), 100.0 * b.ann.predict_proba(x)};
  }
  set.ranking = rank_by_gbt(set.by_complication);
  return set;
}

ProbabilityReport PredictionEngine::predict(const PatientRecord& record) const { return {probabilities(record), {}}; }

ProbabilityReport PredictionEngine::predict_with_deviation(const PatientRecord& record,
                                                           const Deviation& deviation) const {
  ProbabilityReport report{probabilities(record), {}};
  const auto modified = apply_deviation(record, deviation);
  report.modified = modified == record ? report.baseline : probabilities(modified);
  return report;
}

}  // namespace triage
