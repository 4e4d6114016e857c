#pragma once

// Loads the six complication bundles and turns patient records into ranked
// probability reports, optionally alongside a what-if deviation.

#include <filesystem>
#include <memory>
#include <set>
#include <vector>

#include "triage/core_types.hpp"
#include "triage/model_store.hpp"

namespace triage {

struct Deviation {
  double percent = 0.0;
  /// Vitals to rescale. Empty set = no change. Circulation state is never
  /// modified even when listed.
  std::set<Vital> targets;

  /// All continuous vitals (circulation_state excluded).
  static Deviation all(double percent);
  /// Throws Error{Range} outside [-90, 300].
  void validate() const;
};

/// Scales the targeted vitals, clamps to valid ranges, rounds GCS and
/// recomputes MAP from the modified blood pressures.
PatientRecord apply_deviation(const PatientRecord& record, const Deviation& deviation);

class PredictionEngine {
 public:
  /// Requires one bundle per complication in complication order.
  explicit PredictionEngine(std::vector<ComplicationBundle> bundles);

  static std::shared_ptr<const PredictionEngine> load(const std::filesystem::path& model_dir);

  const ComplicationBundle& bundle(Complication c) const { return bundles_[index_of(c)]; }
  const std::vector<ComplicationBundle>& bundles() const noexcept { return bundles_; }

  ProbabilitySet probabilities(const PatientRecord& record) const;
  ProbabilityReport predict(const PatientRecord& record) const;
  ProbabilityReport predict_with_deviation(const PatientRecord& record, const Deviation& deviation) const;

  /// Model input for one complication: encode, IQR repair, scale, select.
  std::vector<double> model_input(const ComplicationBundle& bundle, const PatientRecord& record) const;

 private:
  std::vector<ComplicationBundle> bundles_;
  std::vector<std::vector<std::size_t>> selected_;
};

}  // namespace triage
