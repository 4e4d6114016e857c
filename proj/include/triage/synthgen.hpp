#pragma once

// Seeded synthetic rescue records with planted feature/complication
// dependencies. A flag is driven by at most one complication. A vital may
// carry signals from several complications: the first listed signal whose
// complication is present picks the distribution, otherwise the shared
// negative distribution applies. Undriven features follow a
// label-independent base distribution.

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "triage/core_types.hpp"

namespace triage {

struct FlagSignal {
  Flag flag;
  Complication driver;
  double p_given_positive;
  double p_given_negative;
};

struct VitalSignal {
  Vital vital;
  Complication driver;
  double mean_positive;
  double stddev_positive;
  double mean_negative;
  double stddev_negative;
};

struct GeneratorConfig {
  std::size_t n_records = 10000;
  std::uint64_t seed = 42;
  std::array<double, kComplicationCount> prevalence{};
  std::vector<FlagSignal> flag_signals;
  std::vector<VitalSignal> vital_signals;
  /// P(flag = 1) for flags without a driver.
  double base_flag_rate = 0.05;
  /// Label-independent distractor flags appended as `noise_<i>`.
  std::size_t noise_features = 0;
  double noise_rate = 0.3;

  /// Throws Error{Config} on probabilities outside (0,1), non-positive
  /// stddevs, a flag with two drivers, or vital signals that disagree
  /// on the negative distribution.
  void validate() const;
  /// Stable textual form, used for fingerprints.
  std::string canonical_string() const;
};

/// Clinically motivated defaults (chest pain -> cardiovascular, low SpO2 ->
/// respiratory, head injury -> neurological, ...).
GeneratorConfig default_generator_config(std::uint64_t seed = 42, std::size_t n_records = 10000);

LabeledDataset generate(const GeneratorConfig& config);

}  // namespace triage
