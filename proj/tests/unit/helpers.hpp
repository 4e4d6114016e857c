#pragma once

#include <random>
#include <vector>

#include "triage/core_types.hpp"
#include "triage/error.hpp"
#include "triage/synthgen.hpp"
#include "triage/training.hpp"

namespace testutil {

// Uniform valid record within the declared vital ranges.
inline triage::PatientRecord random_record(std::mt19937_64& rng) {
  using namespace triage;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PatientRecord r;
  for (auto v : continuous_vitals()) {
    const auto range = valid_range(v);
    double value = range.lo + (range.hi - range.lo) * u(rng);
    if (v == Vital::GcsTotal) value = std::round(value);
    r.vitals.set(v, value);
  }
  if (r.vitals.systolic_bp < r.vitals.diastolic_bp) std::swap(r.vitals.systolic_bp, r.vitals.diastolic_bp);
  r.vitals.circulation_state = static_cast<int>(rng() % 3);
  for (auto& f : r.flags.values) f = u(rng) < 0.3;
  if (r.flags[Flag::HeadInjury]) r.flags[Flag::InjuryPresent] = true;
  return r;
}

// Quick models on a small synthetic set (no feature selection, few rounds).
inline triage::TrainResult small_training(std::uint64_t seed = 7, std::size_t n = 1200) {
  using namespace triage;
  const auto cfg = default_generator_config(seed, n);
  TrainOptions o;
  o.seed = seed;
  o.feature_selection = false;
  o.gbt_params = {{"n_rounds", 20}, {"max_depth", 3}};
  o.ann_params = {{"epochs", 3}};
  return train_all(generate(cfg), o, cfg.canonical_string());
}

template <class F>
triage::ErrorCode error_code_of(F&& f) {
  try {
    f();
  } catch (const triage::Error& e) {
    return e.code();
  }
  throw std::runtime_error("expected triage::Error");
}

}  // namespace testutil
