#include "triage/synthgen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "triage/error.hpp"
#include "triage/preprocess.hpp"
#include "random.hpp"

namespace triage {

namespace {

struct BaseVital {
  double mean;
  double stddev;
  double resolution;  // rounding step; 0 keeps full precision
};

// Label-independent distribution per vital (used when no signal drives it).
constexpr std::array<BaseVital, kVitalCount> kBaseVitals = {{
    {16.0, 3.0, 1.0},     // respiratory_rate
    {126.0, 15.0, 1.0},   // systolic_bp
    {80.0, 10.0, 1.0},    // diastolic_bp
    {0.0, 0.0, 0.0},      // mean_arterial_pressure (derived)
    {80.0, 12.0, 1.0},    // pulse_rate
    {105.0, 15.0, 1.0},   // blood_glucose
    {97.0, 1.5, 1.0},     // spo2
    {36.8, 0.5, 0.1},     // body_temperature
    {14.9, 0.4, 1.0},     // gcs_total
    {0.05, 0.25, 1.0},    // circulation_state
}};

using Sampler = detail::Rng;

double quantize(double v, double resolution) {
  if (resolution <= 0.0) return v;
  return std::round(v / resolution) * resolution;
}

void append_number(std::string& out, double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, end);
}

bool open_unit(double p) { return p > 0.0 && p < 1.0; }

}  // namespace

void GeneratorConfig::validate() const {
  for (auto c : kAllComplications) {
    if (!open_unit(prevalence[index_of(c)])) {
      throw Error(ErrorCode::Config, "prevalence for " + std::string(key_name(c)) + " must lie in (0,1)");
    }
  }
  std::set<std::size_t> driven;
  for (const auto& s : flag_signals) {
    if (!open_unit(s.p_given_positive) || !open_unit(s.p_given_negative)) {
      throw Error(ErrorCode::Config, "flag signal probabilities for " + std::string(flag_name(s.flag)) +
                                         " must lie in (0,1)");
    }
    if (!driven.insert(feature_index(s.flag)).second) {
      throw Error(ErrorCode::Config, std::string(flag_name(s.flag)) + " has more than one driver");
    }
  }
  std::array<const VitalSignal*, kVitalCount> first_signal{};
  for (const auto& s : vital_signals) {
    if (!(s.stddev_positive > 0.0) || !(s.stddev_negative > 0.0)) {
      throw Error(ErrorCode::Config, "vital signal stddev for " + std::string(vital_name(s.vital)) + " must be > 0");
    }
    if (s.vital == Vital::MeanArterialPressure || s.vital == Vital::DiastolicBp) {
      throw Error(ErrorCode::Config, std::string(vital_name(s.vital)) + " cannot carry a signal");
    }
    auto& first = first_signal[static_cast<std::size_t>(s.vital)];
    if (!first) {
      first = &s;
      continue;
    }
    if (first->mean_negative != s.mean_negative || first->stddev_negative != s.stddev_negative) {
      throw Error(ErrorCode::Config, "signals on " + std::string(vital_name(s.vital)) +
                                         " must share one negative distribution");
    }
    for (const auto* other = first; other != &s; ++other) {
      if (other->vital == s.vital && other->driver == s.driver) {
        throw Error(ErrorCode::Config, std::string(vital_name(s.vital)) + " has two signals from " +
                                           std::string(key_name(s.driver)));
      }
    }
  }
  if (!open_unit(base_flag_rate)) throw Error(ErrorCode::Config, "base_flag_rate must lie in (0,1)");
  if (noise_features > 0 && !open_unit(noise_rate)) throw Error(ErrorCode::Config, "noise_rate must lie in (0,1)");
}

std::string GeneratorConfig::canonical_string() const {
  std::string out = "n=" + std::to_string(n_records) + ";seed=" + std::to_string(seed) + ";prevalence=";
  for (double p : prevalence) {
    append_number(out, p);
    out += ',';
  }
  for (const auto& s : flag_signals) {
    out += ";flag:" + std::string(flag_name(s.flag)) + ':' + std::string(key_name(s.driver)) + ':';
    append_number(out, s.p_given_positive);
    out += ':';
    append_number(out, s.p_given_negative);
  }
  for (const auto& s : vital_signals) {
    out += ";vital:" + std::string(vital_name(s.vital)) + ':' + std::string(key_name(s.driver));
    for (double v : {s.mean_positive, s.stddev_positive, s.mean_negative, s.stddev_negative}) {
      out += ':';
      append_number(out, v);
    }
  }
  out += ";base=";
  append_number(out, base_flag_rate);
  out += ";noise=" + std::to_string(noise_features) + ':';
  append_number(out, noise_rate);
  return out;
}

GeneratorConfig default_generator_config(std::uint64_t seed, std::size_t n_records) {
  using C = Complication;
  GeneratorConfig config;
  config.seed = seed;
  config.n_records = n_records;
  config.prevalence = {0.30, 0.25, 0.20, 0.20, 0.20, 0.20};
  config.flag_signals = {
      {Flag::ChestPain, C::Cardiovascular, 0.85, 0.05},
      {Flag::PreCardiacIllness, C::Cardiovascular, 0.60, 0.08},
      {Flag::RespiratoryDistress, C::Respiratory, 0.80, 0.05},
      {Flag::PreRespiratoryIllness, C::Respiratory, 0.55, 0.06},
      {Flag::HeadInjury, C::Neurological, 0.45, 0.03},
      {Flag::PreNeurologicalIllness, C::Neurological, 0.50, 0.05},
      {Flag::HeadDiscomfort, C::Neurological, 0.50, 0.06},
      {Flag::ConsciousnessImpaired, C::Neurological, 0.45, 0.05},
      {Flag::SeizureObserved, C::Neurological, 0.30, 0.02},
      {Flag::ParalysisSigns, C::Neurological, 0.30, 0.02},
      {Flag::SpeechDisturbance, C::Neurological, 0.30, 0.03},
      {Flag::MentallyUnfit, C::Psychiatric, 0.85, 0.08},
      {Flag::PrePsychiatricIllness, C::Psychiatric, 0.55, 0.04},
      {Flag::AlcoholIntoxication, C::Psychiatric, 0.45, 0.08},
      {Flag::DrugIntoxication, C::Psychiatric, 0.35, 0.03},
      {Flag::CommunicationDisorder, C::Psychiatric, 0.35, 0.05},
      {Flag::AbdominalPain, C::Abdominal, 0.85, 0.05},
      {Flag::PreAbdominalIllness, C::Abdominal, 0.60, 0.05},
      {Flag::NauseaVomiting, C::Abdominal, 0.50, 0.08},
      {Flag::PreMetabolicIllness, C::Metabolic, 0.65, 0.06},
      {Flag::Dizziness, C::Metabolic, 0.55, 0.08},
  };
  config.vital_signals = {
      {Vital::PulseRate, C::Cardiovascular, 105.0, 20.0, 78.0, 12.0},
      {Vital::SystolicBp, C::Cardiovascular, 150.0, 25.0, 125.0, 15.0},
      {Vital::CirculationState, C::Cardiovascular, 0.8, 0.7, 0.05, 0.25},
      {Vital::RespiratoryRate, C::Respiratory, 26.0, 6.0, 15.0, 3.0},
      {Vital::RespiratoryRate, C::Neurological, 11.0, 3.0, 15.0, 3.0},
      {Vital::Spo2, C::Respiratory, 89.0, 4.0, 97.0, 1.5},
      {Vital::Spo2, C::Neurological, 90.0, 4.0, 97.0, 1.5},
      {Vital::GcsTotal, C::Neurological, 10.0, 3.0, 14.9, 0.4},
      {Vital::BloodGlucose, C::Metabolic, 170.0, 70.0, 105.0, 15.0},
  };
  return config;
}

LabeledDataset generate(const GeneratorConfig& config) {
  config.validate();

  std::array<const FlagSignal*, kFlagCount> flag_driver{};
  for (const auto& s : config.flag_signals) flag_driver[static_cast<std::size_t>(s.flag)] = &s;
  std::array<std::vector<const VitalSignal*>, kVitalCount> vital_drivers;
  for (const auto& s : config.vital_signals) vital_drivers[static_cast<std::size_t>(s.vital)].push_back(&s);

  Sampler sampler(config.seed);
  LabeledDataset data;
  data.records.reserve(config.n_records);
  for (auto& column : data.labels) column.reserve(config.n_records);
  for (std::size_t j = 0; j < config.noise_features; ++j) data.extra_feature_names.push_back("noise_" + std::to_string(j));
  if (config.noise_features > 0) data.extra_features = Matrix(0, config.noise_features);

  const std::size_t width = std::to_string(config.n_records).size();
  for (std::size_t i = 0; i < config.n_records; ++i) {
    std::array<int, kComplicationCount> label{};
    for (auto c : kAllComplications) label[index_of(c)] = sampler.bernoulli(config.prevalence[index_of(c)]) ? 1 : 0;

    PatientRecord rec;
    std::string id = std::to_string(i + 1);
    rec.case_id = "case-" + std::string(width - id.size(), '0') + id;

    for (std::size_t v = 0; v < kVitalCount; ++v) {
      const auto vital = static_cast<Vital>(v);
      if (vital == Vital::MeanArterialPressure) continue;
      double mean = kBaseVitals[v].mean;
      double sd = kBaseVitals[v].stddev;
      // The first signal whose complication is present sets the distribution.
      if (!vital_drivers[v].empty()) {
        mean = vital_drivers[v].front()->mean_negative;
        sd = vital_drivers[v].front()->stddev_negative;
        for (const auto* s : vital_drivers[v]) {
          if (label[index_of(s->driver)] == 1) {
            mean = s->mean_positive;
            sd = s->stddev_positive;
            break;
          }
        }
      }
      const auto range = valid_range(vital);
      double value = std::clamp(quantize(sampler.normal(mean, sd), kBaseVitals[v].resolution), range.lo, range.hi);
      rec.vitals.set(vital, value);
    }
    rec.vitals.diastolic_bp = std::min(rec.vitals.diastolic_bp, rec.vitals.systolic_bp);
    rec.vitals.mean_arterial_pressure = derive_map(rec.vitals.systolic_bp, rec.vitals.diastolic_bp);

    for (std::size_t f = 0; f < kFlagCount; ++f) {
      double p = config.base_flag_rate;
      if (const auto* s = flag_driver[f]) {
        p = label[index_of(s->driver)] == 1 ? s->p_given_positive : s->p_given_negative;
      }
      rec.flags.values[f] = sampler.bernoulli(p);
    }
    if (rec.flags[Flag::HeadInjury]) rec.flags[Flag::InjuryPresent] = true;

    if (config.noise_features > 0) {
      std::vector<double> noise(config.noise_features);
      for (auto& x : noise) x = sampler.bernoulli(config.noise_rate) ? 1.0 : 0.0;
      data.extra_features.append_row(noise);
    }

    for (auto c : kAllComplications) data.labels[index_of(c)].push_back(label[index_of(c)]);
    data.records.push_back(std::move(rec));
  }
  return data;
}

}  // namespace triage
