#include "triage/testcases.hpp"

namespace triage {

namespace {

PatientRecord make(std::string id, double resp, double sys, double dia, double map, double pulse, double glucose,
                   double spo2, int gcs, std::initializer_list<Flag> flags) {
  PatientRecord r;
  r.case_id = std::move(id);
  r.vitals.respiratory_rate = resp;
  r.vitals.systolic_bp = sys;
  r.vitals.diastolic_bp = dia;
  r.vitals.mean_arterial_pressure = map;
  r.vitals.pulse_rate = pulse;
  r.vitals.blood_glucose = glucose;
  r.vitals.spo2 = spo2;
  r.vitals.body_temperature = 36.8;
  r.vitals.gcs_total = gcs;
  r.vitals.circulation_state = 0;
  for (auto f : flags) r.flags[f] = true;
  return r;
}

std::vector<NamedCase> build() {
  using F = Flag;
  return {
      {"Use case 1", "chest pain, respiratory ok, no injury, mentally fit, conscious",
       make("usecase-1", 18, 145, 91, 104.4, 105, 124, 97, 15, {F::ChestPain})},
      {"Use case 2", "abdominal pain, pre-abdominal illness, mentally unfit, conscious",
       make("usecase-2", 12, 142, 85, 104, 106, 139, 100, 15, {F::AbdominalPain, F::PreAbdominalIllness, F::MentallyUnfit})},
      {"Use case 3", "head injury, head discomfort, pre-neurological illness, mentally unfit, poor consciousness, alcoholic",
       make("usecase-3", 11, 132, 82, 99, 83, 105, 86, 9,
            {F::InjuryPresent, F::HeadInjury, F::HeadDiscomfort, F::PreNeurologicalIllness, F::MentallyUnfit,
             F::ConsciousnessImpaired, F::AlcoholIntoxication})},
      {"Use case 4", "respiratory distress, pre-respiratory illness, fast breathing, low saturation",
       make("usecase-4", 28, 128, 80, 96, 92, 110, 90, 15, {F::RespiratoryDistress, F::PreRespiratoryIllness})},
      {"Use case 5", "pre-metabolic illness, dizziness, very high blood glucose",
       make("usecase-5", 17, 124, 78, 93.33, 84, 320, 97, 15, {F::PreMetabolicIllness, F::Dizziness})},
      {"Use case 6", "mentally unfit, drug intoxication, pre-psychiatric illness, communication disorder",
       make("usecase-6", 16, 122, 79, 93.33, 80, 100, 98, 15,
            {F::MentallyUnfit, F::DrugIntoxication, F::PrePsychiatricIllness, F::CommunicationDisorder})},
  };
}

}  // namespace

const std::vector<NamedCase>& bundled_test_cases() {
  static const std::vector<NamedCase> cases = build();
  return cases;
}

}  // namespace triage
