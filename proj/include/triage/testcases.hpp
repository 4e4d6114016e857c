#pragma once

// The six bundled demonstration cases. The first three are the reference
// use cases (chest pain, appendicitis, head injury); the rest cover the
// remaining complications.

#include <string>
#include <vector>

#include "triage/core_types.hpp"

namespace triage {

struct NamedCase {
  std::string name;
  std::string description;
  PatientRecord record;
};

const std::vector<NamedCase>& bundled_test_cases();

}  // namespace triage
