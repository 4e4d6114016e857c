#pragma once

#include <span>
#include <string>
#include <vector>

#include "triage/learners.hpp"

namespace triage::detail {

/// `params` must already be resolved against the ANN defaults.
TrainedModel fit_ann(const Matrix& x, std::span<const int> y, const ParamSet& params,
                     std::vector<std::string> feature_names);

}  // namespace triage::detail
