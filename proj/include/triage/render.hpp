#pragma once

// Text renderings of probability reports (two decimals, ranked rows).

#include <optional>
#include <string>

#include "triage/core_types.hpp"

namespace triage {

enum class RenderFormat { Table, Csv };

/// Ranked table; with a modified report the two rankings sit side by side.
/// `title` heads the table output and is ignored for CSV.
std::string render_report(const ProbabilityReport& report, RenderFormat format, const std::string& title = {},
                          std::optional<double> deviation_percent = std::nullopt);

std::string format_pct(double pct);

}  // namespace triage
