#include "triage/render.hpp"

#include <cstdio>

namespace triage {

namespace {

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string lpad(const std::string& s, std::size_t width) {
  return s.size() < width ? std::string(width - s.size(), ' ') + s : s;
}

std::string cells(const ProbabilitySet& set, std::size_t rank) {
  const auto c = set.ranking[rank];
  const auto& p = set.at(c);
  return pad(std::string(display_name(c)), 16) + lpad(format_pct(p.gbt_pct), 8) + lpad(format_pct(p.ann_pct), 8);
}

}  // namespace

std::string format_pct(double pct) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", pct);
  return buf;
}

std::string render_report(const ProbabilityReport& report, RenderFormat format, const std::string& title,
                          std::optional<double> deviation_percent) {
  const bool modified = report.modified.has_value();
  std::string out;
  if (format == RenderFormat::Csv) {
    out = "rank,complication,gbt_pct,ann_pct";
    if (modified) out += ",modified_complication,modified_gbt_pct,modified_ann_pct";
    out += '\n';
    for (std::size_t r = 0; r < kComplicationCount; ++r) {
      const auto c = report.baseline.ranking[r];
      out += std::to_string(r + 1) + ',' + std::string(key_name(c)) + ',' + format_pct(report.baseline.at(c).gbt_pct) +
             ',' + format_pct(report.baseline.at(c).ann_pct);
      if (modified) {
        const auto m = report.modified->ranking[r];
        out += ',' + std::string(key_name(m)) + ',' + format_pct(report.modified->at(m).gbt_pct) + ',' +
               format_pct(report.modified->at(m).ann_pct);
      }
      out += '\n';
    }
    return out;
  }

  if (!title.empty()) out += title + '\n';
  std::string head = "Rank  " + pad("Complication", 16) + lpad("GBT %", 8) + lpad("ANN %", 8);
  if (modified) {
    std::string label = "Modified";
    if (deviation_percent) {
      label += " (" + std::string(*deviation_percent >= 0 ? "+" : "") + format_pct(*deviation_percent) + "%)";
    }
    out += pad("", 6) + pad("Baseline", 32) + "   " + label + '\n';
    head += "   " + pad("Complication", 16) + lpad("GBT %", 8) + lpad("ANN %", 8);
  }
  out += head + '\n';
  for (std::size_t r = 0; r < kComplicationCount; ++r) {
    std::string line = pad(std::to_string(r + 1), 6) + cells(report.baseline, r);
    if (modified) line += "   " + cells(*report.modified, r);
    out += line + '\n';
  }
  if (modified) {
    const auto before = report.baseline.ranking[0];
    const auto after = report.modified->ranking[0];
    out += "Top complication: " + std::string(display_name(before));
    out += before == after ? " (stable)\n" : " -> " + std::string(display_name(after)) + " (changed)\n";
  }
  return out;
}

}  // namespace triage
