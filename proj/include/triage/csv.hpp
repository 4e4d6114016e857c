#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace triage::csv {

struct Document {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// RFC 4180 style: comma separated, double-quoted fields may contain commas,
/// quotes ("") and newlines. A leading UTF-8 BOM is skipped. Every row must
/// have as many fields as the header.
Document parse(std::string_view text);
Document read_file(const std::filesystem::path& path);

std::string quote_field(std::string_view field);
std::string format(const Document& doc);
void write_file(const std::filesystem::path& path, const Document& doc);

}  // namespace triage::csv
