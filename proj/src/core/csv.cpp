#include "triage/csv.hpp"

#include <fstream>
#include <sstream>

#include "triage/error.hpp"

namespace triage::csv {

namespace {

std::vector<std::vector<std::string>> split_records(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_field = [&] {
    current.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(current.size() == 1 && current.front().empty())) records.push_back(std::move(current));
    current.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (field_started || !field.empty()) {
          throw Error(ErrorCode::Parse, "stray quote on line " + std::to_string(line));
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',': end_field(); break;
      case '\r': break;
      case '\n':
        end_record();
        ++line;
        break;
      default: field.push_back(ch);
    }
  }
  if (in_quotes) throw Error(ErrorCode::Parse, "unterminated quoted field");
  if (!field.empty() || field_started || !current.empty()) end_record();
  return records;
}

}  // namespace

Document parse(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  auto records = split_records(text);
  if (records.empty()) throw Error(ErrorCode::Parse, "CSV has no header row");
  Document doc;
  doc.header = std::move(records.front());
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].size() != doc.header.size()) {
      throw Error(ErrorCode::Parse, "CSV row " + std::to_string(i) + " has " + std::to_string(records[i].size()) +
                                        " fields, header has " + std::to_string(doc.header.size()));
    }
    doc.rows.push_back(std::move(records[i]));
  }
  return doc;
}

Document read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::string quote_field(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += "\"\"";
    else out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

std::string format(const Document& doc) {
  std::string out;
  auto write_row = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out.push_back(',');
      out += quote_field(row[i]);
    }
    out.push_back('\n');
  };
  write_row(doc.header);
  for (const auto& row : doc.rows) write_row(row);
  return out;
}

void write_file(const std::filesystem::path& path, const Document& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << format(doc);
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace triage::csv
