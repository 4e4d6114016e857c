#include "triage/model_store.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "triage/error.hpp"

namespace triage {

using nlohmann::json;

namespace {

constexpr std::string_view kTrailer = "checksum ";
constexpr std::string_view kManifestHeader = "# triage models, schema_version 1\n";

json scaler_to_json(const Scaler& s) {
  json columns = json::array();
  for (const auto& c : s.columns) columns.push_back({{"mean", c.mean}, {"stddev", c.stddev}, {"scaled", c.scaled}});
  return {{"columns", columns}, {"constant_columns", s.constant_columns}};
}

Scaler scaler_from_json(const json& j) {
  Scaler s;
  for (const auto& c : j.at("columns")) {
    s.columns.push_back({c.at("mean").get<double>(), c.at("stddev").get<double>(), c.at("scaled").get<bool>()});
  }
  s.constant_columns = j.at("constant_columns").get<std::vector<std::size_t>>();
  return s;
}

json repairs_to_json(const std::vector<VitalRepair>& repairs) {
  json out = json::array();
  for (const auto& r : repairs) {
    out.push_back({{"feature", r.feature},
                   {"q1", r.bounds.q1},
                   {"q3", r.bounds.q3},
                   {"lower", r.bounds.lower},
                   {"upper", r.bounds.upper},
                   {"replacement", r.replacement}});
  }
  return out;
}

std::vector<VitalRepair> repairs_from_json(const json& j) {
  std::vector<VitalRepair> out;
  for (const auto& r : j) {
    VitalRepair rep;
    rep.feature = r.at("feature").get<std::string>();
    if (!canonical_feature_index(rep.feature)) throw Error(ErrorCode::Parse, "repair rule for unknown feature " + rep.feature);
    rep.bounds = {r.at("q1").get<double>(), r.at("q3").get<double>(), r.at("lower").get<double>(),
                  r.at("upper").get<double>()};
    rep.replacement = r.at("replacement").get<double>();
    out.push_back(std::move(rep));
  }
  return out;
}

std::string document_of(const ComplicationBundle& b) {
  const auto& names = canonical_feature_names();
  json doc = {{"schema_version", b.schema_version},
              {"feature_schema", std::vector<std::string>(names.begin(), names.end())},
              {"complication", key_name(b.complication)},
              {"training_fingerprint", b.training_fingerprint},
              {"selected_features", b.selected_features},
              {"scaler", scaler_to_json(b.scaler)},
              {"iqr_repairs", repairs_to_json(b.repairs)},
              {"gbt", b.gbt.to_json()},
              {"ann", b.ann.to_json()}};
  return doc.dump(1) + "\n";
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<std::size_t> ComplicationBundle::selected_indices() const {
  std::vector<std::size_t> out;
  for (const auto& name : selected_features) {
    auto idx = canonical_feature_index(name);
    if (!idx) throw Error(ErrorCode::Data, "selected feature " + name + " is not canonical", name);
    out.push_back(*idx);
  }
  return out;
}

void ComplicationBundle::validate() const {
  if (selected_features.empty()) throw Error(ErrorCode::Data, "bundle selects no features");
  selected_indices();
  if (gbt.family() != Family::Gbt || ann.family() != Family::Ann) {
    throw Error(ErrorCode::Data, "bundle must pair a GBT and an ANN model");
  }
  if (gbt.feature_names() != selected_features || ann.feature_names() != selected_features) {
    throw Error(ErrorCode::Data, "model feature names differ from the selected features");
  }
  if (scaler.columns.size() != kFeatureCount) throw Error(ErrorCode::Data, "scaler must cover the 32 canonical features");
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string serialize_bundle(const ComplicationBundle& bundle) {
  bundle.validate();
  const std::string doc = document_of(bundle);
  return doc + std::string(kTrailer) + fnv1a_hex(doc) + "\n";
}

std::string bundle_checksum(const ComplicationBundle& bundle) { return fnv1a_hex(document_of(bundle)); }

ComplicationBundle parse_bundle(std::string_view text) {
  // Trailer: the final line, "checksum <16 hex>\n".
  const std::size_t trailer_len = kTrailer.size() + 16 + 1;
  if (text.size() < trailer_len) {
    throw Error(ErrorCode::Parse, "bundle truncated at byte " + std::to_string(text.size()));
  }
  const std::size_t trailer_at = text.size() - trailer_len;
  const std::string_view trailer = text.substr(trailer_at);
  if (trailer.substr(0, kTrailer.size()) != kTrailer || trailer.back() != '\n' ||
      (trailer_at > 0 && text[trailer_at - 1] != '\n')) {
    throw Error(ErrorCode::Parse, "bundle trailer malformed at byte " + std::to_string(trailer_at));
  }
  const std::string_view doc = text.substr(0, trailer_at);
  const std::string_view recorded = trailer.substr(kTrailer.size(), 16);
  if (fnv1a_hex(doc) != recorded) {
    throw Error(ErrorCode::Parse, "bundle checksum mismatch at byte " + std::to_string(trailer_at + kTrailer.size()));
  }

  json j;
  try {
    j = json::parse(doc);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, "bundle is not valid JSON at byte " + std::to_string(e.byte));
  }

  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kSchemaVersion) {
      throw Error(ErrorCode::Version, "bundle schema_version " + std::to_string(version) + " but this build reads " +
                                          std::to_string(kSchemaVersion));
    }
    const auto& names = canonical_feature_names();
    if (j.at("feature_schema").get<std::vector<std::string>>() != std::vector<std::string>(names.begin(), names.end())) {
      throw Error(ErrorCode::Version, "bundle feature schema differs from the canonical feature list");
    }
    const auto complication = complication_from_name(j.at("complication").get<std::string>());
    if (!complication) throw Error(ErrorCode::Parse, "bundle names an unknown complication");
    ComplicationBundle b{*complication,
                         TrainedModel::from_json(j.at("gbt")),
                         TrainedModel::from_json(j.at("ann")),
                         scaler_from_json(j.at("scaler")),
                         repairs_from_json(j.at("iqr_repairs")),
                         j.at("selected_features").get<std::vector<std::string>>(),
                         version,
                         j.at("training_fingerprint").get<std::string>()};
    b.validate();
    return b;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("bundle content malformed: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Version || e.code() == ErrorCode::Parse) throw;
    throw Error(ErrorCode::Parse, std::string("bundle content malformed: ") + e.what());
  }
}

void save_bundle(const ComplicationBundle& bundle, const std::filesystem::path& path) {
  const std::string text = serialize_bundle(bundle);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

ComplicationBundle load_bundle(const std::filesystem::path& path) { return parse_bundle(read_text(path)); }

std::filesystem::path bundle_path(const std::filesystem::path& model_dir, Complication c) {
  return model_dir / (std::string(key_name(c)) + ".bundle");
}

std::filesystem::path manifest_path(const std::filesystem::path& model_dir) { return model_dir / "manifest"; }

void write_manifest(const std::filesystem::path& model_dir) {
  std::filesystem::create_directories(model_dir);
  std::string text(kManifestHeader);
  for (auto c : kAllComplications) text += std::string(key_name(c)) + '\t' + std::string(key_name(c)) + ".bundle\n";
  auto tmp = manifest_path(model_dir);
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out << text;
  }
  std::filesystem::rename(tmp, manifest_path(model_dir));
}

std::vector<ComplicationBundle> load_model_dir(const std::filesystem::path& model_dir) {
  if (!std::filesystem::is_regular_file(manifest_path(model_dir))) {
    throw Error(ErrorCode::ModelLoad, "no manifest in " + model_dir.string());
  }
  std::istringstream manifest(read_text(manifest_path(model_dir)));
  std::array<std::string, kComplicationCount> listed{};
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error(ErrorCode::ModelLoad, "malformed manifest line: " + line);
    auto c = complication_from_name(line.substr(0, tab));
    if (!c) throw Error(ErrorCode::ModelLoad, "manifest names unknown complication " + line.substr(0, tab));
    listed[index_of(*c)] = line.substr(tab + 1);
  }

  std::vector<ComplicationBundle> out;
  for (auto c : kAllComplications) {
    const auto& file = listed[index_of(c)];
    const auto path = model_dir / file;
    if (file.empty() || !std::filesystem::is_regular_file(path)) {
      throw Error(ErrorCode::ModelLoad, "missing bundle: " + std::string(display_name(c)));
    }
    try {
      auto b = load_bundle(path);
      if (b.complication != c) {
        throw Error(ErrorCode::ModelLoad, path.string() + " holds the " + std::string(display_name(b.complication)) +
                                              " bundle, expected " + std::string(display_name(c)));
      }
      out.push_back(std::move(b));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Version || e.code() == ErrorCode::ModelLoad) throw;
      throw Error(ErrorCode::ModelLoad, path.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace triage
