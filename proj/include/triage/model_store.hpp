#pragma once

// Per-complication model bundles on disk.
//
// A bundle file is a JSON document followed by one trailer line
// `checksum <16 hex digits>` (FNV-1a 64 over the document bytes). Writing is
// canonical: the same bundle always produces the same bytes.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "triage/core_types.hpp"
#include "triage/learners.hpp"
#include "triage/preprocess.hpp"

namespace triage {

struct ComplicationBundle {
  Complication complication;
  TrainedModel gbt;
  TrainedModel ann;
  Scaler scaler;                     // over the 32 canonical features
  std::vector<VitalRepair> repairs;  // training-set IQR rules
  std::vector<std::string> selected_features;
  int schema_version = kSchemaVersion;
  std::string training_fingerprint;

  /// Indices of selected_features in the canonical layout.
  std::vector<std::size_t> selected_indices() const;
  /// Throws Error{Data} when the models disagree with selected_features.
  void validate() const;

  bool operator==(const ComplicationBundle&) const = default;
};

std::string serialize_bundle(const ComplicationBundle& bundle);
/// Error{Parse} (message carries a byte offset) for damaged input,
/// Error{Version} for a schema mismatch.
ComplicationBundle parse_bundle(std::string_view text);

/// Writes through a temporary file and renames it into place.
void save_bundle(const ComplicationBundle& bundle, const std::filesystem::path& path);
ComplicationBundle load_bundle(const std::filesystem::path& path);

/// FNV-1a 64 of `text`, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view text);

/// Checksum recorded in the trailer of a serialized bundle.
std::string bundle_checksum(const ComplicationBundle& bundle);

std::filesystem::path bundle_path(const std::filesystem::path& model_dir, Complication c);
std::filesystem::path manifest_path(const std::filesystem::path& model_dir);

/// Lists the six expected bundle files, one `<complication>\t<file>` line each.
void write_manifest(const std::filesystem::path& model_dir);

/// Loads all six bundles in complication order. Error{ModelLoad} when the
/// manifest or a bundle is missing ("missing bundle: Metabolic").
std::vector<ComplicationBundle> load_model_dir(const std::filesystem::path& model_dir);

}  // namespace triage
