#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace triage {

enum class ErrorCode {
  Range,            // value outside its declared valid range
  Data,             // malformed or non-finite input data
  Integration,      // table merge problems
  InsufficientData,
  Repair,
  Fit,
  Shape,
  Parse,
  Version,
  Config,
  Evaluation,
  Search,
  Split,
  Selection,
  Io,
  ModelLoad,
  Usage,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field = {})
      : std::runtime_error(message), code_(code), field_(std::move(field)) {}

  ErrorCode code() const noexcept { return code_; }

  /// Name of the offending field, when the error concerns one.
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

}  // namespace triage
