#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ladle {

enum class ErrorCode {
  InvalidArgument,
  DegenerateFit,
  InsufficientData,
  AllClustersPruned,
  ModelNotFitted,
  ZeroWeight,
  Infeasible,
  SchemaMismatch,
  EmptyDataset,
  MissingTimestamps,
  EmptyTest,
  Parse,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ladle
