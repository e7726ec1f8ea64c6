#include "ladle/error.hpp"

namespace ladle {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::DegenerateFit: return "degenerate_fit";
    case ErrorCode::InsufficientData: return "insufficient_data";
    case ErrorCode::AllClustersPruned: return "all_clusters_pruned";
    case ErrorCode::ModelNotFitted: return "model_not_fitted";
    case ErrorCode::ZeroWeight: return "zero_weight";
    case ErrorCode::Infeasible: return "infeasible";
    case ErrorCode::SchemaMismatch: return "schema_mismatch";
    case ErrorCode::EmptyDataset: return "empty_dataset";
    case ErrorCode::MissingTimestamps: return "missing_timestamps";
    case ErrorCode::EmptyTest: return "empty_test";
    case ErrorCode::Parse: return "parse_error";
    case ErrorCode::Io: return "io_error";
  }
  return "unknown";
}

}  // namespace ladle
