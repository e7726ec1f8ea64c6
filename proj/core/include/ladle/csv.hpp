#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ladle/sample.hpp"

namespace ladle {

/// Which CSV columns feed a dataset. Declared, never inferred.
struct CsvSchema {
  std::string target_column;
  std::string timestamp_column;  // empty: no timestamps
  std::string id_column;         // empty: row number becomes melt_id
  std::vector<std::string> feature_columns;
};

struct RowReject {
  std::size_t line = 0;  // 1-based line in the file, header is line 1
  std::string reason;
};

struct CsvLoadResult {
  Dataset dataset;
  std::vector<RowReject> rejects;
};

// Rows with missing, non-numeric or non-finite values, or a target outside
// [0, 100], are rejected and reported. Throws SchemaMismatch when a declared
// column is absent and EmptyDataset when no row survives.
CsvLoadResult read_csv(std::istream& in, const CsvSchema& schema, const std::string& element = {});
CsvLoadResult load_csv(const std::filesystem::path& path, const CsvSchema& schema,
                       const std::string& element = {});

// Writes id, timestamp, features..., target with shortest round-trip floats.
// Extra columns (e.g. planted labels) are appended when given.
void write_csv(std::ostream& out, const Dataset& dataset, const CsvSchema& schema,
               const std::vector<std::pair<std::string, std::vector<std::string>>>& extra = {});
void write_csv(const std::filesystem::path& path, const Dataset& dataset, const CsvSchema& schema,
               const std::vector<std::pair<std::string, std::vector<std::string>>>& extra = {});

std::string format_double(double value);

}  // namespace ladle
