#include "ladle/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "ladle/error.hpp"

namespace ladle {
namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += ch;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool parse_int(const std::string& text, std::int64_t& out) {
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

CsvLoadResult read_csv(std::istream& in, const CsvSchema& schema, const std::string& element) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::EmptyDataset, "CSV input has no header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  std::map<std::string, std::size_t> column;
  const auto header = split_fields(line);
  for (std::size_t i = 0; i < header.size(); ++i) column.emplace(trim(header[i]), i);

  auto require = [&](const std::string& name) {
    const auto it = column.find(name);
    if (it == column.end()) {
      throw Error(ErrorCode::SchemaMismatch, "CSV header lacks declared column '" + name + "'");
    }
    return it->second;
  };
  if (schema.target_column.empty() || schema.feature_columns.empty()) {
    throw Error(ErrorCode::SchemaMismatch, "schema must declare a target and at least one feature");
  }
  const std::size_t target_col = require(schema.target_column);
  std::vector<std::size_t> feature_cols;
  for (const auto& f : schema.feature_columns) feature_cols.push_back(require(f));
  const bool has_ts = !schema.timestamp_column.empty();
  const std::size_t ts_col = has_ts ? require(schema.timestamp_column) : 0;
  const bool has_id = !schema.id_column.empty();
  const std::size_t id_col = has_id ? require(schema.id_column) : 0;

  CsvLoadResult result;
  result.dataset.feature_names = schema.feature_columns;
  result.dataset.element = element;
  result.dataset.has_timestamps = has_ts;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      result.rejects.push_back({line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                             std::to_string(fields.size())});
      continue;
    }

    MeltSample sample;
    std::string reason;
    sample.features.resize(feature_cols.size());
    for (std::size_t j = 0; j < feature_cols.size() && reason.empty(); ++j) {
      if (!parse_double(trim(fields[feature_cols[j]]), sample.features[j])) {
        reason = "column '" + schema.feature_columns[j] + "' is missing or not a finite number";
      }
    }
    if (reason.empty() && !parse_double(trim(fields[target_col]), sample.target)) {
      reason = "target '" + schema.target_column + "' is missing or not a finite number";
    }
    if (reason.empty() && !(sample.target >= 0.0 && sample.target <= 100.0)) {
      reason = "target share outside [0, 100]";
    }
    if (reason.empty() && has_ts && !parse_int(trim(fields[ts_col]), sample.timestamp)) {
      reason = "timestamp '" + schema.timestamp_column + "' is not an integer";
    }
    if (!reason.empty()) {
      result.rejects.push_back({line_no, reason});
      continue;
    }
    sample.melt_id = has_id ? trim(fields[id_col]) : std::to_string(line_no - 1);
    if (!has_ts) sample.timestamp = static_cast<std::int64_t>(result.dataset.samples.size());
    result.dataset.samples.push_back(std::move(sample));
  }
  if (result.dataset.empty()) {
    throw Error(ErrorCode::EmptyDataset, "no valid rows (" + std::to_string(result.rejects.size()) +
                                             " rejected)");
  }
  return result;
}

CsvLoadResult load_csv(const std::filesystem::path& path, const CsvSchema& schema,
                       const std::string& element) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open dataset '" + path.string() + "'");
  return read_csv(in, schema, element);
}

void write_csv(std::ostream& out, const Dataset& dataset, const CsvSchema& schema,
               const std::vector<std::pair<std::string, std::vector<std::string>>>& extra) {
  const std::string id_name = schema.id_column.empty() ? "melt_id" : schema.id_column;
  out << quote_if_needed(id_name);
  if (!schema.timestamp_column.empty()) out << ',' << quote_if_needed(schema.timestamp_column);
  for (const auto& name : dataset.feature_names) out << ',' << quote_if_needed(name);
  out << ',' << quote_if_needed(schema.target_column);
  for (const auto& [name, values] : extra) out << ',' << quote_if_needed(name);
  out << '\n';
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& s = dataset.samples[i];
    out << quote_if_needed(s.melt_id);
    if (!schema.timestamp_column.empty()) out << ',' << s.timestamp;
    for (double v : s.features) out << ',' << format_double(v);
    out << ',' << format_double(s.target);
    for (const auto& [name, values] : extra) out << ',' << quote_if_needed(values.at(i));
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Dataset& dataset, const CsvSchema& schema,
               const std::vector<std::pair<std::string, std::vector<std::string>>>& extra) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  write_csv(out, dataset, schema, extra);
}

}  // namespace ladle
