#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "novelty/util/io.hpp"

namespace novelty::stats {

/// A column is numeric (booleans become 0/1) or categorical. Missing cells
/// are nullopt.
struct Column {
  enum class Kind { kNumeric, kCategorical };
  Kind kind = Kind::kNumeric;
  std::vector<std::optional<double>> numeric;
  std::vector<std::optional<std::string>> text;

  std::size_t size() const noexcept { return kind == Kind::kNumeric ? numeric.size() : text.size(); }
};

/// Column-oriented observation table.
class ObservationTable {
 public:
  std::size_t rows() const noexcept { return rows_; }
  bool has(const std::string& name) const { return columns_.count(name) > 0; }
  const Column& column(const std::string& name) const;
  std::vector<std::string> column_names() const;

  void add_numeric(const std::string& name, std::vector<std::optional<double>> values);
  void add_categorical(const std::string& name, std::vector<std::optional<std::string>> values);

  /// Sorted distinct levels of a categorical column.
  std::vector<std::string> levels(const std::string& name) const;

  /// Rows keep their order; cell types are inferred per column from the first
  /// non-null value (bool and number are numeric, string is categorical).
  static ObservationTable from_records(const std::vector<io::Json>& records);
  /// .jsonl/.ndjson records, otherwise CSV with a header row.
  static ObservationTable read(const std::filesystem::path& path);
  static ObservationTable parse_csv(std::string_view text, std::string_view origin = "<memory>");

  std::vector<io::Json> to_records() const;

 private:
  void check_length(std::size_t n, const std::string& name);
  std::map<std::string, Column> columns_;
  std::size_t rows_ = 0;
  bool sized_ = false;
};

}  // namespace novelty::stats
