#include "novelty/stats/table.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "novelty/util/error.hpp"

namespace novelty::stats {

const Column& ObservationTable::column(const std::string& name) const {
  auto it = columns_.find(name);
  if (it == columns_.end()) fail(ErrorCode::kValidation, "unknown column '" + name + "'", name);
  return it->second;
}

std::vector<std::string> ObservationTable::column_names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : columns_) out.push_back(name);
  return out;
}

void ObservationTable::check_length(std::size_t n, const std::string& name) {
  if (sized_ && n != rows_) {
    fail(ErrorCode::kValidation, "column '" + name + "' has " + std::to_string(n) + " rows, expected " +
                                     std::to_string(rows_), name);
  }
  rows_ = n;
  sized_ = true;
}

void ObservationTable::add_numeric(const std::string& name, std::vector<std::optional<double>> values) {
  check_length(values.size(), name);
  Column c;
  c.kind = Column::Kind::kNumeric;
  c.numeric = std::move(values);
  columns_[name] = std::move(c);
}

void ObservationTable::add_categorical(const std::string& name, std::vector<std::optional<std::string>> values) {
  check_length(values.size(), name);
  Column c;
  c.kind = Column::Kind::kCategorical;
  c.text = std::move(values);
  columns_[name] = std::move(c);
}

std::vector<std::string> ObservationTable::levels(const std::string& name) const {
  const auto& c = column(name);
  if (c.kind != Column::Kind::kCategorical) fail(ErrorCode::kValidation, "column '" + name + "' is not categorical", name);
  std::set<std::string> s;
  for (const auto& v : c.text) {
    if (v) s.insert(*v);
  }
  return {s.begin(), s.end()};
}

ObservationTable ObservationTable::from_records(const std::vector<io::Json>& records) {
  std::map<std::string, Column::Kind> kinds;
  for (const auto& r : records) {
    if (!r.is_object()) fail(ErrorCode::kFormat, "observation rows must be objects");
    for (const auto& [key, value] : r.items()) {
      if (value.is_null() || kinds.count(key)) continue;
      if (value.is_boolean() || value.is_number()) {
        kinds[key] = Column::Kind::kNumeric;
      } else if (value.is_string()) {
        kinds[key] = Column::Kind::kCategorical;
      }
    }
  }
  ObservationTable t;
  for (const auto& [key, kind] : kinds) {
    if (kind == Column::Kind::kNumeric) {
      std::vector<std::optional<double>> v;
      v.reserve(records.size());
      for (const auto& r : records) {
        auto it = r.find(key);
        if (it == r.end() || it->is_null()) {
          v.emplace_back();
        } else if (it->is_boolean()) {
          v.emplace_back(it->get<bool>() ? 1.0 : 0.0);
        } else if (it->is_number()) {
          v.emplace_back(it->get<double>());
        } else {
          fail(ErrorCode::kFormat, "column '" + key + "' mixes numbers and text", key);
        }
      }
      t.add_numeric(key, std::move(v));
    } else {
      std::vector<std::optional<std::string>> v;
      v.reserve(records.size());
      for (const auto& r : records) {
        auto it = r.find(key);
        if (it == r.end() || it->is_null()) {
          v.emplace_back();
        } else if (it->is_string()) {
          v.emplace_back(it->get<std::string>());
        } else if (it->is_number_integer()) {
          v.emplace_back(std::to_string(it->get<long long>()));
        } else {
          fail(ErrorCode::kFormat, "column '" + key + "' mixes text and other values", key);
        }
      }
      t.add_categorical(key, std::move(v));
    }
  }
  if (!t.sized_) t.rows_ = records.size();
  return t;
}

namespace {

std::vector<std::vector<std::string>> csv_rows(std::string_view text, std::string_view origin) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(cell));
      cell.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !cell.empty()) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
      }
      row.clear();
      cell.clear();
      any = false;
    } else {
      cell += c;
      any = true;
    }
  }
  if (quoted) fail(ErrorCode::kFormat, std::string(origin) + ": unterminated quoted field");
  if (any || !cell.empty()) {
    row.push_back(std::move(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::optional<double> parse_number(const std::string& s) {
  double v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

}  // namespace

ObservationTable ObservationTable::parse_csv(std::string_view text, std::string_view origin) {
  const auto rows = csv_rows(text, origin);
  if (rows.empty()) return {};
  const auto& header = rows[0];
  std::vector<io::Json> records;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size()) {
      fail(ErrorCode::kFormat, std::string(origin) + ":" + std::to_string(r + 1) + ": expected " +
                                   std::to_string(header.size()) + " fields");
    }
    records.emplace_back(io::Json::object());
  }
  // A column is numeric when every non-empty cell parses as a number or boolean.
  for (std::size_t c = 0; c < header.size(); ++c) {
    bool numeric = true;
    for (std::size_t r = 1; r < rows.size() && numeric; ++r) {
      const auto& s = rows[r][c];
      if (s.empty() || s == "NA" || s == "true" || s == "false" || s == "TRUE" || s == "FALSE") continue;
      numeric = parse_number(s).has_value();
    }
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& s = rows[r][c];
      auto& rec = records[r - 1];
      if (s.empty() || s == "NA") {
        rec[header[c]] = nullptr;
      } else if (numeric && (s == "true" || s == "TRUE")) {
        rec[header[c]] = true;
      } else if (numeric && (s == "false" || s == "FALSE")) {
        rec[header[c]] = false;
      } else if (numeric) {
        rec[header[c]] = *parse_number(s);
      } else {
        rec[header[c]] = s;
      }
    }
  }
  return from_records(records);
}

ObservationTable ObservationTable::read(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".jsonl" || ext == ".ndjson") {
    auto records = io::read_jsonl(path);
    if (!records.empty() && io::is_header(records.front())) records.erase(records.begin());
    return from_records(records);
  }
  return parse_csv(io::read_file(path), path.string());
}

std::vector<io::Json> ObservationTable::to_records() const {
  std::vector<io::Json> out(rows_, io::Json::object());
  for (const auto& [name, col] : columns_) {
    for (std::size_t i = 0; i < rows_; ++i) {
      if (col.kind == Column::Kind::kNumeric) {
        out[i][name] = col.numeric[i] ? io::Json(*col.numeric[i]) : io::Json(nullptr);
      } else {
        out[i][name] = col.text[i] ? io::Json(*col.text[i]) : io::Json(nullptr);
      }
    }
  }
  return out;
}

}  // namespace novelty::stats
