#include "novelty/util/io.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <iterator>
#include <sstream>

#include "novelty/util/error.hpp"

namespace novelty::io {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string(), path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write " + tmp.string(), path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) fail(ErrorCode::kIo, "short write to " + tmp.string(), path.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<Json> parse_jsonl(std::string_view text, std::string_view origin) {
  std::vector<Json> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    ++line_no;
    pos = nl + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (nl == text.size()) break;
      continue;
    }
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::parse_error& e) {
      fail(ErrorCode::kFormat,
           std::string(origin) + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (nl == text.size()) break;
  }
  return out;
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
  return parse_jsonl(read_file(path), path.string());
}

std::string dump_jsonl(const std::vector<Json>& records) {
  std::string out;
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records) {
  write_file(path, dump_jsonl(records));
}

std::string dump_versioned_jsonl(std::string_view schema, int version, const std::vector<Json>& records) {
  Json header = {{"schema", schema}, {"version", version}};
  return header.dump() + "\n" + dump_jsonl(records);
}

void write_versioned_jsonl(const std::filesystem::path& path, std::string_view schema, int version,
                           const std::vector<Json>& records) {
  write_file(path, dump_versioned_jsonl(schema, version, records));
}

bool is_header(const Json& record) {
  return record.is_object() && record.size() == 2 && record.contains("schema") && record.contains("version");
}

std::vector<Json> read_versioned_jsonl(const std::filesystem::path& path, std::string_view schema,
                                       int max_version) {
  auto records = read_jsonl(path);
  if (records.empty() || !is_header(records.front())) return records;
  const auto& h = records.front();
  if (!h["schema"].is_string() || h["schema"].get<std::string>() != schema) {
    fail(ErrorCode::kFormat, path.string() + ": expected schema " + std::string(schema));
  }
  if (!h["version"].is_number_integer() || h["version"].get<int>() > max_version) {
    fail(ErrorCode::kFormat, path.string() + ": unsupported version " + h["version"].dump());
  }
  records.erase(records.begin());
  return records;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorCode::kInternal, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string file_sha256(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

const Json& require(const Json& record, const char* key) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) {
    fail(ErrorCode::kFormat, std::string("missing field '") + key + "'", key);
  }
  return *it;
}

std::string require_string(const Json& record, const char* key) {
  const auto& v = require(record, key);
  if (!v.is_string()) fail(ErrorCode::kFormat, std::string("field '") + key + "' must be a string", key);
  return v.get<std::string>();
}

}  // namespace novelty::io
