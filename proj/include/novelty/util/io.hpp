#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace novelty::io {

using Json = nlohmann::json;

std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames it into place.
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Line-delimited JSON records; blank lines are skipped.
std::vector<Json> read_jsonl(const std::filesystem::path& path);
std::vector<Json> parse_jsonl(std::string_view text, std::string_view origin = "<memory>");
std::string dump_jsonl(const std::vector<Json>& records);
void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records);

/// Versioned files start with a header line {"schema": ..., "version": ...}.
std::string dump_versioned_jsonl(std::string_view schema, int version, const std::vector<Json>& records);
void write_versioned_jsonl(const std::filesystem::path& path, std::string_view schema, int version,
                           const std::vector<Json>& records);
/// The header is optional. A header naming another schema, or a newer
/// version than `max_version`, is a format error.
std::vector<Json> read_versioned_jsonl(const std::filesystem::path& path, std::string_view schema,
                                       int max_version = 1);
bool is_header(const Json& record);

std::string sha256_hex(std::string_view data);
std::string file_sha256(const std::filesystem::path& path);

/// Field accessors that raise format errors naming the missing field.
std::string require_string(const Json& record, const char* key);
const Json& require(const Json& record, const char* key);

}  // namespace novelty::io
