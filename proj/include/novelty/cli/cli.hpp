#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "novelty/util/io.hpp"

namespace novelty::cli {

/// Written next to every run's outputs.
struct RunManifest {
  std::string subcommand;
  /// Every option of the subcommand after config file, environment and
  /// flags were applied.
  io::Json config = io::Json::object();
  /// Path as given -> sha256 of its bytes.
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> outputs;
  std::optional<std::uint64_t> seed;
  std::string tool_version;
  std::string started_at;
  std::string finished_at;
};

io::Json to_json(const RunManifest& m);

/// Seconds since the epoch, or SOURCE_DATE_EPOCH when it is set.
std::int64_t manifest_clock();
/// "YYYY-MM-DDTHH:MM:SSZ".
std::string iso_utc(std::int64_t seconds);

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitInternal = 2;

/// Parses and executes one command line (args[0] is the program name).
/// Results go to `out`, usage and structured logs to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace novelty::cli
