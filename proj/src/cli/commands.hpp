#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "novelty/annotate/store.hpp"
#include "novelty/cli/cli.hpp"

namespace novelty::cli {

struct Context {
  std::ostream& out;
  std::ostream& err;
  RunManifest manifest;
  /// Set by handlers that write files; otherwise the manifest goes to err.
  std::optional<std::filesystem::path> manifest_path;

  void input(const std::filesystem::path& p);
  void input_digest(const std::string& name, const std::string& digest);
  void output(const std::filesystem::path& p);
  /// Every regular file under `dir` except manifest.json, sorted.
  void output_dir(const std::filesystem::path& dir);
  void manifest_in_dir(const std::filesystem::path& dir) { manifest_path = dir / "manifest.json"; }
  void manifest_beside(const std::filesystem::path& file) {
    manifest_path = std::filesystem::path(file.string() + ".manifest.json");
  }
};

using Handler = std::function<void(Context&)>;

struct Command {
  CLI::App* app = nullptr;
  Handler handler;
};

void add_index_commands(CLI::App& root, std::vector<Command>& commands);
void add_segment_command(CLI::App& root, std::vector<Command>& commands);
void add_annotate_commands(CLI::App& root, std::vector<Command>& commands);
void add_eval_commands(CLI::App& root, std::vector<Command>& commands);
void add_stats_commands(CLI::App& root, std::vector<Command>& commands);

/// Source of an annotation dataset: a store file or an export directory.
struct DatasetSource {
  std::string store;
  std::string dir;

  void add_options(CLI::App& app);
  /// Records the input digest. Argument error when neither is given.
  annotate::Dataset load(Context& ctx) const;
};

/// sha256 over the canonical records of a dataset.
std::string dataset_digest(const annotate::Dataset& d);

/// Pretty JSON with a trailing newline.
std::string pretty(const io::Json& j);

}  // namespace novelty::cli
