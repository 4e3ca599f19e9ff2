#include "novelty/cli/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iostream>

#include "commands.hpp"
#include "novelty/util/error.hpp"

#ifndef NOVELTY_VERSION
#define NOVELTY_VERSION "0.0.0"
#endif

namespace novelty::cli {
namespace {

std::string command_path(const CLI::App* app) {
  std::string path;
  for (const CLI::App* a = app; a != nullptr && a->get_parent() != nullptr; a = a->get_parent()) {
    path = path.empty() ? a->get_name() : a->get_name() + " " + path;
  }
  return path;
}

io::Json option_value(const CLI::Option* opt) {
  std::vector<std::string> values = opt->results();
  if (opt->count() == 0) {
    const auto& d = opt->get_default_str();
    if (d.empty()) return nullptr;
    values = {d};
  }
  if (values.size() == 1 && opt->get_expected_max() <= 1) return values.front();
  return values;
}

io::Json resolved_config(const CLI::App* app) {
  io::Json config = io::Json::object();
  for (const CLI::Option* opt : app->get_options()) {
    const auto name = opt->get_single_name();
    if (name == "help" || name == "config" || name == "manifest") continue;
    auto value = option_value(opt);
    if (name.find("secret") != std::string::npos && !value.is_null()) value = "<redacted>";
    config[name] = std::move(value);
  }
  return config;
}

void log_error(std::ostream& err, std::string_view code, const std::string& message, const std::string& field) {
  io::Json line = {{"level", "error"}, {"code", code}, {"message", message}};
  if (!field.empty()) line["field"] = field;
  err << line.dump() << "\n";
}

}  // namespace

io::Json to_json(const RunManifest& m) {
  return {{"schema", "novelty.manifest"},
          {"version", 1},
          {"subcommand", m.subcommand},
          {"config", m.config},
          {"inputs", m.inputs},
          {"outputs", m.outputs},
          {"seed", m.seed ? io::Json(*m.seed) : io::Json(nullptr)},
          {"tool_version", m.tool_version},
          {"started_at", m.started_at},
          {"finished_at", m.finished_at}};
}

std::int64_t manifest_clock() {
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0') {
    char* end = nullptr;
    const long long v = std::strtoll(epoch, &end, 10);
    if (end != nullptr && *end == '\0') return v;
  }
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string iso_utc(std::int64_t seconds) {
  const std::time_t t = static_cast<std::time_t>(seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void Context::input(const std::filesystem::path& p) { manifest.inputs[p.generic_string()] = io::file_sha256(p); }

void Context::input_digest(const std::string& name, const std::string& digest) { manifest.inputs[name] = digest; }

void Context::output(const std::filesystem::path& p) { manifest.outputs[p.generic_string()] = io::file_sha256(p); }

void Context::output_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() != "manifest.json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) output(f);
}

std::string pretty(const io::Json& j) { return j.dump(2) + "\n"; }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reference-corpus novelty, close-reading annotation and evaluation toolkit", "novelty"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_config("--config", "", "INI or TOML file with per-subcommand sections; flags take precedence");
  std::string manifest_override;
  app.add_option("--manifest", manifest_override, "Write the run manifest here");

  std::vector<Command> commands;
  add_index_commands(app, commands);
  add_segment_command(app, commands);
  add_annotate_commands(app, commands);
  add_eval_commands(app, commands);
  add_stats_commands(app, commands);

  // CLI11 consumes arguments from the back.
  std::vector<std::string> reversed;
  for (std::size_t i = args.size(); i > 1; --i) reversed.push_back(args[i - 1]);
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << e.what() << "\n\n" << app.help();
    log_error(err, "argument", e.what(), "");
    return kExitValidation;
  }

  const Command* selected = nullptr;
  for (const auto& c : commands) {
    if (c.app->parsed()) selected = &c;
  }
  if (selected == nullptr) {
    err << app.help();
    return kExitValidation;
  }

  Context ctx{out, err, {}, std::nullopt};
  ctx.manifest.subcommand = command_path(selected->app);
  ctx.manifest.config = resolved_config(selected->app);
  ctx.manifest.tool_version = NOVELTY_VERSION;
  ctx.manifest.started_at = iso_utc(manifest_clock());
  try {
    selected->handler(ctx);
    ctx.manifest.finished_at = iso_utc(manifest_clock());
    if (!manifest_override.empty()) ctx.manifest_path = manifest_override;
    if (ctx.manifest_path) {
      io::write_file(*ctx.manifest_path, pretty(to_json(ctx.manifest)));
    } else {
      err << to_json(ctx.manifest).dump() << "\n";
    }
    return kExitOk;
  } catch (const Error& e) {
    log_error(err, to_string(e.code()), e.what(), e.field());
    return e.code() == ErrorCode::kInternal ? kExitInternal : kExitValidation;
  } catch (const io::Json::exception& e) {
    log_error(err, "format", e.what(), "");
    return kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    log_error(err, "io", e.what(), "");
    return kExitValidation;
  } catch (const std::exception& e) {
    log_error(err, "internal", e.what(), "");
    return kExitInternal;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace novelty::cli
