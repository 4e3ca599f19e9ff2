#pragma once

#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "novelty/cli/cli.hpp"
#include "novelty/util/io.hpp"

namespace support {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

inline CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "novelty");
  std::ostringstream out, err;
  CliResult r;
  r.code = novelty::cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

struct PipelineStep {
  std::string name;
  CliResult result;
};

/// Every stage of the toy pipeline, from index build to the preference
/// model, writing under `work`. Inputs are read from `data` (data/toy).
inline std::vector<PipelineStep> run_toy_pipeline(const std::filesystem::path& work,
                                                  const std::filesystem::path& data = "data/toy") {
  ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
  std::filesystem::remove_all(work);
  std::filesystem::create_directories(work);
  const auto w = [&](const std::string& p) { return (work / p).string(); };
  const auto in = [&](const std::string& p) { return (data / p).string(); };
  const std::vector<std::pair<std::string, std::vector<std::string>>> steps = {
      {"index", {"index", "build", "--corpus", in("corpus.txt"), "--out", w("index.nlix")}},
      {"segment",
       {"segment", "--passages", in("passages.jsonl"), "--index", w("index.nlix"), "--out", w("segment"), "--seed",
        "11"}},
      {"import",
       {"annotate", "import", "--store", w("store.db"), "--dir", w("segment"), "--batches", in("batches.jsonl"),
        "--ratings", in("ratings.jsonl"), "--highlights", in("highlights.jsonl")}},
      {"export", {"annotate", "export", "--store", w("store.db"), "--out", w("export")}},
      {"kappa", {"annotate", "kappa", "--dataset", w("export"), "--dimension", "novel", "--out", w("kappa_novel.json")}},
      {"gold", {"eval", "build-gold", "--dataset", w("export"), "--out", w("gold")}},
      {"score",
       {"eval", "score", "--gold", w("gold/gold_novel.jsonl"), "--gold", w("gold/gold_non_pragmatic.jsonl"),
        "--predictions", in("predictions.jsonl"), "--split", "all", "--resamples", "2000", "--seed", "3", "--out",
        w("scores.json")}},
      {"table", {"stats", "table", "--dataset", w("export"), "--index", w("index.nlix"), "--out", w("observations.jsonl")}},
      {"fit", {"stats", "fit", "--data", w("observations.jsonl"), "--out", w("fit.json")}},
      {"fit_source",
       {"stats", "fit", "--data", w("observations.jsonl"), "--formula", "creative ~ ppl_log_std + gen_src + (1|annot)",
        "--contrast", "gen_src", "--out", w("fit_source.json")}},
      {"quartiles", {"stats", "quartiles", "--data", w("observations.jsonl"), "--out", w("quartiles.json")}},
      {"prefs", {"stats", "prefs", "--pairs", in("pairs.jsonl"), "--out", w("prefs.json")}},
  };
  std::vector<PipelineStep> results;
  for (const auto& [name, args] : steps) {
    results.push_back({name, cli(args)});
    if (results.back().result.code != 0) break;
  }
  return results;
}

/// Relative path -> bytes for every file under `dir`, skipping the store
/// (SQLite pages are not reproducible byte for byte).
inline std::map<std::string, std::string> snapshot_files(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(e.path(), dir).generic_string();
    if (rel == "store.db" || rel == "store.db-wal" || rel == "store.db-shm") continue;
    out[rel] = novelty::io::read_file(e.path());
  }
  return out;
}

}  // namespace support
