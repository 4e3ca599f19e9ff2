#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "novelty/annotate/store.hpp"
#include "novelty/eval/score.hpp"

namespace novelty::eval {

struct SplitConfig {
  /// Share of passages in the finetune split, few-shot passages included.
  double finetune_fraction = 0.6;
  std::size_t few_shot = 3;
  std::uint64_t seed = 7;
  /// Ratings and highlights count only when the annotator reached the
  /// passage through a non-training batch, unless set.
  bool include_training = false;
};

struct Split {
  /// passage_id -> "few_shot", "finetune" or "eval".
  std::map<std::string, std::string> assignment;
  std::vector<std::string> few_shot;
  std::vector<std::string> finetune;
  std::vector<std::string> eval;
};

io::Json to_json(const Split& s);

/// Union over annotators: rated-novel expressions plus surviving creative
/// highlights for kNovel; expressions rated not pragmatic for kNonPragmatic.
/// Keyed by passage; every passage with a counted rating appears, possibly
/// with no items.
std::map<std::string, GoldPassage> gold_sets(Task task, const annotate::Dataset& d,
                                             const SplitConfig& config = {});

/// Few-shot passages are drawn at random from those whose combined gold
/// count (both tasks) is closest to the median; they count toward the
/// finetune share. The remaining passages are shuffled with the seed.
Split make_split(const annotate::Dataset& d, const SplitConfig& config = {});

/// Gold passages sorted by id, each tagged with its split.
std::vector<GoldPassage> build_gold(Task task, const annotate::Dataset& d, const Split& split,
                                    const SplitConfig& config = {});

/// "eval", "finetune", "few_shot", "all" or "all_but_few_shot".
std::vector<GoldPassage> select_split(const std::vector<GoldPassage>& gold, const std::string& which);

}  // namespace novelty::eval
