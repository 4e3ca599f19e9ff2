#include "novelty/eval/gold.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <tuple>

#include "novelty/annotate/analysis.hpp"
#include "novelty/util/error.hpp"

namespace novelty::eval {
namespace {

std::set<std::string> rated_passages(const annotate::Dataset& d) {
  std::map<std::string, std::string> passage_of;
  for (const auto& e : d.expressions) passage_of[e.expr_id] = e.passage_id;
  std::set<std::string> out;
  for (const auto& r : d.ratings) {
    auto it = passage_of.find(r.expr_id);
    if (it != passage_of.end()) out.insert(it->second);
  }
  return out;
}

void shuffle(std::vector<std::string>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

}  // namespace

io::Json to_json(const Split& s) {
  return {{"few_shot", s.few_shot}, {"finetune", s.finetune}, {"eval", s.eval}};
}

std::map<std::string, GoldPassage> gold_sets(Task task, const annotate::Dataset& all, const SplitConfig& config) {
  const auto d = config.include_training ? all : annotate::counted_records(all);
  std::map<std::string, GoldPassage> out;
  for (const auto& pid : rated_passages(d)) {
    auto& g = out[pid];
    g.passage_id = pid;
    g.task = task;
  }
  std::set<std::string> chosen;
  for (const auto& r : d.ratings) {
    if (task == Task::kNovel ? r.novel : !r.pragmatic) chosen.insert(r.expr_id);
  }
  struct Item {
    std::size_t start;
    std::string id;
    std::string text;
  };
  std::map<std::string, std::vector<Item>> items;
  for (const auto& e : d.expressions) {
    if (chosen.count(e.expr_id) && out.count(e.passage_id)) items[e.passage_id].push_back({e.char_start, e.expr_id, e.text});
  }
  if (task == Task::kNovel) {
    for (const auto& e : annotate::dedup_highlights(d).expressions) {
      if (e.from_highlight && out.count(e.passage_id)) items[e.passage_id].push_back({e.char_start, e.expr_id, e.text});
    }
  }
  for (auto& [pid, list] : items) {
    std::sort(list.begin(), list.end(),
              [](const Item& a, const Item& b) { return std::tie(a.start, a.id) < std::tie(b.start, b.id); });
    auto& g = out[pid];
    for (const auto& it : list) {
      g.expr_ids.push_back(it.id);
      g.expressions.push_back(it.text);
    }
  }
  return out;
}

Split make_split(const annotate::Dataset& d, const SplitConfig& config) {
  if (!(config.finetune_fraction >= 0.0 && config.finetune_fraction <= 1.0)) {
    fail(ErrorCode::kArgument, "finetune fraction must lie in [0, 1]", "finetune_fraction");
  }
  const auto novel = gold_sets(Task::kNovel, d, config);
  const auto nonprag = gold_sets(Task::kNonPragmatic, d, config);
  std::vector<std::string> ids;
  std::vector<double> counts;
  for (const auto& [pid, g] : novel) {
    ids.push_back(pid);
    counts.push_back(static_cast<double>(g.expressions.size() + nonprag.at(pid).expressions.size()));
  }
  Split s;
  if (ids.empty()) return s;

  auto sorted = counts;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) rank[order[i]] = i;
  std::vector<std::size_t> by_distance(n);
  for (std::size_t i = 0; i < n; ++i) by_distance[i] = i;
  std::sort(by_distance.begin(), by_distance.end(), [&](std::size_t a, std::size_t b) {
    const double da = std::abs(counts[a] - median);
    const double db = std::abs(counts[b] - median);
    if (da != db) return da < db;
    return rank[a] < rank[b];
  });

  const std::size_t few = std::min(config.few_shot, n);
  std::set<std::string> taken;
  for (std::size_t i = 0; i < few; ++i) {
    s.few_shot.push_back(ids[by_distance[i]]);
    taken.insert(ids[by_distance[i]]);
  }
  std::sort(s.few_shot.begin(), s.few_shot.end());

  std::vector<std::string> rest;
  for (const auto& id : ids) {
    if (!taken.count(id)) rest.push_back(id);
  }
  shuffle(rest, rng);
  auto n_finetune = static_cast<std::size_t>(std::llround(config.finetune_fraction * static_cast<double>(n)));
  n_finetune = std::clamp(n_finetune, few, n);
  const std::size_t extra = n_finetune - few;
  s.finetune.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(extra));
  s.eval.assign(rest.begin() + static_cast<std::ptrdiff_t>(extra), rest.end());
  std::sort(s.finetune.begin(), s.finetune.end());
  std::sort(s.eval.begin(), s.eval.end());
  for (const auto& id : s.few_shot) s.assignment[id] = "few_shot";
  for (const auto& id : s.finetune) s.assignment[id] = "finetune";
  for (const auto& id : s.eval) s.assignment[id] = "eval";
  return s;
}

std::vector<GoldPassage> build_gold(Task task, const annotate::Dataset& d, const Split& split,
                                    const SplitConfig& config) {
  std::vector<GoldPassage> out;
  for (auto& [pid, g] : gold_sets(task, d, config)) {
    auto it = split.assignment.find(pid);
    g.split = it == split.assignment.end() ? "unassigned" : it->second;
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<GoldPassage> select_split(const std::vector<GoldPassage>& gold, const std::string& which) {
  static const std::set<std::string> kKnown = {"eval", "finetune", "few_shot", "all", "all_but_few_shot"};
  if (!kKnown.count(which)) fail(ErrorCode::kArgument, "unknown split '" + which + "'", "split");
  std::vector<GoldPassage> out;
  for (const auto& g : gold) {
    const bool keep = which == "all" || (which == "all_but_few_shot" && g.split != "few_shot") || g.split == which;
    if (keep) out.push_back(g);
  }
  return out;
}

}  // namespace novelty::eval
