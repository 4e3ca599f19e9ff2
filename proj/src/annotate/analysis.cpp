#include "novelty/annotate/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <tuple>

#include "novelty/util/error.hpp"
#include "novelty/util/utf8.hpp"

namespace novelty::annotate {
namespace {

struct Included {
  std::size_t index;  // into DedupResult::expressions
  std::string norm;
  std::u32string code_points;
};

std::string highlight_expr_id(const std::string& passage_id, std::size_t n) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03zu", n);
  return passage_id + ":h" + buf;
}

}  // namespace

io::Json to_json(const CreativeExpression& e) {
  return {{"expr_id", e.expr_id},
          {"passage_id", e.passage_id},
          {"char_start", e.char_start},
          {"char_end", e.char_end},
          {"text", e.text},
          {"from_highlight", e.from_highlight},
          {"highlight_ids", e.highlight_ids},
          {"highlighters", e.highlighters}};
}

DedupResult dedup_highlights(const std::vector<HighlightRecord>& highlights,
                             const std::vector<segment::ExpressionSpan>& rated_exprs,
                             const std::vector<segment::Passage>& passages, double ratio_threshold) {
  std::map<std::string, const segment::Passage*> by_id;
  for (const auto& p : passages) by_id[p.passage_id] = &p;

  DedupResult out;
  std::map<std::string, std::vector<Included>> included;
  auto include = [&](CreativeExpression e) {
    auto norm = eval::normalize(e.text);
    auto cps = utf8::to_u32(norm);
    included[e.passage_id].push_back({out.expressions.size(), std::move(norm), std::move(cps)});
    out.expressions.push_back(std::move(e));
  };

  for (const auto& r : rated_exprs) {
    CreativeExpression e;
    e.expr_id = r.expr_id;
    e.passage_id = r.passage_id;
    e.char_start = r.char_start;
    e.char_end = r.char_end;
    e.text = r.text;
    if (e.text.empty()) {
      auto it = by_id.find(r.passage_id);
      if (it != by_id.end()) e.text = it->second->text.substr(r.char_start, r.char_end - r.char_start);
    }
    include(std::move(e));
  }

  std::vector<const HighlightRecord*> order;
  for (const auto& h : highlights) order.push_back(&h);
  std::stable_sort(order.begin(), order.end(), [](const HighlightRecord* a, const HighlightRecord* b) {
    if (a->timestamp != b->timestamp) return a->timestamp < b->timestamp;
    return a->record_id < b->record_id;
  });

  std::map<std::string, std::size_t> next_ordinal;
  for (const auto* h : order) {
    auto pit = by_id.find(h->passage_id);
    if (pit == by_id.end()) fail(ErrorCode::kNotFound, "highlight " + h->record_id + " names unknown passage", "passage_id");
    const auto& text = pit->second->text;
    if (h->char_end > text.size() || h->char_start >= h->char_end) {
      fail(ErrorCode::kValidation, "highlight " + h->record_id + " has an invalid span", "char_end");
    }
    const auto span = text.substr(h->char_start, h->char_end - h->char_start);
    const auto norm = eval::normalize(span);
    const auto cps = utf8::to_u32(norm);

    std::optional<std::pair<std::size_t, eval::MatchResult>> hit;
    for (const auto& inc : included[h->passage_id]) {
      auto m = eval::compare_normalized(norm, cps, inc.norm, inc.code_points, ratio_threshold);
      if (m.matched()) {
        hit = {inc.index, m};
        break;
      }
    }
    if (!hit) {
      CreativeExpression e;
      e.expr_id = highlight_expr_id(h->passage_id, next_ordinal[h->passage_id]++);
      e.passage_id = h->passage_id;
      e.char_start = h->char_start;
      e.char_end = h->char_end;
      e.text = span;
      e.from_highlight = true;
      e.highlight_ids = {h->record_id};
      e.highlighters = {h->annotator_id};
      include(std::move(e));
      continue;
    }
    auto& target = out.expressions[hit->first];
    if (target.from_highlight) {
      target.highlight_ids.push_back(h->record_id);
      auto& who = target.highlighters;
      if (std::find(who.begin(), who.end(), h->annotator_id) == who.end()) {
        who.push_back(h->annotator_id);
        std::sort(who.begin(), who.end());
      }
    } else {
      out.dropped.push_back({h->record_id, target.expr_id, hit->second.relation, hit->second.ratio});
    }
  }
  return out;
}

std::vector<segment::ExpressionSpan> rated_expressions(const Dataset& d) {
  std::set<std::string> rated;
  for (const auto& r : d.ratings) rated.insert(r.expr_id);
  std::vector<segment::ExpressionSpan> out;
  for (const auto& e : d.expressions) {
    if (e.pre_highlighted && rated.count(e.expr_id)) out.push_back(e);
  }
  return out;
}

Dataset counted_records(const Dataset& d) {
  std::set<std::pair<std::string, std::string>> counted;
  for (const auto& b : d.batches) {
    if (b.is_training) continue;
    for (const auto& a : b.assigned_annotators) {
      for (const auto& p : b.passage_ids) counted.insert({a, p});
    }
  }
  std::map<std::string, std::string> passage_of;
  for (const auto& e : d.expressions) passage_of[e.expr_id] = e.passage_id;
  Dataset out = d;
  out.batches.clear();
  out.ratings.clear();
  out.highlights.clear();
  for (const auto& b : d.batches) {
    if (!b.is_training) out.batches.push_back(b);
  }
  for (const auto& r : d.ratings) {
    auto it = passage_of.find(r.expr_id);
    if (it != passage_of.end() && counted.count({r.annotator_id, it->second})) out.ratings.push_back(r);
  }
  for (const auto& h : d.highlights) {
    if (counted.count({h.annotator_id, h.passage_id})) out.highlights.push_back(h);
  }
  return out;
}

DedupResult dedup_highlights(const Dataset& d) {
  return dedup_highlights(d.highlights, rated_expressions(d), d.passages);
}

std::string_view to_string(LabelSource s) noexcept {
  switch (s) {
    case LabelSource::kRating:
      return "rating";
    case LabelSource::kHighlight:
      return "highlight";
    case LabelSource::kAugmented:
      return "augmented";
  }
  return "rating";
}

io::Json to_json(const CreativeLabel& l) {
  return {{"expr_id", l.expr_id},
          {"annotator_id", l.annotator_id},
          {"creative", l.creative},
          {"source", to_string(l.source)}};
}

std::vector<CreativeLabel> creative_labels(const Dataset& d, bool augment) {
  std::vector<CreativeLabel> out;
  for (const auto& r : d.ratings) out.push_back({r.expr_id, r.annotator_id, r.creative(), LabelSource::kRating});

  std::map<std::string, std::set<std::string>> assigned;
  for (const auto& b : d.batches) {
    for (const auto& p : b.passage_ids) assigned[p].insert(b.assigned_annotators.begin(), b.assigned_annotators.end());
  }
  for (const auto& e : dedup_highlights(d).expressions) {
    if (!e.from_highlight) continue;
    for (const auto& a : e.highlighters) out.push_back({e.expr_id, a, true, LabelSource::kHighlight});
    if (!augment) continue;
    for (const auto& a : assigned[e.passage_id]) {
      if (!std::binary_search(e.highlighters.begin(), e.highlighters.end(), a)) {
        out.push_back({e.expr_id, a, false, LabelSource::kAugmented});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const CreativeLabel& a, const CreativeLabel& b) {
    return std::tie(a.expr_id, a.annotator_id) < std::tie(b.expr_id, b.annotator_id);
  });
  return out;
}

double observed_agreement(const std::vector<std::vector<int>>& items, int q) {
  if (q < 2) fail(ErrorCode::kArgument, "kappa needs at least two categories", "q");
  if (items.empty()) fail(ErrorCode::kArgument, "kappa needs at least one item");
  double sum = 0.0;
  std::vector<double> counts(static_cast<std::size_t>(q));
  for (const auto& item : items) {
    const double m = static_cast<double>(item.size());
    if (item.size() < 2) fail(ErrorCode::kArgument, "every item needs at least two raters");
    std::fill(counts.begin(), counts.end(), 0.0);
    for (int c : item) {
      if (c < 0 || c >= q) fail(ErrorCode::kArgument, "category out of range");
      counts[static_cast<std::size_t>(c)] += 1.0;
    }
    double agree = 0.0;
    for (double n : counts) agree += n * (n - 1.0);
    sum += agree / (m * (m - 1.0));
  }
  return sum / static_cast<double>(items.size());
}

double kappa_free(const std::vector<std::vector<int>>& items, int q) {
  const double po = observed_agreement(items, q);
  const double pe = 1.0 / q;
  return (po - pe) / (1.0 - pe);
}

io::Json to_json(const KappaReport& r) {
  io::Json missing = io::Json::array();
  for (const auto& m : r.missing) {
    missing.push_back({{"annotator_id", m.annotator_id}, {"passage_id", m.passage_id}, {"expr_id", m.expr_id}});
  }
  return {{"batch_id", r.batch_id},
          {"dimension", to_string(r.dimension)},
          {"is_training", r.is_training},
          {"n_items", r.n_items},
          {"n_raters", r.n_raters},
          {"observed_agreement", r.observed_agreement ? io::Json(*r.observed_agreement) : io::Json(nullptr)},
          {"kappa", r.kappa ? io::Json(*r.kappa) : io::Json(nullptr)},
          {"missing", missing}};
}

KappaReport batch_kappa(const Dataset& d, const std::string& batch_id, Dimension dimension, int q) {
  const auto bit = std::find_if(d.batches.begin(), d.batches.end(),
                                [&](const Batch& b) { return b.batch_id == batch_id; });
  if (bit == d.batches.end()) fail(ErrorCode::kNotFound, "unknown batch " + batch_id, "batch");
  KappaReport r;
  r.batch_id = batch_id;
  r.dimension = dimension;
  r.is_training = bit->is_training;
  r.n_raters = bit->assigned_annotators.size();

  std::map<std::pair<std::string, std::string>, const RatingRecord*> by_key;
  for (const auto& rt : d.ratings) by_key[{rt.annotator_id, rt.expr_id}] = &rt;

  std::vector<std::vector<int>> items;
  for (const auto& pid : bit->passage_ids) {
    for (const auto& e : d.expressions) {
      if (e.passage_id != pid || !e.pre_highlighted) continue;
      ++r.n_items;
      std::vector<int> item;
      for (const auto& a : bit->assigned_annotators) {
        auto it = by_key.find({a, e.expr_id});
        if (it == by_key.end()) {
          r.missing.push_back({a, pid, e.expr_id});
        } else {
          item.push_back(it->second->value(dimension) ? 1 : 0);
        }
      }
      items.push_back(std::move(item));
    }
  }
  if (r.missing.empty() && !items.empty() && r.n_raters >= 2) {
    r.observed_agreement = observed_agreement(items, q);
    r.kappa = kappa_free(items, q);
  }
  return r;
}

io::Json to_json(const KappaSummary& s) {
  io::Json batches = io::Json::array();
  for (const auto& b : s.batches) batches.push_back(to_json(b));
  return {{"dimension", to_string(s.dimension)},
          {"batches", batches},
          {"n_used", s.n_used},
          {"mean", s.mean ? io::Json(*s.mean) : io::Json(nullptr)},
          {"sd", s.sd ? io::Json(*s.sd) : io::Json(nullptr)}};
}

KappaSummary kappa_summary(const Dataset& d, Dimension dimension, int q) {
  KappaSummary s;
  s.dimension = dimension;
  std::vector<double> used;
  for (const auto& b : d.batches) {
    s.batches.push_back(batch_kappa(d, b.batch_id, dimension, q));
    const auto& r = s.batches.back();
    if (!r.is_training && r.kappa) used.push_back(*r.kappa);
  }
  s.n_used = used.size();
  if (!used.empty()) {
    double sum = 0.0;
    for (double k : used) sum += k;
    s.mean = sum / static_cast<double>(used.size());
  }
  if (used.size() >= 2) {
    double ss = 0.0;
    for (double k : used) ss += (k - *s.mean) * (k - *s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(used.size() - 1));
  }
  return s;
}

}  // namespace novelty::annotate
