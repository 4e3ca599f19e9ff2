#pragma once

#include <stdexcept>
#include <string>

#include "novelty/annotate/store.hpp"

namespace fixture {

using novelty::annotate::Batch;
using novelty::annotate::RatingRecord;
using novelty::annotate::Store;
using novelty::segment::ExpressionSpan;
using novelty::segment::Passage;

inline const char* kP1 =
    "The moon hung like the severed hand of a giant, and the night was quiet. Dark water rose. "
    "We saw dark watex on the shore.";
inline const char* kP2 = "She smiled. The clock ate the afternoon, slowly. Nothing else moved.";
inline const char* kP3 = "A quiet start.";

inline ExpressionSpan span(const Passage& p, const std::string& text, const std::string& id, bool pre) {
  const auto at = p.text.find(text);
  if (at == std::string::npos) throw std::logic_error("fixture span not found: " + text);
  ExpressionSpan e;
  e.expr_id = id;
  e.passage_id = p.passage_id;
  e.char_start = at;
  e.char_end = at + text.size();
  e.text = text;
  e.pre_highlighted = pre;
  return e;
}

inline Passage passage(const std::string& id, const std::string& text, const std::string& source,
                       const std::string& seed) {
  return Passage{id, text, source, seed};
}

/// p1 (human) and p2 (model) in batch b1 for a1..a3; p3 in a training
/// batch for the same people; a4 only in b3 with p3.
inline void populate(Store& s) {
  const auto p1 = passage("p1", kP1, "human", "p1");
  const auto p2 = passage("p2", kP2, "olmo", "p1");
  const auto p3 = passage("p3", kP3, "human", "p3");
  for (const auto& p : {p1, p2, p3}) s.put_passage(p);
  s.put_expression(span(p1, "The moon hung like the severed hand of a giant", "p1:000", true));
  s.put_expression(span(p1, "and the night was quiet", "p1:001", true));
  s.put_expression(span(p1, "Dark water rose", "p1:002", true));
  s.put_expression(span(p1, "We saw dark watex on the shore", "p1:003", false));
  s.put_expression(span(p2, "She smiled", "p2:000", false));
  s.put_expression(span(p2, "The clock ate the afternoon", "p2:001", true));
  s.put_expression(span(p2, "slowly", "p2:002", true));
  s.put_expression(span(p2, "Nothing else moved", "p2:003", false));
  s.put_expression(span(p3, "A quiet start", "p3:000", true));
  s.put_batch(Batch{"b1", {"p1", "p2"}, {"a1", "a2", "a3"}, false});
  s.put_batch(Batch{"train", {"p3"}, {"a1", "a2", "a3"}, true});
  s.put_batch(Batch{"b3", {"p3"}, {"a4"}, false});
}

inline RatingRecord rating(const std::string& annotator, const std::string& expr, bool s, bool p, bool n,
                           const std::string& ts = "2025-01-01T00:00:00Z") {
  RatingRecord r;
  r.annotator_id = annotator;
  r.expr_id = expr;
  r.sensical = s;
  r.pragmatic = p;
  r.novel = n;
  if (n) r.rationale = "fresh image";
  r.timestamp = ts;
  return r;
}

}  // namespace fixture
