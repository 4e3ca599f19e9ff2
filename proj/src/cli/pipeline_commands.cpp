#include <cmath>
#include <memory>
#include <set>

#include "commands.hpp"
#include "novelty/annotate/export.hpp"
#include "novelty/ngram/suffix_index.hpp"
#include "novelty/segment/segmenter.hpp"
#include "novelty/stats/standardize.hpp"
#include "novelty/util/error.hpp"

namespace novelty::cli {
namespace {

io::Json step_record(const ngram::BackoffResult& s, const std::string& token) {
  return {{"token", token},
          {"numerator", s.numerator},
          {"denominator", s.denominator},
          {"probability", s.probability()},
          {"effective_n", s.effective_n}};
}

struct PerplexityFlags {
  std::string floor = "epsilon";
  std::string history = "full";

  void add(CLI::App* app) {
    app->add_option("--floor", floor, "Zero-probability handling")->check(CLI::IsMember({"epsilon", "flag"}));
    app->add_option("--history", history, "Conditioning history")->check(CLI::IsMember({"full", "bigram"}));
  }
  ngram::PerplexityOptions options() const {
    ngram::PerplexityOptions o;
    o.floor = ngram::parse_floor_policy(floor);
    o.history = ngram::parse_history_mode(history);
    return o;
  }
};

void add_build(CLI::App* index, std::vector<Command>& commands) {
  struct Opts {
    std::string corpus, out, format = "auto";
    std::string tokenizer = std::string(ngram::kDefaultTokenizer);
  };
  auto o = std::make_shared<Opts>();
  auto* c = index->add_subcommand("build", "Build a suffix index over a corpus");
  c->add_option("--corpus", o->corpus, "One document per line, or {doc_id, text} records")
      ->required()
      ->check(CLI::ExistingFile);
  c->add_option("--out", o->out, "Index file to write")->required();
  c->add_option("--tokenizer", o->tokenizer, "Tokenization scheme")->check(CLI::IsMember(ngram::tokenizer_names()));
  c->add_option("--format", o->format, "Corpus layout")->check(CLI::IsMember({"auto", "lines", "records"}));
  commands.push_back({c, [o](Context& ctx) {
                        ctx.input(o->corpus);
                        const auto name = std::string(ngram::make_tokenizer(o->tokenizer)->name());
                        auto seq = ngram::read_corpus(o->corpus, name, ngram::parse_corpus_format(o->format));
                        const auto documents = seq.doc_boundaries.size();
                        const auto vocabulary = seq.vocab.size();
                        const auto idx = ngram::SuffixIndex::build(std::move(seq), name);
                        idx.save(o->out);
                        ctx.output(o->out);
                        ctx.manifest_beside(o->out);
                        ctx.out << pretty({{"tokens", idx.size()},
                                           {"documents", documents},
                                           {"vocabulary", vocabulary},
                                           {"tokenizer", idx.tokenizer_name()}});
                      }});
}

void add_count(CLI::App* index, std::vector<Command>& commands) {
  struct Opts {
    std::string index, query;
  };
  auto o = std::make_shared<Opts>();
  auto* c = index->add_subcommand("count", "Count occurrences of an n-gram");
  c->add_option("--index", o->index, "Index file")->required()->check(CLI::ExistingFile);
  c->add_option("--query", o->query, "Text, tokenized with the index scheme")->required();
  commands.push_back({c, [o](Context& ctx) {
                        ctx.input(o->index);
                        const auto idx = ngram::SuffixIndex::load(o->index);
                        const auto tokens = ngram::make_tokenizer(idx.tokenizer_name())->tokens(o->query);
                        if (tokens.empty()) fail(ErrorCode::kArgument, "query has no tokens", "--query");
                        const auto ids = idx.encode(tokens);
                        ctx.out << pretty({{"query", o->query}, {"tokens", tokens}, {"count", idx.count(ids)}});
                      }});
}

void add_ppl(CLI::App* index, std::vector<Command>& commands) {
  struct Opts {
    std::string index, expr, prefix;
    PerplexityFlags ppl;
  };
  auto o = std::make_shared<Opts>();
  auto* c = index->add_subcommand("ppl", "Backoff perplexity of an expression");
  c->add_option("--index", o->index, "Index file")->required()->check(CLI::ExistingFile);
  c->add_option("--expr", o->expr, "Expression text")->required();
  c->add_option("--prefix", o->prefix, "Preceding text to condition on");
  o->ppl.add(c);
  commands.push_back({c, [o](Context& ctx) {
                        ctx.input(o->index);
                        const auto idx = ngram::SuffixIndex::load(o->index);
                        const auto tok = ngram::make_tokenizer(idx.tokenizer_name());
                        const auto tokens = tok->tokens(o->expr);
                        if (tokens.empty()) fail(ErrorCode::kArgument, "expression has no tokens", "--expr");
                        const auto ids = idx.encode(tokens);
                        const auto prefix = idx.encode(tok->tokens(o->prefix));
                        auto options = o->ppl.options();
                        options.prefix = prefix;
                        const auto r = idx.perplexity(ids, options);
                        io::Json steps = io::Json::array();
                        for (std::size_t i = 0; i < r.steps.size(); ++i) steps.push_back(step_record(r.steps[i], tokens[i]));
                        ctx.out << pretty({{"expr", o->expr},
                                           {"tokens", tokens},
                                           {"ppl", r.infinite ? io::Json(nullptr) : io::Json(r.value)},
                                           {"infinite", r.infinite},
                                           {"floored_tokens", r.floored_tokens},
                                           {"steps", steps}});
                      }});
}

}  // namespace

void add_index_commands(CLI::App& root, std::vector<Command>& commands) {
  auto* index = root.add_subcommand("index", "Reference-corpus suffix index");
  index->require_subcommand(1);
  add_build(index, commands);
  add_count(index, commands);
  add_ppl(index, commands);
}

void add_segment_command(CLI::App& root, std::vector<Command>& commands) {
  struct Opts {
    std::string passages, index, out, rules, context = "none";
    double threshold = segment::kDefaultSelectThreshold;
    std::uint64_t seed = 0;
    std::size_t samples_per_region = 5;
    std::size_t gram_size = 15;
    PerplexityFlags ppl;
  };
  auto o = std::make_shared<Opts>();
  auto* c = root.add_subcommand("segment", "Split passages, profile expressions and select pre-highlights");
  c->add_option("--passages", o->passages, "Passage records")->required()->check(CLI::ExistingFile);
  c->add_option("--index", o->index, "Index file")->required()->check(CLI::ExistingFile);
  c->add_option("--out", o->out, "Output directory")->required();
  c->add_option("--threshold", o->threshold, "Minimum NovelPct for pre-highlighting")->check(CLI::Range(0.0, 1.0));
  c->add_option("--seed", o->seed, "Seed for contamination sampling");
  c->add_option("--rules", o->rules, "Split rules (JSON)")->check(CLI::ExistingFile);
  c->add_option("--context", o->context, "Condition perplexity on the preceding passage text")
      ->check(CLI::IsMember({"none", "passage"}));
  c->add_option("--samples-per-region", o->samples_per_region, "Contamination samples per passage third");
  c->add_option("--gram-size", o->gram_size, "Contamination n-gram length");
  o->ppl.add(c);

  commands.push_back({c, [o](Context& ctx) {
    ctx.manifest.seed = o->seed;
    ctx.input(o->passages);
    ctx.input(o->index);
    const auto passages = segment::read_passages(o->passages);
    const auto idx = ngram::SuffixIndex::load(o->index);

    segment::SplitRules rules;
    rules.tokenizer = idx.tokenizer_name();
    if (!o->rules.empty()) {
      ctx.input(o->rules);
      rules = segment::split_rules_from_json(io::Json::parse(io::read_file(o->rules)));
      if (rules.tokenizer != idx.tokenizer_name()) {
        fail(ErrorCode::kConfig, "rules tokenizer " + rules.tokenizer + " differs from the index tokenizer " +
                                     idx.tokenizer_name(), "--rules");
      }
    }
    const auto tok = ngram::make_tokenizer(idx.tokenizer_name());

    std::vector<segment::ExpressionSpan> expressions;
    std::vector<segment::NoveltyProfile> profiles;
    for (const auto& p : passages) {
      for (auto& e : segment::split_atomic(p, rules)) {
        auto options = o->ppl.options();
        std::vector<ngram::TokenId> prefix;
        if (o->context == "passage") {
          prefix = idx.encode(tok->tokens(std::string_view(p.text).substr(0, e.char_start)));
          options.prefix = prefix;
        }
        profiles.push_back(segment::novelty_profile(e, idx, options));
        expressions.push_back(std::move(e));
      }
    }

    const auto selection = segment::select_for_annotation(profiles, o->threshold);
    const std::set<std::string> chosen(selection.expr_ids.begin(), selection.expr_ids.end());
    for (auto& e : expressions) e.pre_highlighted = chosen.count(e.expr_id) > 0;

    // Standardization pool: pre-highlighted expressions with finite perplexity.
    std::vector<double> pool;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
      if (expressions[i].pre_highlighted && !profiles[i].ppl.infinite) pool.push_back(profiles[i].ppl.value);
    }
    io::Json standardization = {{"pool", "pre_highlighted"}, {"n", pool.size()}, {"mean", nullptr}, {"sd", nullptr}};
    if (pool.size() >= 2) {
      const auto z = stats::log_standardize(pool);
      standardization["mean"] = z.mean;
      standardization["sd"] = z.sd;
      for (auto& pr : profiles) {
        pr.ppl_log_std = pr.ppl.infinite ? std::nullopt : stats::apply_log_standardize(pr.ppl.value, z.mean, z.sd);
      }
    }

    std::vector<io::Json> contamination;
    std::vector<std::string> contaminated;
    for (std::size_t i = 0; i < passages.size(); ++i) {
      segment::ContaminationOptions co;
      co.samples_per_region = o->samples_per_region;
      co.gram_size = o->gram_size;
      co.seed = o->seed + i;
      const auto report = segment::contamination_check(passages[i], idx, co);
      if (!report.passed) contaminated.push_back(report.passage_id);
      contamination.push_back(segment::to_json(report));
    }

    const std::filesystem::path dir = o->out;
    std::filesystem::create_directories(dir);
    std::vector<io::Json> records;
    for (const auto& p : passages) records.push_back(segment::to_json(p));
    io::write_versioned_jsonl(dir / "passages.jsonl", "novelty.passages", annotate::kExportVersion, records);
    records.clear();
    for (const auto& e : expressions) records.push_back(annotate::expression_record(e));
    io::write_versioned_jsonl(dir / "expressions.jsonl", "novelty.expressions", annotate::kExportVersion, records);
    records.clear();
    for (const auto& pr : profiles) records.push_back(segment::to_json(pr));
    io::write_versioned_jsonl(dir / "profiles.jsonl", "novelty.profiles", annotate::kExportVersion, records);
    io::write_versioned_jsonl(dir / "contamination.jsonl", "novelty.contamination", 1, contamination);
    const io::Json sel = {{"schema", "novelty.selection"},
                          {"version", 1},
                          {"threshold", o->threshold},
                          {"n_expressions", expressions.size()},
                          {"n_selected", selection.expr_ids.size()},
                          {"share", selection.share},
                          {"expr_ids", selection.expr_ids},
                          {"standardization", standardization}};
    io::write_file(dir / "selection.json", pretty(sel));
    ctx.output_dir(dir);
    ctx.manifest_in_dir(dir);
    ctx.out << pretty({{"passages", passages.size()},
                       {"expressions", expressions.size()},
                       {"selected", selection.expr_ids.size()},
                       {"share", selection.share},
                       {"contaminated", contaminated}});
  }});
}

}  // namespace novelty::cli
