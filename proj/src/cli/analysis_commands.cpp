#include <map>
#include <memory>
#include <set>

#include "commands.hpp"
#include "novelty/annotate/analysis.hpp"
#include "novelty/eval/gold.hpp"
#include "novelty/eval/score.hpp"
#include "novelty/ngram/suffix_index.hpp"
#include "novelty/stats/hypothesis.hpp"
#include "novelty/stats/reports.hpp"
#include "novelty/stats/standardize.hpp"
#include "novelty/util/error.hpp"

namespace novelty::cli {
namespace {

inline constexpr const char* kDefaultFormula = "creative ~ ppl_log_std + (1|annot) + (1|seed) + (1|gen_src)";

void add_build_gold(CLI::App* group, std::vector<Command>& commands) {
  struct Opts {
    DatasetSource source;
    std::string out;
    eval::SplitConfig split;
  };
  auto o = std::make_shared<Opts>();
  auto* c = group->add_subcommand("build-gold", "Union gold sets per passage and a few-shot/finetune/eval split");
  o->source.add_options(*c);
  c->add_option("--out", o->out, "Output directory")->required();
  c->add_option("--seed", o->split.seed, "Split seed");
  c->add_option("--finetune-fraction", o->split.finetune_fraction, "Finetune share, few-shot included")
      ->check(CLI::Range(0.0, 1.0));
  c->add_option("--few-shot", o->split.few_shot, "Few-shot passages");
  c->add_flag("--include-training", o->split.include_training, "Count records from training assignments");
  commands.push_back({c, [o](Context& ctx) {
    ctx.manifest.seed = o->split.seed;
    const auto d = o->source.load(ctx);
    const auto split = eval::make_split(d, o->split);
    const std::filesystem::path dir = o->out;
    std::filesystem::create_directories(dir);
    io::Json counts = io::Json::object();
    for (auto task : {eval::Task::kNovel, eval::Task::kNonPragmatic}) {
      std::vector<io::Json> records;
      std::size_t items = 0;
      for (const auto& g : eval::build_gold(task, d, split, o->split)) {
        items += g.expressions.size();
        records.push_back(eval::to_json(g));
      }
      const auto name = std::string(eval::to_string(task));
      io::write_versioned_jsonl(dir / ("gold_" + name + ".jsonl"), "novelty.gold", 1, records);
      counts[name] = {{"passages", records.size()}, {"expressions", items}};
    }
    auto split_json = eval::to_json(split);
    split_json["schema"] = "novelty.split";
    split_json["version"] = 1;
    split_json["seed"] = o->split.seed;
    io::write_file(dir / "split.json", pretty(split_json));
    ctx.output_dir(dir);
    ctx.manifest_in_dir(dir);
    ctx.out << pretty({{"gold", counts},
                       {"few_shot", split.few_shot.size()},
                       {"finetune", split.finetune.size()},
                       {"eval", split.eval.size()}});
  }});
}

void add_score(CLI::App* group, std::vector<Command>& commands) {
  struct Opts {
    std::vector<std::string> gold, predictions;
    std::string split = "eval", mode = "many_to_one", out;
    eval::ScoreOptions score;
  };
  auto o = std::make_shared<Opts>();
  auto* c = group->add_subcommand("score", "Precision, recall and F1 of predicted expressions against gold");
  c->add_option("--gold", o->gold, "Gold files from build-gold")->required()->check(CLI::ExistingFile);
  c->add_option("--predictions", o->predictions, "Prediction record files")->required()->check(CLI::ExistingFile);
  c->add_option("--split", o->split, "Gold passages to score")
      ->check(CLI::IsMember({"eval", "finetune", "few_shot", "all", "all_but_few_shot"}));
  c->add_option("--mode", o->mode, "Counting of several predictions matching one gold item")
      ->check(CLI::IsMember({"many_to_one", "collapse"}));
  c->add_option("--ratio", o->score.ratio_threshold, "Minimum normalized edit ratio")->check(CLI::Range(0.0, 1.0));
  c->add_option("--resamples", o->score.resamples, "Bootstrap resamples");
  c->add_option("--seed", o->score.seed, "Bootstrap seed");
  c->add_option("--level", o->score.level, "Confidence level")->check(CLI::Range(0.0, 1.0));
  c->add_option("--out", o->out, "Report file");
  commands.push_back({c, [o](Context& ctx) {
    ctx.manifest.seed = o->score.seed;
    o->score.mode = eval::parse_match_mode(o->mode);
    std::map<eval::Task, std::vector<eval::GoldPassage>> gold;
    for (const auto& path : o->gold) {
      ctx.input(path);
      for (const auto& j : io::read_versioned_jsonl(path, "novelty.gold")) {
        auto g = eval::gold_from_json(j);
        gold[g.task].push_back(std::move(g));
      }
    }
    std::map<std::pair<eval::Task, std::string>, std::vector<eval::PredictionSet>> groups;
    for (const auto& path : o->predictions) {
      ctx.input(path);
      for (auto& p : eval::read_predictions(path)) groups[{p.task, p.predictor_id}].push_back(std::move(p));
    }
    std::vector<eval::EvalReport> reports;
    for (const auto& [key, sets] : groups) {
      auto it = gold.find(key.first);
      if (it == gold.end()) {
        fail(ErrorCode::kNotFound, "no gold for task " + std::string(eval::to_string(key.first)), "--gold");
      }
      const auto selected = eval::select_split(it->second, o->split);
      std::set<std::string> known, wanted;
      for (const auto& g : it->second) known.insert(g.passage_id);
      for (const auto& g : selected) wanted.insert(g.passage_id);
      // Predictions for gold passages outside the split are ignored.
      std::vector<eval::PredictionSet> kept;
      for (const auto& p : sets) {
        if (!known.count(p.passage_id)) fail(ErrorCode::kNotFound, "no gold for passage " + p.passage_id, "--predictions");
        if (wanted.count(p.passage_id)) kept.push_back(p);
      }
      reports.push_back(eval::score_predictions(kept, selected, o->score));
    }
    io::Json list = io::Json::array();
    for (const auto& r : reports) list.push_back(eval::to_json(r));
    const io::Json doc = {{"schema", "novelty.eval_reports"}, {"version", 1}, {"split", o->split}, {"reports", list}};
    if (!o->out.empty()) {
      io::write_file(o->out, pretty(doc));
      ctx.output(o->out);
      ctx.manifest_beside(o->out);
    }
    ctx.out << eval::format_table(reports);
  }});
}

// Observation rows for the regression: one per creative label.
void add_table(CLI::App* group, std::vector<Command>& commands) {
  struct Opts {
    DatasetSource source;
    std::string index, out, context = "none", floor = "epsilon", history = "full";
    bool include_training = false;
    bool no_augment = false;
  };
  auto o = std::make_shared<Opts>();
  auto* c = group->add_subcommand("table", "Observation table of creative labels with standardized perplexity");
  o->source.add_options(*c);
  c->add_option("--index", o->index, "Index for scoring highlight-derived expressions")->check(CLI::ExistingFile);
  c->add_option("--out", o->out, "Output .jsonl")->required();
  c->add_option("--context", o->context, "Perplexity conditioning for highlights")
      ->check(CLI::IsMember({"none", "passage"}));
  c->add_option("--floor", o->floor, "Zero-probability handling")->check(CLI::IsMember({"epsilon", "flag"}));
  c->add_option("--history", o->history, "Conditioning history")->check(CLI::IsMember({"full", "bigram"}));
  c->add_flag("--include-training", o->include_training, "Keep records from training assignments");
  c->add_flag("--no-augment", o->no_augment, "Skip the false rows for non-highlighters");
  commands.push_back({c, [o](Context& ctx) {
    const auto all = o->source.load(ctx);
    const auto d = o->include_training ? all : annotate::counted_records(all);

    std::map<std::string, const segment::Passage*> passages;
    for (const auto& p : d.passages) passages[p.passage_id] = &p;
    std::map<std::string, const segment::ExpressionSpan*> exprs;
    for (const auto& e : d.expressions) exprs[e.expr_id] = &e;
    std::map<std::string, const segment::NoveltyProfile*> profiles;
    for (const auto& p : d.profiles) profiles[p.expr_id] = &p;
    std::map<std::string, annotate::CreativeExpression> derived;
    for (auto& e : annotate::dedup_highlights(d).expressions) {
      if (e.from_highlight) derived[e.expr_id] = e;
    }

    std::vector<double> pool;
    for (const auto& e : d.expressions) {
      auto it = profiles.find(e.expr_id);
      if (e.pre_highlighted && it != profiles.end() && !it->second->ppl.infinite) pool.push_back(it->second->ppl.value);
    }
    std::optional<stats::Standardized> z;
    if (pool.size() >= 2) z = stats::log_standardize(pool);

    std::optional<ngram::SuffixIndex> idx;
    if (!o->index.empty()) {
      ctx.input(o->index);
      idx = ngram::SuffixIndex::load(o->index);
    }
    ngram::PerplexityOptions ppl_options;
    ppl_options.floor = ngram::parse_floor_policy(o->floor);
    ppl_options.history = ngram::parse_history_mode(o->history);

    std::map<std::string, std::optional<double>> cache;
    auto ppl_of = [&](const std::string& expr_id) -> std::optional<double> {
      if (auto it = cache.find(expr_id); it != cache.end()) return it->second;
      std::optional<double> v;
      if (auto it = profiles.find(expr_id); it != profiles.end()) {
        v = it->second->ppl_log_std;
      } else if (auto dit = derived.find(expr_id); dit != derived.end() && idx && z) {
        const auto tok = ngram::make_tokenizer(idx->tokenizer_name());
        const auto ids = idx->encode(tok->tokens(dit->second.text));
        std::vector<ngram::TokenId> prefix;
        auto options = ppl_options;
        if (o->context == "passage") {
          const auto& text = passages.at(dit->second.passage_id)->text;
          prefix = idx->encode(tok->tokens(std::string_view(text).substr(0, dit->second.char_start)));
          options.prefix = prefix;
        }
        if (!ids.empty()) {
          const auto r = idx->perplexity(ids, options);
          if (!r.infinite) v = stats::apply_log_standardize(r.value, z->mean, z->sd);
        }
      }
      cache[expr_id] = v;
      return v;
    };

    std::vector<io::Json> rows;
    std::size_t missing = 0;
    for (const auto& l : annotate::creative_labels(d, !o->no_augment)) {
      std::string passage_id;
      if (auto it = exprs.find(l.expr_id); it != exprs.end()) {
        passage_id = it->second->passage_id;
      } else {
        passage_id = derived.at(l.expr_id).passage_id;
      }
      const auto* p = passages.at(passage_id);
      const auto ppl = ppl_of(l.expr_id);
      missing += ppl ? 0 : 1;
      rows.push_back({{"expr_id", l.expr_id},
                      {"passage_id", passage_id},
                      {"annot", l.annotator_id},
                      {"seed", p->seed_passage_id},
                      {"gen_src", p->source},
                      {"source", annotate::to_string(l.source)},
                      {"creative", l.creative},
                      {"ppl_log_std", ppl ? io::Json(*ppl) : io::Json(nullptr)}});
    }
    io::write_versioned_jsonl(o->out, "novelty.observations", 1, rows);
    ctx.output(o->out);
    ctx.manifest_beside(o->out);
    ctx.out << pretty({{"rows", rows.size()}, {"missing_ppl", missing}});
  }});
}

stats::ObservationTable drop_missing(const stats::ObservationTable& table, const stats::Formula& f,
                                     std::size_t& dropped) {
  std::set<std::string> used = {f.response};
  for (const auto& t : f.fixed) used.insert(t.begin(), t.end());
  for (const auto& t : f.groups) used.insert(t.begin(), t.end());
  std::vector<io::Json> kept;
  dropped = 0;
  for (auto& r : table.to_records()) {
    bool complete = true;
    for (const auto& name : used) {
      if (r.contains(name) && r.at(name).is_null()) complete = false;
    }
    if (complete) {
      kept.push_back(std::move(r));
    } else {
      ++dropped;
    }
  }
  return stats::ObservationTable::from_records(kept);
}

void add_fit(CLI::App* group, std::vector<Command>& commands) {
  struct Opts {
    std::string data, formula = kDefaultFormula, out, curves, curves_by, curves_out;
    std::vector<std::string> reference, contrasts, hypotheses;
    bool keep_missing = false;
    double curve_from = -2.0, curve_to = 2.0;
    std::size_t curve_steps = 41;
    stats::FitOptions fit;
  };
  auto o = std::make_shared<Opts>();
  auto* c = group->add_subcommand("fit", "Varying-intercept logistic regression");
  c->add_option("--data", o->data, "Observation table (.jsonl or .csv)")->required()->check(CLI::ExistingFile);
  c->add_option("--formula", o->formula, "Model formula");
  c->add_option("--out", o->out, "Fit record")->required();
  c->add_option("--reference", o->reference, "Reference level as column=level");
  c->add_flag("--fixed-only", o->fit.fixed_only, "Ignore the grouping factors");
  c->add_flag("--keep-missing", o->keep_missing, "Fail on rows with missing model values instead of dropping them");
  c->add_option("--contrast", o->contrasts, "Factor whose levels are compared with its reference");
  c->add_option("--hypothesis", o->hypotheses, "Linear combination of coefficients, e.g. \"a - b\"");
  c->add_option("--max-iterations", o->fit.max_iterations, "Optimizer iteration limit");
  c->add_option("--tolerance", o->fit.gradient_tolerance, "Gradient norm tolerance");
  c->add_option("--curves", o->curves, "Covariate for predicted-probability curves");
  c->add_option("--curves-by", o->curves_by, "Factor giving one curve per level");
  c->add_option("--curves-out", o->curves_out, "CSV for the curves");
  c->add_option("--curves-from", o->curve_from, "Curve start");
  c->add_option("--curves-to", o->curve_to, "Curve end");
  c->add_option("--curves-steps", o->curve_steps, "Points per curve");
  commands.push_back({c, [o](Context& ctx) {
    ctx.input(o->data);
    const auto formula = stats::Formula::parse(o->formula);
    auto table = stats::ObservationTable::read(o->data);
    std::size_t dropped = 0;
    if (!o->keep_missing) table = drop_missing(table, formula, dropped);
    stats::DesignOptions design;
    for (const auto& r : o->reference) {
      const auto eq = r.find('=');
      if (eq == std::string::npos || eq == 0) fail(ErrorCode::kArgument, "expected column=level, got " + r, "--reference");
      design.reference[r.substr(0, eq)] = r.substr(eq + 1);
    }
    const auto fit = stats::fit_glmm(table, o->formula, o->fit, design);
    auto j = stats::to_json(fit);
    j["dropped_rows"] = dropped;
    if (!o->contrasts.empty()) {
      io::Json cs = io::Json::object();
      for (const auto& factor : o->contrasts) {
        io::Json rows = io::Json::array();
        for (const auto& sc : stats::source_contrasts(fit, factor)) rows.push_back(stats::to_json(sc));
        cs[factor] = rows;
      }
      j["contrasts"] = cs;
    }
    if (!o->hypotheses.empty()) {
      io::Json hs = io::Json::object();
      for (const auto& h : o->hypotheses) hs[h] = stats::to_json(stats::linear_hypothesis(fit, stats::parse_contrast(fit, h)));
      j["hypotheses"] = hs;
    }
    io::write_file(o->out, pretty(j));
    ctx.output(o->out);
    if (!o->curves.empty()) {
      const auto points = stats::predicted_curves(fit, o->curves, o->curves_by, o->curve_from, o->curve_to, o->curve_steps);
      const std::string path = o->curves_out.empty() ? o->out + ".curves.csv" : o->curves_out;
      io::write_file(path, stats::curves_csv(points));
      ctx.output(path);
    }
    ctx.manifest_beside(o->out);
    io::Json summary = io::Json::array();
    for (const auto& fe : fit.fixed) {
      summary.push_back({{"term", fe.name}, {"estimate", fe.estimate}, {"se", fe.se}, {"odds_ratio", fe.odds_ratio()}, {"p", fe.p}});
    }
    ctx.out << pretty({{"converged", fit.converged}, {"n_obs", fit.n_obs}, {"dropped_rows", dropped}, {"fixed", summary}});
  }});
}

void add_quartiles(CLI::App* group, std::vector<Command>& commands) {
  struct Opts {
    std::string data, expr_col = "expr_id", ppl_col = "ppl_log_std", label_col = "creative", out;
  };
  auto o = std::make_shared<Opts>();
  auto* c = group->add_subcommand("quartiles", "Perplexity quartiles against creativity judgments");
  c->add_option("--data", o->data, "Observation table")->required()->check(CLI::ExistingFile);
  c->add_option("--expr-col", o->expr_col, "Expression id column");
  c->add_option("--ppl-col", o->ppl_col, "Standardized perplexity column");
  c->add_option("--label-col", o->label_col, "Creative label column");
  c->add_option("--out", o->out, "Also write the report here");
  commands.push_back({c, [o](Context& ctx) {
    ctx.input(o->data);
    const auto table = stats::ObservationTable::read(o->data);
    const auto report =
        stats::to_json(stats::quartile_report(stats::expression_points(table, o->expr_col, o->ppl_col, o->label_col)));
    if (!o->out.empty()) {
      io::write_file(o->out, pretty(report));
      ctx.output(o->out);
      ctx.manifest_beside(o->out);
    }
    ctx.out << pretty(report);
  }});
}

void add_prefs(CLI::App* group, std::vector<Command>& commands) {
  struct Opts {
    std::string pairs, out;
    std::vector<std::string> groups;
    bool raw = false;
    stats::FitOptions fit;
  };
  auto o = std::make_shared<Opts>();
  auto* c = group->add_subcommand("prefs", "Preference model on per-word novelty and pragmaticality deltas");
  c->add_option("--pairs", o->pairs, "Preference pair records")->required()->check(CLI::ExistingFile);
  c->add_option("--group", o->groups, "Random-intercept term; default every grouping id present on all pairs");
  c->add_flag("--raw", o->raw, "Fit on unstandardized deltas");
  c->add_flag("--fixed-only", o->fit.fixed_only, "Ignore the grouping factors");
  c->add_option("--out", o->out, "Fit record");
  commands.push_back({c, [o](Context& ctx) {
    ctx.input(o->pairs);
    const auto pairs = stats::read_preferences(o->pairs);
    stats::PreferenceOptions options;
    options.standardize = !o->raw;
    options.fit = o->fit;
    options.groups = o->groups;
    if (options.groups.empty() && !pairs.empty()) {
      for (const auto& [name, value] : pairs.front().groups) {
        bool everywhere = true;
        for (const auto& p : pairs) everywhere = everywhere && p.groups.count(name) > 0;
        if (everywhere) options.groups.push_back(name);
      }
    }
    const auto j = stats::to_json(stats::fit_preference_model(pairs, options));
    if (!o->out.empty()) {
      io::write_file(o->out, pretty(j));
      ctx.output(o->out);
      ctx.manifest_beside(o->out);
    }
    ctx.out << pretty(j);
  }});
}

}  // namespace

void add_eval_commands(CLI::App& root, std::vector<Command>& commands) {
  auto* group = root.add_subcommand("eval", "Gold construction and prediction scoring");
  group->require_subcommand(1);
  add_build_gold(group, commands);
  add_score(group, commands);
}

void add_stats_commands(CLI::App& root, std::vector<Command>& commands) {
  auto* group = root.add_subcommand("stats", "Regression, quartile and preference analyses");
  group->require_subcommand(1);
  add_table(group, commands);
  add_fit(group, commands);
  add_quartiles(group, commands);
  add_prefs(group, commands);
}

}  // namespace novelty::cli
