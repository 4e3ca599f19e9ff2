#include "novelty/stats/reports.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_map>

#include "novelty/stats/hypothesis.hpp"
#include "novelty/stats/standardize.hpp"
#include "novelty/util/error.hpp"

namespace novelty::stats {

std::vector<ExpressionPoint> expression_points(const ObservationTable& table, const std::string& expr_col,
                                               const std::string& ppl_col, const std::string& label_col) {
  const auto& ids = table.column(expr_col);
  const auto& ppl = table.column(ppl_col);
  const auto& label = table.column(label_col);
  if (ppl.kind != Column::Kind::kNumeric || label.kind != Column::Kind::kNumeric) {
    fail(ErrorCode::kValidation, "perplexity and label columns must be numeric", ppl_col);
  }
  auto id_at = [&](std::size_t i) -> std::optional<std::string> {
    if (ids.kind == Column::Kind::kCategorical) return ids.text[i];
    if (!ids.numeric[i]) return std::nullopt;
    return std::to_string(static_cast<long long>(*ids.numeric[i]));
  };
  std::vector<ExpressionPoint> out;
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < table.rows(); ++i) {
    const auto id = id_at(i);
    if (!id || !ppl.numeric[i]) continue;
    auto [it, fresh] = pos.emplace(*id, out.size());
    if (fresh) out.push_back({*id, *ppl.numeric[i], false});
    if (label.numeric[i] && *label.numeric[i] != 0.0) out[it->second].creative = true;
  }
  return out;
}

QuartileReport quartile_report(const std::vector<ExpressionPoint>& points) {
  if (points.empty()) fail(ErrorCode::kArgument, "no expressions for the quartile report", "data");
  QuartileReport r;
  std::vector<double> x;
  for (const auto& p : points) x.push_back(p.ppl_log_std);
  r.n_expressions = points.size();
  r.q1 = quantile7(x, 0.25);
  r.q3 = quantile7(x, 0.75);
  r.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  std::size_t top_not = 0, below = 0, lowest = 0;
  for (const auto& p : points) {
    if (p.ppl_log_std >= r.q3) {
      ++r.n_top_quartile;
      if (!p.creative) ++top_not;
    }
    if (p.creative) {
      ++r.n_creative;
      if (p.ppl_log_std < r.mean) ++below;
      if (p.ppl_log_std <= r.q1) ++lowest;
    }
  }
  auto share = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
  r.top_quartile_not_creative = share(top_not, r.n_top_quartile);
  r.creative_below_mean = share(below, r.n_creative);
  r.creative_lowest_quartile = share(lowest, r.n_creative);
  return r;
}

io::Json to_json(const QuartileReport& r) {
  return {{"schema", "novelty.quartile_report"},
          {"version", 1},
          {"n_expressions", r.n_expressions},
          {"n_creative", r.n_creative},
          {"n_top_quartile", r.n_top_quartile},
          {"q1", r.q1},
          {"q3", r.q3},
          {"mean", r.mean},
          {"top_quartile_not_creative", r.top_quartile_not_creative},
          {"creative_below_mean", r.creative_below_mean},
          {"creative_lowest_quartile", r.creative_lowest_quartile}};
}

PreferencePair preference_from_json(const io::Json& j) {
  PreferencePair p;
  p.pair_id = io::require_string(j, "pair_id");
  if (j.contains("preferred_a")) {
    p.preferred_a = j.at("preferred_a").get<bool>();
  } else {
    const auto pref = io::require_string(j, "preferred");
    if (pref != "A" && pref != "B") fail(ErrorCode::kFormat, "preferred must be \"A\" or \"B\"", "preferred");
    p.preferred_a = pref == "A";
  }
  auto num = [&](const char* key) { return io::require(j, key).get<double>(); };
  p.nov_a = num("nov_a");
  p.nov_b = num("nov_b");
  p.prag_a = num("prag_a");
  p.prag_b = num("prag_b");
  p.words_a = num("words_a");
  p.words_b = num("words_b");
  if (!(p.words_a > 0) || !(p.words_b > 0)) {
    fail(ErrorCode::kValidation, "pair " + p.pair_id + ": word counts must be positive", "words_a");
  }
  for (const auto& [key, value] : j.items()) {
    if (value.is_string() && key != "pair_id" && key != "preferred") p.groups[key] = value.get<std::string>();
  }
  return p;
}

std::vector<PreferencePair> read_preferences(const std::filesystem::path& path) {
  std::vector<PreferencePair> out;
  for (const auto& j : io::read_jsonl(path)) {
    if (!io::is_header(j)) out.push_back(preference_from_json(j));
  }
  return out;
}

PreferenceFit fit_preference_model(const std::vector<PreferencePair>& pairs, const PreferenceOptions& options) {
  if (pairs.empty()) fail(ErrorCode::kArgument, "no preference pairs", "pairs");
  PreferenceFit out;
  std::vector<std::optional<double>> y, dn, dp;
  for (const auto& p : pairs) {
    y.emplace_back(p.preferred_a ? 1.0 : 0.0);
    dn.emplace_back(p.delta_nov());
    dp.emplace_back(p.delta_prag());
  }
  ObservationTable t;
  t.add_numeric("preferred_a", y);
  std::vector<std::string> terms;
  for (auto [name, values] : {std::pair{std::string("delta_nov"), &dn}, std::pair{std::string("delta_prag"), &dp}}) {
    double mean = 0.0;
    for (const auto& v : *values) mean += *v;
    mean /= static_cast<double>(values->size());
    double ss = 0.0;
    for (const auto& v : *values) ss += (*v - mean) * (*v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(values->size()));
    bool constant = true;
    for (const auto& v : *values) constant = constant && *v == values->front();
    if (constant) {
      out.dropped.push_back(name);
      out.fit.warnings.push_back(name + " is constant and was dropped");
      continue;
    }
    if (options.standardize) {
      for (auto& v : *values) *v = (*v - mean) / sd;
      out.scaling[name] = {mean, sd};
    }
    t.add_numeric(name, *values);
    terms.push_back(name);
  }
  std::string formula = "preferred_a ~ 1";
  for (const auto& term : terms) formula += " + " + term;
  for (const auto& g : options.groups) {
    const auto f = Formula::parse("y ~ (1|" + g + ")");
    for (const auto& part : f.groups) {
      for (const auto& col : part) {
        if (t.has(col)) continue;
        std::vector<std::optional<std::string>> ids;
        for (const auto& p : pairs) {
          auto it = p.groups.find(col);
          if (it == p.groups.end()) fail(ErrorCode::kValidation, "pair " + p.pair_id + " lacks group '" + col + "'", col);
          ids.emplace_back(it->second);
        }
        t.add_categorical(col, ids);
      }
    }
    formula += " + (1|" + g + ")";
  }
  auto warnings = out.fit.warnings;
  out.fit = fit_glmm(t, formula, options.fit);
  out.fit.warnings.insert(out.fit.warnings.begin(), warnings.begin(), warnings.end());
  out.formula = formula;
  return out;
}

io::Json to_json(const PreferenceFit& f) {
  io::Json j = to_json(f.fit);
  j["dropped"] = f.dropped;
  io::Json scaling = io::Json::object();
  for (const auto& [name, ms] : f.scaling) scaling[name] = {{"mean", ms.first}, {"sd", ms.second}};
  j["scaling"] = scaling;
  return j;
}

std::vector<CurvePoint> predicted_curves(const ModelFit& fit, const std::string& covariate, const std::string& factor,
                                         double from, double to, std::size_t steps, double level) {
  if (steps < 2) fail(ErrorCode::kArgument, "need at least 2 grid points", "steps");
  if (fit.index_of(covariate) < 0) fail(ErrorCode::kNotFound, "no coefficient named '" + covariate + "'", "covariate");
  std::vector<std::string> levels{""};
  std::string ref;
  if (!factor.empty()) {
    auto r = fit.reference.find(factor);
    auto ls = fit.factor_levels.find(factor);
    if (r == fit.reference.end() || ls == fit.factor_levels.end()) {
      fail(ErrorCode::kNotFound, "model has no categorical term '" + factor + "'", "factor");
    }
    ref = r->second;
    levels = {ref};
    levels.insert(levels.end(), ls->second.begin(), ls->second.end());
  }
  const double z = normal_quantile(0.5 + level / 2.0);
  const Eigen::VectorXd beta = fit.beta();
  std::vector<CurvePoint> out;
  for (const auto& lvl : levels) {
    for (std::size_t s = 0; s < steps; ++s) {
      const double x = from + (to - from) * static_cast<double>(s) / static_cast<double>(steps - 1);
      Eigen::VectorXd row(beta.size());
      for (std::size_t j = 0; j < fit.fixed.size(); ++j) {
        const auto& name = fit.fixed[j].name;
        double v = 1.0;
        std::size_t start = 0;
        while (start <= name.size()) {
          auto colon = name.find(':', start);
          if (colon == std::string::npos) colon = name.size();
          const std::string part = name.substr(start, colon - start);
          if (part == "(Intercept)") {
          } else if (part == covariate) {
            v *= x;
          } else if (!factor.empty() && part.rfind(factor, 0) == 0 && part.size() > factor.size()) {
            v *= part.substr(factor.size()) == lvl ? 1.0 : 0.0;
          } else {
            v = 0.0;
          }
          start = colon + 1;
        }
        row[static_cast<Eigen::Index>(j)] = v;
      }
      CurvePoint cp;
      cp.level = factor.empty() ? "all" : lvl;
      cp.x = x;
      cp.eta = beta.dot(row);
      const double se = std::sqrt(row.dot(fit.vcov * row));
      auto logistic = [](double e) { return 1.0 / (1.0 + std::exp(-e)); };
      cp.p = logistic(cp.eta);
      cp.p_low = logistic(cp.eta - z * se);
      cp.p_high = logistic(cp.eta + z * se);
      out.push_back(cp);
    }
  }
  return out;
}

std::string curves_csv(const std::vector<CurvePoint>& points) {
  std::string out = "level,x,eta,p,p_low,p_high\n";
  char buf[256];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, ",%.10g,%.10g,%.10g,%.10g,%.10g\n", p.x, p.eta, p.p, p.p_low, p.p_high);
    out += p.level + buf;
  }
  return out;
}

}  // namespace novelty::stats
