#include "novelty/stats/formula.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "novelty/util/error.hpp"

namespace novelty::stats {

namespace {

struct Lexer {
  std::string_view s;
  std::size_t pos = 0;

  void skip() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool eat(char c) {
    skip();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  bool at_end() {
    skip();
    return pos >= s.size();
  }
  char peek() {
    skip();
    return pos < s.size() ? s[pos] : '\0';
  }
  std::string ident() {
    skip();
    const std::size_t start = pos;
    while (pos < s.size() &&
           (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_' || s[pos] == '.')) {
      ++pos;
    }
    if (start == pos) {
      fail(ErrorCode::kArgument, "formula: expected a name at offset " + std::to_string(start) + " in '" +
                                     std::string(s) + "'", "formula");
    }
    return std::string(s.substr(start, pos - start));
  }
  [[noreturn]] void error(const std::string& what) {
    fail(ErrorCode::kArgument, "formula: " + what + " at offset " + std::to_string(pos) + " in '" + std::string(s) + "'",
         "formula");
  }
};

Term interaction(Lexer& lx) {
  Term t{lx.ident()};
  while (lx.eat(':')) t.push_back(lx.ident());
  return t;
}

void add_unique(std::vector<Term>& terms, Term t) {
  if (std::find(terms.begin(), terms.end(), t) == terms.end()) terms.push_back(std::move(t));
}

}  // namespace

std::string term_name(const Term& t) {
  std::string out;
  for (std::size_t i = 0; i < t.size(); ++i) out += (i ? ":" : "") + t[i];
  return out;
}

Formula Formula::parse(std::string_view text) {
  Lexer lx{text};
  Formula f;
  f.response = lx.ident();
  if (!lx.eat('~')) lx.error("expected '~'");
  do {
    if (lx.eat('(')) {
      if (lx.ident() != "1") lx.error("only random intercepts (1|g) are supported");
      if (!lx.eat('|')) lx.error("expected '|'");
      Term nest{lx.ident()};
      for (;;) {
        if (lx.eat('/')) {
          add_unique(f.groups, nest);
          nest.push_back(lx.ident());
        } else if (lx.eat(':')) {
          nest.push_back(lx.ident());
        } else {
          break;
        }
      }
      add_unique(f.groups, nest);
      if (!lx.eat(')')) lx.error("expected ')'");
      continue;
    }
    if (lx.peek() == '-') {
      lx.eat('-');
      if (lx.ident() != "1") lx.error("only '-1' may be subtracted");
      f.intercept = false;
      continue;
    }
    std::vector<Term> factors{interaction(lx)};
    while (lx.eat('*')) factors.push_back(interaction(lx));
    if (factors.size() == 1 && factors[0].size() == 1 && (factors[0][0] == "0" || factors[0][0] == "1")) {
      f.intercept = factors[0][0] == "1";
      continue;
    }
    // a*b*c expands to every non-empty product of the factors.
    const std::size_t m = factors.size();
    std::vector<std::pair<std::size_t, Term>> expanded;
    for (std::size_t mask = 1; mask < (std::size_t{1} << m); ++mask) {
      Term t;
      for (std::size_t k = 0; k < m; ++k) {
        if (mask & (std::size_t{1} << k)) t.insert(t.end(), factors[k].begin(), factors[k].end());
      }
      expanded.emplace_back(static_cast<std::size_t>(__builtin_popcountll(mask)), std::move(t));
    }
    std::stable_sort(expanded.begin(), expanded.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [_, t] : expanded) add_unique(f.fixed, std::move(t));
  } while (lx.eat('+'));
  if (!lx.at_end()) lx.error("unexpected input");
  return f;
}

std::string Formula::to_string() const {
  std::string out = response + " ~ " + (intercept ? "1" : "0");
  for (const auto& t : fixed) out += " + " + term_name(t);
  for (const auto& g : groups) out += " + (1|" + term_name(g) + ")";
  return out;
}

int Design::column_index(const std::string& name) const {
  auto it = std::find(column_names.begin(), column_names.end(), name);
  return it == column_names.end() ? -1 : static_cast<int>(it - column_names.begin());
}

Design build_design(const ObservationTable& table, const Formula& formula, const DesignOptions& options) {
  Design d;
  const std::size_t n = table.rows();

  auto numeric_value = [&](const std::string& col, std::size_t i) {
    const auto& c = table.column(col);
    if (!c.numeric[i]) {
      fail(ErrorCode::kValidation, "missing value in column '" + col + "' at row " + std::to_string(i + 1), col);
    }
    return *c.numeric[i];
  };
  auto text_value = [&](const std::string& col, std::size_t i) -> const std::string& {
    const auto& c = table.column(col);
    if (!c.text[i]) {
      fail(ErrorCode::kValidation, "missing value in column '" + col + "' at row " + std::to_string(i + 1), col);
    }
    return *c.text[i];
  };

  const auto& resp = table.column(formula.response);
  if (resp.kind != Column::Kind::kNumeric) {
    fail(ErrorCode::kValidation, "response '" + formula.response + "' must be boolean or 0/1", formula.response);
  }
  d.y.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double v = numeric_value(formula.response, i);
    if (v != 0.0 && v != 1.0) {
      fail(ErrorCode::kValidation, "response must be 0/1 (row " + std::to_string(i + 1) + ")", formula.response);
    }
    d.y[static_cast<Eigen::Index>(i)] = v;
  }

  // Per-variable column blocks: a numeric variable is one column, a factor is
  // one indicator per non-reference level.
  struct Block {
    std::vector<std::string> names;
    std::vector<std::vector<double>> cols;
  };
  std::map<std::string, Block> blocks;
  auto block_for = [&](const std::string& var) -> const Block& {
    auto it = blocks.find(var);
    if (it != blocks.end()) return it->second;
    Block b;
    const auto& c = table.column(var);
    if (c.kind == Column::Kind::kNumeric) {
      b.names = {var};
      b.cols.emplace_back(n);
      for (std::size_t i = 0; i < n; ++i) b.cols[0][i] = numeric_value(var, i);
    } else {
      auto levels = table.levels(var);
      std::string ref;
      if (auto r = options.reference.find(var); r != options.reference.end()) {
        ref = r->second;
        if (std::find(levels.begin(), levels.end(), ref) == levels.end()) {
          fail(ErrorCode::kValidation, "reference level '" + ref + "' not present in '" + var + "'", var);
        }
      } else if (std::find(levels.begin(), levels.end(), "human") != levels.end()) {
        ref = "human";
      } else if (!levels.empty()) {
        ref = levels.front();
      }
      d.reference[var] = ref;
      std::vector<std::string> rest;
      for (const auto& l : levels) {
        if (l != ref) rest.push_back(l);
      }
      d.factor_levels[var] = rest;
      for (const auto& l : rest) {
        b.names.push_back(var + l);
        b.cols.emplace_back(n);
        for (std::size_t i = 0; i < n; ++i) b.cols.back()[i] = text_value(var, i) == l ? 1.0 : 0.0;
      }
    }
    return blocks.emplace(var, std::move(b)).first->second;
  };

  std::vector<std::string> names;
  std::vector<std::vector<double>> cols;
  if (formula.intercept) {
    names.push_back("(Intercept)");
    cols.emplace_back(n, 1.0);
  }
  for (const auto& term : formula.fixed) {
    std::vector<std::string> tn{""};
    std::vector<std::vector<double>> tc{std::vector<double>(n, 1.0)};
    for (const auto& var : term) {
      const Block& b = block_for(var);
      std::vector<std::string> nn;
      std::vector<std::vector<double>> nc;
      for (std::size_t a = 0; a < tn.size(); ++a) {
        for (std::size_t k = 0; k < b.names.size(); ++k) {
          nn.push_back(tn[a].empty() ? b.names[k] : tn[a] + ":" + b.names[k]);
          std::vector<double> col(n);
          for (std::size_t i = 0; i < n; ++i) col[i] = tc[a][i] * b.cols[k][i];
          nc.push_back(std::move(col));
        }
      }
      tn = std::move(nn);
      tc = std::move(nc);
    }
    for (std::size_t k = 0; k < tn.size(); ++k) {
      names.push_back(tn[k]);
      cols.push_back(std::move(tc[k]));
    }
  }
  d.column_names = names;
  d.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (std::size_t i = 0; i < n; ++i) d.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cols[j][i];
  }

  for (const auto& g : formula.groups) {
    GroupFactor gf;
    gf.name = term_name(g);
    std::map<std::string, int> ids;
    std::vector<std::string> keys(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::string key;
      for (std::size_t k = 0; k < g.size(); ++k) {
        const auto& c = table.column(g[k]);
        std::string part;
        if (c.kind == Column::Kind::kCategorical) {
          part = text_value(g[k], i);
        } else {
          const double v = numeric_value(g[k], i);
          part = std::to_string(static_cast<long long>(v));
        }
        key += (k ? ":" : "") + part;
      }
      ids.emplace(key, 0);
      keys[i] = std::move(key);
    }
    int next = 0;
    for (auto& [key, id] : ids) {
      id = next++;
      gf.levels.push_back(key);
    }
    if (gf.levels.size() < 2) {
      fail(ErrorCode::kValidation, "grouping factor '" + gf.name + "' needs at least 2 levels", gf.name);
    }
    gf.index.resize(n);
    for (std::size_t i = 0; i < n; ++i) gf.index[i] = ids.at(keys[i]);
    d.groups.push_back(std::move(gf));
  }
  return d;
}

}  // namespace novelty::stats
