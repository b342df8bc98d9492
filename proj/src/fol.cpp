#include "logicmp/fol.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

#include "logicmp/error.hpp"

namespace logicmp {

namespace {

struct RawLiteral {
  bool negated = false;
  std::string predicate;
  std::vector<Term> args;
  std::optional<std::vector<std::string>> labels;
  std::size_t line = 0;
  std::size_t column = 0;
};

struct RawClause {
  std::vector<RawLiteral> literals;
  std::vector<bool> flip;  // premise literals of `=>` are negated once more
};

struct RawFormula {
  std::optional<std::string> name;
  std::optional<double> weight;
  std::vector<RawClause> clauses;
  std::size_t line = 0;
};

class Cursor {
 public:
  Cursor(std::string_view text, std::size_t line) : text_(text), line_(line) {}

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }
  bool peek(std::string_view token) {
    skip_space();
    return text_.substr(pos_, token.size()) == token;
  }
  bool accept(std::string_view token) {
    if (!peek(token)) return false;
    pos_ += token.size();
    return true;
  }
  void expect(std::string_view token) {
    if (!accept(token)) fail("expected '" + std::string(token) + "'");
  }
  [[noreturn]] void fail(const std::string& message) const { throw ParseError(line_, pos_ + 1, message); }

  std::string name() {
    skip_space();
    std::size_t start = pos_;
    if (pos_ < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
      while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        ++pos_;
      }
    }
    if (start == pos_) fail("expected a name");
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string symbol(bool allow_plus) {
    skip_space();
    std::size_t start = pos_;
    if (allow_plus && pos_ < text_.size() && text_[pos_] == '+') ++pos_;
    std::size_t body = pos_;
    while (pos_ < text_.size() && is_identifier_char(text_[pos_])) ++pos_;
    if (body == pos_) {
      pos_ = start;
      fail("expected an identifier");
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  std::size_t line() const { return line_; }
  std::size_t column() const { return pos_ + 1; }
  std::size_t pos() const { return pos_; }
  void reset(std::size_t pos) { pos_ = pos; }
  std::string_view rest() const { return text_.substr(pos_); }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::string_view text_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

std::vector<std::string> braced_list(Cursor& c) {
  c.expect("{");
  std::vector<std::string> items;
  if (c.accept("}")) return items;
  do {
    items.push_back(c.symbol(false));
  } while (c.accept(","));
  c.expect("}");
  return items;
}

RawLiteral parse_literal(Cursor& c) {
  RawLiteral lit;
  c.skip_space();
  lit.line = c.line();
  lit.column = c.column();
  lit.negated = c.accept("!");
  lit.predicate = c.name();
  if (c.accept("(")) {
    if (!c.accept(")")) {
      do {
        std::string sym = c.symbol(true);
        const bool variable = sym[0] == '+' || std::islower(static_cast<unsigned char>(sym[0]));
        lit.args.push_back({variable ? Term::Kind::variable : Term::Kind::constant, sym});
      } while (c.accept(","));
      c.expect(")");
    }
  }
  // `in` must stand alone so a following name is not misread.
  std::size_t save = c.pos();
  if (c.accept("in")) {
    if (c.peek("{")) {
      lit.labels = braced_list(c);
    } else {
      c.reset(save);
    }
  }
  return lit;
}

RawClause implication_clause(std::vector<RawLiteral> premise, std::vector<RawLiteral> head) {
  RawClause clause;
  for (auto& l : premise) {
    clause.literals.push_back(std::move(l));
    clause.flip.push_back(true);
  }
  for (auto& l : head) {
    clause.literals.push_back(std::move(l));
    clause.flip.push_back(false);
  }
  return clause;
}

std::vector<RawLiteral> parse_disjunction(Cursor& c) {
  std::vector<RawLiteral> lits{parse_literal(c)};
  while (c.accept("|")) lits.push_back(parse_literal(c));
  return lits;
}

// Body of a parenthesised group: a disjunction or a full implication.
RawClause parse_group_body(Cursor& c) {
  std::vector<RawLiteral> lits{parse_literal(c)};
  if (c.peek("|")) {
    while (c.accept("|")) lits.push_back(parse_literal(c));
    if (c.peek("=>")) c.fail("premise of '=>' must be a conjunction of literals");
    return implication_clause({}, std::move(lits));
  }
  while (c.accept("&")) lits.push_back(parse_literal(c));
  if (c.accept("=>")) return implication_clause(std::move(lits), parse_disjunction(c));
  if (lits.size() > 1) c.fail("conjunction inside parentheses needs '=>'");
  return implication_clause({}, std::move(lits));
}

void parse_formula(Cursor& c, RawFormula& out) {
  struct Group {
    RawClause clause;
    bool parenthesised;
  };
  std::vector<Group> groups;
  do {
    if (c.accept("(")) {
      groups.push_back({parse_group_body(c), true});
      c.expect(")");
    } else {
      groups.push_back({implication_clause({}, parse_disjunction(c)), false});
    }
  } while (c.accept("&"));

  if (c.accept("=>")) {
    std::vector<RawLiteral> premise;
    for (auto& g : groups) {
      if (g.parenthesised || g.clause.literals.size() != 1) c.fail("premise of '=>' must be a conjunction of literals");
      premise.push_back(std::move(g.clause.literals.front()));
    }
    out.clauses.push_back(implication_clause(std::move(premise), parse_disjunction(c)));
  } else {
    for (auto& g : groups) out.clauses.push_back(std::move(g.clause));
  }
  if (!c.at_end()) c.fail("unexpected text after formula");
}

std::optional<double> parse_weight_prefix(Cursor& c) {
  c.skip_space();
  std::string_view rest = c.rest();
  double value = 0.0;
  const char* first = rest.data();
  if (!rest.empty() && rest[0] == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, rest.data() + rest.size(), value);
  if (ec != std::errc() || ptr == first) return std::nullopt;
  std::size_t consumed = static_cast<std::size_t>(ptr - rest.data());
  std::size_t save = c.pos();
  c.advance(consumed);
  if (c.accept(":")) return value;
  c.reset(save);
  return std::nullopt;
}

std::optional<std::string> parse_name_prefix(Cursor& c) {
  c.skip_space();
  std::size_t save = c.pos();
  std::string_view rest = c.rest();
  if (rest.empty() || !(std::isalpha(static_cast<unsigned char>(rest[0])) || rest[0] == '_')) return std::nullopt;
  std::string name = c.name();
  if (c.accept(":")) return name;
  c.reset(save);
  return std::nullopt;
}

Predicate parse_declaration(Cursor& c, std::set<std::string>& seen) {
  Predicate p;
  p.name = c.name();
  if (!seen.insert(p.name).second) c.fail("predicate '" + p.name + "' declared twice");
  if (c.accept("(")) {
    if (!c.accept(")")) {
      do {
        p.arg_types.push_back(c.symbol(false));
      } while (c.accept(","));
      c.expect(")");
    }
  }
  p.arity = p.arg_types.size();
  if (c.accept("labels")) {
    p.labels = braced_list(c);
    p.declared_labels = true;
    if (p.labels.size() < 2) c.fail("a predicate needs at least two labels");
    std::set<std::string> uniq(p.labels.begin(), p.labels.end());
    if (uniq.size() != p.labels.size()) c.fail("duplicate label in '" + p.name + "'");
  } else {
    p.labels = {"false", "true"};
  }
  if (!c.at_end()) c.fail("unexpected text after declaration");
  return p;
}

Literal resolve(const RawLiteral& raw, bool flip, const RuleSet& rules) {
  auto idx = rules.find_predicate(raw.predicate);
  if (!idx) throw ParseError(raw.line, raw.column, "undeclared predicate '" + raw.predicate + "'");
  const Predicate& p = rules.predicates[*idx];
  if (raw.args.size() != p.arity) {
    throw ParseError(raw.line, raw.column,
                     "predicate '" + p.name + "' expects " + std::to_string(p.arity) + " arguments, got " +
                         std::to_string(raw.args.size()));
  }
  Literal lit{*idx, raw.args, {}};
  if (raw.labels) {
    std::set<std::size_t> set;
    for (const auto& name : *raw.labels) {
      auto l = p.label_index(name);
      if (!l) throw ParseError(raw.line, raw.column, "unknown label '" + name + "' for predicate '" + p.name + "'");
      set.insert(*l);
    }
    lit.value_set.assign(set.begin(), set.end());
    if (lit.value_set.empty()) throw ParseError(raw.line, raw.column, "empty value set");
  } else {
    if (!p.is_binary()) {
      throw ParseError(raw.line, raw.column, "multi-class literal '" + p.name + "' needs 'in {...}'");
    }
    lit.value_set = {1};
  }
  if (raw.negated) lit.value_set = complement(lit.value_set, p.num_labels());
  if (flip) lit.value_set = complement(lit.value_set, p.num_labels());
  if (lit.value_set.empty()) throw ParseError(raw.line, raw.column, "empty value set");
  return lit;
}

std::vector<std::size_t> set_union(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::vector<std::size_t> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

// Merge literals over the same atom; nullopt when the clause is a tautology.
std::optional<std::vector<Literal>> canonical_literals(std::vector<Literal> lits, const RuleSet& rules) {
  std::vector<Literal> merged;
  for (auto& l : lits) {
    auto it = std::find_if(merged.begin(), merged.end(),
                           [&](const Literal& m) { return m.predicate == l.predicate && m.args == l.args; });
    if (it == merged.end()) {
      merged.push_back(std::move(l));
    } else {
      it->value_set = set_union(it->value_set, l.value_set);
    }
  }
  for (const auto& l : merged) {
    if (l.value_set.size() >= rules.predicates[l.predicate].num_labels()) return std::nullopt;
  }
  return merged;
}

void format_weight(std::string& out, double w) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, w);
  (void)ec;
  out.append(buf, ptr);
}

}  // namespace

bool is_identifier_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
}

std::optional<std::size_t> Predicate::label_index(std::string_view label) const {
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] == label) return k;
  }
  return std::nullopt;
}

std::optional<std::size_t> RuleSet::find_predicate(std::string_view name) const {
  for (std::size_t k = 0; k < predicates.size(); ++k) {
    if (predicates[k].name == name) return k;
  }
  return std::nullopt;
}

std::vector<std::size_t> complement(const std::vector<std::size_t>& value_set, std::size_t num_labels) {
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < num_labels; ++v) {
    if (!std::binary_search(value_set.begin(), value_set.end(), v)) out.push_back(v);
  }
  return out;
}

RuleSet parse_rules(std::string_view text) {
  RuleSet rules;
  std::vector<std::pair<std::string_view, std::size_t>> formula_lines;
  std::set<std::string> declared;

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    Cursor c(line, line_no);
    if (c.at_end()) continue;
    std::size_t save = c.pos();
    if (c.accept("predicate") && (c.pos() == line.size() || std::isspace(static_cast<unsigned char>(line[c.pos()])))) {
      rules.predicates.push_back(parse_declaration(c, declared));
    } else {
      c.reset(save);
      formula_lines.emplace_back(line, line_no);
    }
    if (end == text.size()) break;
  }

  std::set<std::string> names;
  std::size_t ordinal = 0;
  for (auto [line, no] : formula_lines) {
    ++ordinal;
    Cursor c(line, no);
    RawFormula raw;
    raw.line = no;
    raw.name = parse_name_prefix(c);
    raw.weight = parse_weight_prefix(c);
    parse_formula(c, raw);

    CnfFormula f;
    f.explicit_name = raw.name.has_value();
    f.explicit_weight = raw.weight.has_value();
    f.name = raw.name.value_or("f" + std::to_string(ordinal));
    f.weight = raw.weight.value_or(1.0);
    if (!names.insert(f.name).second) throw ParseError(no, 1, "formula name '" + f.name + "' used twice");

    std::vector<std::vector<Literal>> kept;
    for (const auto& rc : raw.clauses) {
      std::vector<Literal> lits;
      for (std::size_t k = 0; k < rc.literals.size(); ++k) lits.push_back(resolve(rc.literals[k], rc.flip[k], rules));
      auto canon = canonical_literals(std::move(lits), rules);
      if (!canon) {
        rules.warnings.push_back("line " + std::to_string(no) + ": tautological clause in '" + f.name + "' dropped");
        continue;
      }
      auto sorted = *canon;
      std::sort(sorted.begin(), sorted.end());
      bool duplicate = std::any_of(kept.begin(), kept.end(), [&](const std::vector<Literal>& k) {
        auto s = k;
        std::sort(s.begin(), s.end());
        return s == sorted;
      });
      if (duplicate) {
        rules.warnings.push_back("line " + std::to_string(no) + ": duplicate clause in '" + f.name + "' dropped");
        continue;
      }
      kept.push_back(std::move(*canon));
    }
    if (kept.empty()) {
      rules.warnings.push_back("line " + std::to_string(no) + ": formula '" + f.name + "' has no clauses left");
      continue;
    }
    for (std::size_t k = 0; k < kept.size(); ++k) {
      Clause cl;
      cl.id = kept.size() == 1 ? f.name : f.name + "." + std::to_string(k + 1);
      cl.weight = f.weight;
      cl.literals = std::move(kept[k]);
      f.clauses.push_back(std::move(cl));
    }
    rules.formulas.push_back(std::move(f));
  }
  return rules;
}

std::vector<Implication> to_implications(const Clause& clause, const std::vector<Predicate>& predicates) {
  std::vector<Implication> out;
  for (std::size_t h = 0; h < clause.literals.size(); ++h) {
    Implication imp;
    imp.clause_id = clause.id;
    imp.weight = clause.weight;
    imp.hypothesis_index = h;
    imp.hypothesis = clause.literals[h];
    for (std::size_t j = 0; j < clause.literals.size(); ++j) {
      if (j == h) continue;
      Literal p = clause.literals[j];
      p.value_set = complement(p.value_set, predicates.at(p.predicate).num_labels());
      imp.premise.push_back(std::move(p));
    }
    out.push_back(std::move(imp));
  }
  return out;
}

std::vector<Clause> split_cnf(const CnfFormula& formula) {
  std::vector<Clause> out = formula.clauses;
  for (auto& c : out) c.weight = formula.weight;
  return out;
}

std::string print_literal(const Literal& literal, const std::vector<Predicate>& predicates) {
  const Predicate& p = predicates.at(literal.predicate);
  std::string out;
  const bool plain = p.is_binary() && literal.value_set.size() == 1;
  if (plain && literal.value_set.front() == 0) out += "!";
  out += p.name;
  if (!literal.args.empty()) {
    out += "(";
    for (std::size_t k = 0; k < literal.args.size(); ++k) {
      if (k) out += ",";
      out += literal.args[k].symbol;
    }
    out += ")";
  }
  if (!plain) {
    out += " in {";
    for (std::size_t k = 0; k < literal.value_set.size(); ++k) {
      if (k) out += ",";
      out += p.labels.at(literal.value_set[k]);
    }
    out += "}";
  }
  return out;
}

std::string print_clause(const Clause& clause, const std::vector<Predicate>& predicates) {
  std::string out;
  for (std::size_t k = 0; k < clause.literals.size(); ++k) {
    if (k) out += " | ";
    out += print_literal(clause.literals[k], predicates);
  }
  return out;
}

std::string print_rules(const RuleSet& rules) {
  std::string out;
  for (const auto& p : rules.predicates) {
    out += "predicate " + p.name;
    if (!p.arg_types.empty()) {
      out += "(";
      for (std::size_t k = 0; k < p.arg_types.size(); ++k) {
        if (k) out += ",";
        out += p.arg_types[k];
      }
      out += ")";
    }
    if (p.declared_labels) {
      out += " labels {";
      for (std::size_t k = 0; k < p.labels.size(); ++k) {
        if (k) out += ",";
        out += p.labels[k];
      }
      out += "}";
    }
    out += "\n";
  }
  for (const auto& f : rules.formulas) {
    if (f.explicit_name) out += f.name + ": ";
    if (f.explicit_weight) {
      format_weight(out, f.weight);
      out += ": ";
    }
    const bool wrap = f.clauses.size() > 1;
    for (std::size_t k = 0; k < f.clauses.size(); ++k) {
      if (k) out += " & ";
      const bool paren = wrap && f.clauses[k].literals.size() > 1;
      if (paren) out += "(";
      out += print_clause(f.clauses[k], rules.predicates);
      if (paren) out += ")";
    }
    out += "\n";
  }
  return out;
}

std::vector<std::string> rule_constants(const RuleSet& rules) {
  std::vector<std::string> out;
  for (const auto& f : rules.formulas) {
    for (const auto& c : f.clauses) {
      for (const auto& l : c.literals) {
        for (const auto& t : l.args) {
          if (!t.is_variable() && std::find(out.begin(), out.end(), t.symbol) == out.end()) out.push_back(t.symbol);
        }
      }
    }
  }
  return out;
}

std::vector<std::string> clause_variables(const Clause& clause) {
  std::vector<std::string> out;
  for (const auto& l : clause.literals) {
    for (const auto& t : l.args) {
      if (t.is_variable() && std::find(out.begin(), out.end(), t.symbol) == out.end()) out.push_back(t.symbol);
    }
  }
  return out;
}

}  // namespace logicmp
