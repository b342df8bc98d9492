#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace logicmp {

struct Predicate {
  std::string name;
  std::size_t arity = 0;
  std::vector<std::string> arg_types;
  std::vector<std::string> labels;  // size D; boolean predicates use {false, true}
  bool declared_labels = false;     // labels came from a `labels {...}` clause

  std::size_t num_labels() const { return labels.size(); }
  bool is_binary() const { return labels.size() == 2; }
  std::optional<std::size_t> label_index(std::string_view label) const;

  friend bool operator==(const Predicate&, const Predicate&) = default;
};

struct Term {
  enum class Kind { variable, constant };
  Kind kind = Kind::variable;
  std::string symbol;

  bool is_variable() const { return kind == Kind::variable; }
  friend auto operator<=>(const Term&, const Term&) = default;
};

// value_set holds sorted label indices: the clause is satisfied by this
// literal when the atom takes one of them. Binary `P(x)` is {1}, `!P(x)` is {0}.
struct Literal {
  std::size_t predicate = 0;
  std::vector<Term> args;
  std::vector<std::size_t> value_set;

  friend auto operator<=>(const Literal&, const Literal&) = default;
};

struct Clause {
  std::string id;
  double weight = 1.0;
  std::vector<Literal> literals;
};

struct CnfFormula {
  std::string name;
  double weight = 1.0;
  bool explicit_name = false;
  bool explicit_weight = false;
  std::vector<Clause> clauses;
};

// [f,h]: the premise literals carry the complemented value sets, so the
// premise holds when every premise atom takes a label from its set.
struct Implication {
  std::string clause_id;
  double weight = 1.0;
  std::size_t hypothesis_index = 0;
  Literal hypothesis;
  std::vector<Literal> premise;
};

struct RuleSet {
  std::vector<Predicate> predicates;
  std::vector<CnfFormula> formulas;
  std::vector<std::string> warnings;

  std::optional<std::size_t> find_predicate(std::string_view name) const;
};

/// Parse a rule file. Throws ParseError on syntax errors and DataError on
/// semantic ones (undeclared predicate, arity mismatch, bad value set).
RuleSet parse_rules(std::string_view text);

std::vector<Implication> to_implications(const Clause& clause, const std::vector<Predicate>& predicates);
std::vector<Clause> split_cnf(const CnfFormula& formula);

/// Canonical text; parse_rules(print_rules(r)) reproduces r.
std::string print_rules(const RuleSet& rules);
std::string print_clause(const Clause& clause, const std::vector<Predicate>& predicates);
std::string print_literal(const Literal& literal, const std::vector<Predicate>& predicates);

/// Constant symbols used in rules, in first-occurrence order.
std::vector<std::string> rule_constants(const RuleSet& rules);

/// Variables of a clause in first-occurrence order.
std::vector<std::string> clause_variables(const Clause& clause);

std::vector<std::size_t> complement(const std::vector<std::size_t>& value_set, std::size_t num_labels);

bool is_identifier_char(char c);

}  // namespace logicmp
