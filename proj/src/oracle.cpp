#include "logicmp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>

#include "logicmp/error.hpp"

namespace logicmp::oracle {

namespace {

double formula_weight(const CnfFormula& f, const std::map<std::string, double>& overrides) {
  auto it = overrides.find(f.name);
  return it == overrides.end() ? f.weight : it->second;
}

bool contains(const std::vector<std::size_t>& set, std::size_t v) {
  return std::find(set.begin(), set.end(), v) != set.end();
}

bool tautological(const Clause& clause, const Grounding& g, const std::vector<Predicate>& preds) {
  std::map<GroundAtom, std::set<std::size_t>> cover;
  for (std::size_t j = 0; j < clause.literals.size(); ++j) {
    auto& s = cover[g.atoms[j]];
    s.insert(clause.literals[j].value_set.begin(), clause.literals[j].value_set.end());
    if (s.size() == preds[g.atoms[j].predicate].num_labels()) return true;
  }
  return false;
}

std::vector<double> row(const MarginalTable& q, const KnowledgeBase& kb, const GroundAtom& atom) {
  const DenseTensor& t = q[atom.predicate];
  const std::size_t d = t.extent(t.rank() - 1);
  const std::size_t cell = kb.cell_index(atom);
  std::vector<double> out(d);
  for (std::size_t v = 0; v < d; ++v) out[v] = t[cell * d + v];
  return out;
}

// Advance a mixed-radix counter; false once it wraps to all zeros.
bool next_assignment(std::vector<std::size_t>& digits, const std::vector<std::size_t>& radix) {
  for (std::size_t k = digits.size(); k-- > 0;) {
    if (++digits[k] < radix[k]) return true;
    digits[k] = 0;
  }
  return false;
}

// Strict message: distinct ground atoms, the clause indicator evaluated on
// the joint assignment, one contribution per grounding.
void strict_messages(const Clause& clause, const Grounding& g, const MarginalTable& q, const KnowledgeBase& kb,
                     double w, const std::function<void(const GroundAtom&, std::size_t, double)>& add) {
  std::vector<GroundAtom> atoms;
  for (const auto& a : g.atoms) {
    if (std::find(atoms.begin(), atoms.end(), a) == atoms.end()) atoms.push_back(a);
  }
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> radix;
  for (const auto& a : atoms) {
    rows.push_back(row(q, kb, a));
    radix.push_back(rows.back().size());
  }
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (kb.observed_label(atoms[i])) continue;
    for (std::size_t x = 0; x < radix[i]; ++x) {
      double total = 0.0;
      std::vector<std::size_t> values(atoms.size(), 0);
      do {
        if (values[i] != x) continue;
        double prob = 1.0;
        for (std::size_t k = 0; k < atoms.size(); ++k) {
          if (k != i) prob *= rows[k][values[k]];
        }
        bool sat = false;
        for (std::size_t j = 0; j < clause.literals.size(); ++j) {
          const std::size_t k =
              static_cast<std::size_t>(std::find(atoms.begin(), atoms.end(), g.atoms[j]) - atoms.begin());
          if (contains(clause.literals[j].value_set, values[k])) sat = true;
        }
        if (sat) total += prob;
      } while (next_assignment(values, radix));
      add(atoms[i], x, w * total);
    }
  }
}

}  // namespace

std::vector<Grounding> enumerate_groundings(const Clause& clause, const KnowledgeBase& kb, std::size_t limit) {
  const auto vars = clause_variables(clause);
  const std::size_t n = kb.num_entities();
  double count = std::pow(static_cast<double>(n), static_cast<double>(vars.size()));
  if (count > static_cast<double>(limit)) {
    throw LimitExceeded("clause '" + clause.id + "' has " + std::to_string(static_cast<long long>(count)) +
                        " groundings, limit " + std::to_string(limit));
  }
  std::vector<Grounding> out;
  std::vector<std::size_t> assignment(vars.size(), 0);
  std::vector<std::size_t> radix(vars.size(), n);
  do {
    Grounding g{clause.id, assignment, {}};
    for (const auto& lit : clause.literals) {
      GroundAtom atom{lit.predicate, {}};
      for (const auto& t : lit.args) {
        if (t.is_variable()) {
          const auto pos = std::find(vars.begin(), vars.end(), t.symbol) - vars.begin();
          atom.args.push_back(assignment[static_cast<std::size_t>(pos)]);
        } else {
          auto e = kb.entity_index(t.symbol);
          if (!e) throw DataError("rule constant '" + t.symbol + "' is not in the entity domain");
          atom.args.push_back(*e);
        }
      }
      g.atoms.push_back(std::move(atom));
    }
    out.push_back(std::move(g));
  } while (next_assignment(assignment, radix));
  return out;
}

std::vector<double> grounding_message_full(const std::vector<std::vector<std::size_t>>& value_sets,
                                           const std::vector<std::vector<double>>& marginals, std::size_t h) {
  const std::size_t L = value_sets.size();
  std::vector<std::size_t> radix;
  for (const auto& m : marginals) radix.push_back(m.size());
  std::vector<double> out(radix[h], 0.0);
  for (std::size_t x = 0; x < radix[h]; ++x) {
    std::vector<std::size_t> values(L, 0);
    do {
      if (values[h] != x) continue;
      double prob = 1.0;
      bool sat = false;
      for (std::size_t j = 0; j < L; ++j) {
        if (contains(value_sets[j], values[j])) sat = true;
        if (j != h) prob *= marginals[j][values[j]];
      }
      if (sat) out[x] += prob;
    } while (next_assignment(values, radix));
  }
  return out;
}

std::vector<double> grounding_message_simplified(const std::vector<std::vector<std::size_t>>& value_sets,
                                                 const std::vector<std::vector<double>>& marginals, std::size_t h) {
  double premise = 1.0;
  for (std::size_t j = 0; j < value_sets.size(); ++j) {
    if (j == h) continue;
    double in_clause = 0.0;
    for (auto v : value_sets[j]) in_clause += marginals[j][v];
    premise *= 1.0 - in_clause;
  }
  std::vector<double> out(marginals[h].size(), 0.0);
  for (auto v : value_sets[h]) out[v] = premise;
  return out;
}

MarginalTable naive_mf_step(const MarginalTable& q, const UnaryTable& phi, const RuleSet& rules,
                            const KnowledgeBase& kb, const Options& options) {
  const auto& preds = kb.predicates();
  std::vector<std::vector<double>> logits;
  for (const auto& t : phi.tensors) logits.emplace_back(t.data().begin(), t.data().end());
  auto add = [&](const GroundAtom& atom, std::size_t label, double value) {
    logits[atom.predicate][kb.cell_index(atom) * preds[atom.predicate].num_labels() + label] += value;
  };

  std::size_t budget = 0;
  for (const auto& f : rules.formulas) {
    const double w = formula_weight(f, options.weight_overrides);
    for (const auto& clause : split_cnf(f)) {
      const auto groundings = enumerate_groundings(clause, kb);
      budget += groundings.size() * clause.literals.size();
      if (budget > options.message_limit) {
        throw LimitExceeded("naive mean-field step exceeds " + std::to_string(options.message_limit) +
                            " grounding messages");
      }
      std::vector<std::vector<std::size_t>> value_sets;
      for (const auto& lit : clause.literals) value_sets.push_back(lit.value_set);
      for (const auto& g : groundings) {
        if (options.skip_tautological_groundings && tautological(clause, g, preds)) continue;
        if (options.mode == GroundingMode::strict) {
          strict_messages(clause, g, q, kb, w, add);
          continue;
        }
        std::vector<std::vector<double>> rows;
        for (const auto& a : g.atoms) rows.push_back(row(q, kb, a));
        for (std::size_t h = 0; h < clause.literals.size(); ++h) {
          if (kb.observed_label(g.atoms[h])) continue;
          const auto msg = options.premise_product ? grounding_message_simplified(value_sets, rows, h)
                                                    : grounding_message_full(value_sets, rows, h);
          for (std::size_t x = 0; x < msg.size(); ++x) add(g.atoms[h], x, w * msg[x]);
        }
      }
    }
  }

  MarginalTable out;
  for (std::size_t r = 0; r < preds.size(); ++r) {
    const std::size_t d = preds[r].num_labels();
    DenseTensor t(q[r].shape(), 0.0);
    for (std::size_t c = 0; c < kb.num_cells(r); ++c) {
      const GroundAtom atom = kb.cell_atom(r, c);
      if (auto obs = kb.observed_label(atom)) {
        t[c * d + *obs] = 1.0;
        continue;
      }
      double m = logits[r][c * d];
      for (std::size_t v = 1; v < d; ++v) m = std::max(m, logits[r][c * d + v]);
      double z = 0.0;
      for (std::size_t v = 0; v < d; ++v) z += std::exp(logits[r][c * d + v] - m);
      for (std::size_t v = 0; v < d; ++v) t[c * d + v] = std::exp(logits[r][c * d + v] - m) / z;
    }
    out.tensors.push_back(std::move(t));
  }
  return out;
}

MarginalTable exact_marginals(const KnowledgeBase& kb, const RuleSet& rules, const UnaryTable& phi,
                              const std::map<std::string, double>& weight_overrides, std::size_t max_bits) {
  const auto& preds = kb.predicates();
  std::vector<std::vector<std::size_t>> world;  // label per cell
  std::vector<GroundAtom> free_atoms;
  std::vector<std::size_t> radix;
  double log2_worlds = 0.0;
  for (std::size_t r = 0; r < preds.size(); ++r) {
    world.emplace_back(kb.num_cells(r), 0);
    for (std::size_t c = 0; c < kb.num_cells(r); ++c) {
      const GroundAtom atom = kb.cell_atom(r, c);
      if (auto obs = kb.observed_label(atom)) {
        world[r][c] = *obs;
      } else {
        free_atoms.push_back(atom);
        radix.push_back(preds[r].num_labels());
        log2_worlds += std::log2(static_cast<double>(preds[r].num_labels()));
      }
    }
  }
  if (log2_worlds > static_cast<double>(max_bits) + 1e-9) {
    throw LimitExceeded("exact enumeration needs 2^" + std::to_string(log2_worlds) + " worlds, limit 2^" +
                        std::to_string(max_bits));
  }

  struct Ground {
    double weight;
    std::vector<std::pair<std::size_t, std::size_t>> cells;  // (predicate, cell)
    const std::vector<Literal>* literals;
  };
  std::vector<Ground> grounds;
  std::vector<std::vector<Literal>> clause_literals;
  std::vector<std::pair<double, std::vector<Grounding>>> per_clause;
  for (const auto& f : rules.formulas) {
    const double w = formula_weight(f, weight_overrides);
    for (const auto& clause : split_cnf(f)) {
      per_clause.emplace_back(w, enumerate_groundings(clause, kb));
      clause_literals.push_back(clause.literals);
    }
  }
  for (std::size_t k = 0; k < per_clause.size(); ++k) {
    for (const auto& g : per_clause[k].second) {
      Ground gr{per_clause[k].first, {}, &clause_literals[k]};
      for (const auto& a : g.atoms) gr.cells.emplace_back(a.predicate, kb.cell_index(a));
      grounds.push_back(std::move(gr));
    }
  }

  std::vector<double> scores;
  std::vector<std::size_t> values(free_atoms.size(), 0);
  auto apply = [&]() {
    for (std::size_t i = 0; i < free_atoms.size(); ++i) {
      world[free_atoms[i].predicate][kb.cell_index(free_atoms[i])] = values[i];
    }
  };
  auto score = [&]() {
    double s = 0.0;
    for (std::size_t r = 0; r < preds.size(); ++r) {
      const std::size_t d = preds[r].num_labels();
      for (std::size_t c = 0; c < world[r].size(); ++c) s += phi[r][c * d + world[r][c]];
    }
    for (const auto& g : grounds) {
      bool sat = false;
      for (std::size_t j = 0; j < g.cells.size() && !sat; ++j) {
        sat = contains((*g.literals)[j].value_set, world[g.cells[j].first][g.cells[j].second]);
      }
      if (sat) s += g.weight;
    }
    return s;
  };
  do {
    apply();
    scores.push_back(score());
  } while (next_assignment(values, radix));

  const double top = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double s : scores) z += std::exp(s - top);

  std::vector<std::vector<double>> acc(free_atoms.size());
  for (std::size_t i = 0; i < free_atoms.size(); ++i) acc[i].assign(radix[i], 0.0);
  std::fill(values.begin(), values.end(), 0);
  std::size_t idx = 0;
  do {
    const double p = std::exp(scores[idx++] - top) / z;
    for (std::size_t i = 0; i < free_atoms.size(); ++i) acc[i][values[i]] += p;
  } while (next_assignment(values, radix));

  MarginalTable out;
  for (std::size_t r = 0; r < preds.size(); ++r) {
    const std::size_t d = preds[r].num_labels();
    DenseTensor t(phi[r].shape(), 0.0);
    for (std::size_t c = 0; c < world[r].size(); ++c) {
      if (auto obs = kb.observed_label(kb.cell_atom(r, c))) t[c * d + *obs] = 1.0;
    }
    out.tensors.push_back(std::move(t));
  }
  for (std::size_t i = 0; i < free_atoms.size(); ++i) {
    const auto& a = free_atoms[i];
    const std::size_t d = preds[a.predicate].num_labels();
    for (std::size_t v = 0; v < d; ++v) out[a.predicate][kb.cell_index(a) * d + v] = acc[i][v];
  }
  return out;
}

DenseTensor reference_einsum(const EinsumSpec& spec, const std::vector<DenseTensor>& inputs, const Extents& declared) {
  if (inputs.size() != spec.inputs.size()) throw DataError("operand count does not match the spec");
  std::map<char, std::size_t> extent;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (inputs[k].rank() != spec.inputs[k].size()) throw DataError("operand rank does not match its subscript");
    for (std::size_t a = 0; a < spec.inputs[k].size(); ++a) {
      auto [it, fresh] = extent.emplace(spec.inputs[k][a], inputs[k].extent(a));
      if (!fresh && it->second != inputs[k].extent(a)) throw DataError("inconsistent extent");
    }
  }
  for (char c : spec.output) {
    if (extent.count(c)) continue;
    auto it = declared.find(c);
    if (it == declared.end()) throw DataError(std::string("no extent for output letter '") + c + "'");
    extent[c] = it->second;
  }
  std::vector<char> letters;
  std::vector<std::size_t> radix;
  for (const auto& [c, e] : extent) {
    letters.push_back(c);
    radix.push_back(e);
  }
  auto value_of = [&](const std::vector<std::size_t>& values, char c) {
    return values[static_cast<std::size_t>(std::find(letters.begin(), letters.end(), c) - letters.begin())];
  };
  Shape out_shape;
  for (char c : spec.output) out_shape.push_back(extent[c]);
  DenseTensor out(out_shape, 0.0);
  if (std::find(radix.begin(), radix.end(), 0) != radix.end()) return out;
  std::vector<std::size_t> values(letters.size(), 0);
  do {
    double prod = 1.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      std::size_t flat = 0;
      for (std::size_t a = 0; a < spec.inputs[k].size(); ++a) {
        flat = flat * inputs[k].extent(a) + value_of(values, spec.inputs[k][a]);
      }
      prod *= inputs[k][flat];
    }
    std::size_t flat = 0;
    for (std::size_t a = 0; a < spec.output.size(); ++a) flat = flat * out_shape[a] + value_of(values, spec.output[a]);
    out[flat] += prod;
  } while (next_assignment(values, radix));
  return out;
}

Instance random_instance(std::mt19937_64& rng, const InstanceOptions& options) {
  auto uniform = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };
  static const char* const kVars[] = {"x", "y", "z", "u", "v", "w"};

  while (true) {
    const std::size_t n = uniform(1, options.max_entities);
    const std::size_t num_preds = uniform(1, options.max_predicates);
    std::vector<std::size_t> arity(num_preds), labels(num_preds);
    std::string text;
    for (std::size_t r = 0; r < num_preds; ++r) {
      arity[r] = uniform(0, options.max_arity);
      labels[r] = options.binary_only ? 2 : uniform(2, std::max<std::size_t>(2, options.max_labels));
      text += "predicate p" + std::to_string(r) + "(";
      for (std::size_t a = 0; a < arity[r]; ++a) text += a ? ",thing" : "thing";
      text += ")";
      if (labels[r] > 2) {
        text += " labels {";
        for (std::size_t v = 0; v < labels[r]; ++v) text += (v ? ",l" : "l") + std::to_string(v);
        text += "}";
      }
      text += "\n";
    }
    const std::size_t num_formulas = uniform(1, options.max_formulas);
    for (std::size_t f = 0; f < num_formulas; ++f) {
      const double w = std::round(std::uniform_real_distribution<double>(-1.0, 2.0)(rng) * 1000.0) / 1000.0;
      char wbuf[32];
      std::snprintf(wbuf, sizeof wbuf, "%g", w);
      text += "r" + std::to_string(f) + ": " + wbuf + ": ";
      const std::size_t clauses = uniform(1, std::max<std::size_t>(1, options.max_cnf_clauses));
      const std::size_t pool = uniform(1, std::min<std::size_t>(options.max_variables, 6));
      for (std::size_t c = 0; c < clauses; ++c) {
        if (c) text += " & ";
        if (clauses > 1) text += "(";
        const std::size_t L = uniform(1, options.max_literals);
        for (std::size_t l = 0; l < L; ++l) {
          if (l) text += " | ";
          const std::size_t r = uniform(0, num_preds - 1);
          std::string atom = "p" + std::to_string(r);
          if (arity[r]) {
            atom += "(";
            for (std::size_t a = 0; a < arity[r]; ++a) {
              if (a) atom += ",";
              atom += coin(options.constant_probability) ? "E" + std::to_string(uniform(0, n - 1))
                                                         : std::string(kVars[uniform(0, pool - 1)]);
            }
            atom += ")";
          }
          if (labels[r] == 2) {
            text += (coin(0.5) ? "!" : "") + atom;
            continue;
          }
          std::vector<std::size_t> set;
          while (set.empty() || set.size() == labels[r]) {
            set.clear();
            for (std::size_t v = 0; v < labels[r]; ++v) {
              if (coin(0.5)) set.push_back(v);
            }
          }
          const bool negate = coin(0.3);
          std::string list;
          for (std::size_t v = 0; v < labels[r]; ++v) {
            if (contains(set, v) != negate) list += (list.empty() ? "l" : ",l") + std::to_string(v);
          }
          text += (negate ? "!" : "") + atom + " in {" + list + "}";
        }
        if (clauses > 1) text += ")";
      }
      text += "\n";
    }
    RuleSet rules = parse_rules(text);
    if (rules.formulas.empty()) continue;

    std::vector<std::string> entities;
    for (std::size_t e = 0; e < n; ++e) entities.push_back("E" + std::to_string(e));
    KnowledgeBase kb(rules.predicates, entities);
    std::normal_distribution<double> normal(0.0, options.phi_scale);
    UnaryTable phi = zero_table(kb);
    for (std::size_t r = 0; r < num_preds; ++r) {
      for (auto& x : phi[r].data()) x = normal(rng);
      for (std::size_t c = 0; c < kb.num_cells(r); ++c) {
        if (coin(options.observe_probability)) kb.observe(kb.cell_atom(r, c), uniform(0, labels[r] - 1));
      }
    }
    return Instance{std::move(rules), std::move(kb), std::move(phi), std::move(text)};
  }
}

RuleSet flatten_cnf(const RuleSet& rules) {
  RuleSet out;
  out.predicates = rules.predicates;
  for (const auto& f : rules.formulas) {
    for (const auto& c : split_cnf(f)) {
      CnfFormula g;
      g.name = c.id;
      g.weight = c.weight;
      g.explicit_name = true;
      g.explicit_weight = true;
      g.clauses = {c};
      out.formulas.push_back(std::move(g));
    }
  }
  return out;
}

}  // namespace logicmp::oracle
