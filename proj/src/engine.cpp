#include "logicmp/engine.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <set>
#include <tuple>

#include "logicmp/error.hpp"

namespace logicmp {

namespace {

Shape table_shape(std::size_t n, std::size_t arity, std::size_t labels) {
  Shape s(arity, n);
  s.push_back(labels);
  return s;
}

char letter_for(const std::vector<std::string>& vars, const std::string& symbol) {
  auto it = std::find(vars.begin(), vars.end(), symbol);
  return static_cast<char>('a' + (it - vars.begin()));
}

std::string literal_letters(const Literal& lit, const std::vector<std::string>& vars) {
  std::string out;
  for (const auto& t : lit.args) {
    if (t.is_variable()) out.push_back(letter_for(vars, t.symbol));
  }
  return out;
}

std::string distinct_letters(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (out.find(c) == std::string::npos) out.push_back(c);
  }
  return out;
}

std::size_t entity_of(const KnowledgeBase& kb, const Term& t) {
  auto idx = kb.entity_index(t.symbol);
  if (!idx) throw DataError("rule constant '" + t.symbol + "' is not in the entity domain");
  return *idx;
}

// Minimal sets of same-predicate literals whose value sets cover every label.
std::vector<std::vector<std::size_t>> covering_sets(const Clause& clause, const std::vector<Predicate>& preds) {
  const std::size_t L = clause.literals.size();
  std::vector<std::vector<std::size_t>> found;
  for (std::uint32_t bits = 1; bits < (1u << L); ++bits) {
    if (std::popcount(bits) < 2) continue;
    std::vector<std::size_t> members;
    for (std::size_t k = 0; k < L; ++k) {
      if (bits & (1u << k)) members.push_back(k);
    }
    const std::size_t pred = clause.literals[members.front()].predicate;
    bool same = std::all_of(members.begin(), members.end(),
                            [&](std::size_t k) { return clause.literals[k].predicate == pred; });
    if (!same) continue;
    std::set<std::size_t> cover;
    for (auto k : members) cover.insert(clause.literals[k].value_set.begin(), clause.literals[k].value_set.end());
    if (cover.size() < preds[pred].num_labels()) continue;
    bool minimal = std::none_of(found.begin(), found.end(), [&](const std::vector<std::size_t>& f) {
      return std::includes(members.begin(), members.end(), f.begin(), f.end());
    });
    if (minimal) found.push_back(std::move(members));
  }
  return found;
}

// 1 - [all literals in `set` name the same ground atom], over the letters the
// condition mentions. Returns false when the atoms can never coincide.
bool build_mask(const Clause& clause, const std::vector<std::size_t>& set, const std::vector<std::string>& vars,
                const KnowledgeBase& kb, std::string& subscript, DenseTensor& mask) {
  struct Side {
    bool variable;
    std::size_t value;  // letter offset or entity index
  };
  std::vector<std::pair<Side, Side>> equalities;
  const std::size_t arity = clause.literals[set.front()].args.size();
  for (std::size_t pos = 0; pos < arity; ++pos) {
    auto side = [&](std::size_t lit) {
      const Term& t = clause.literals[lit].args[pos];
      if (t.is_variable()) return Side{true, static_cast<std::size_t>(letter_for(vars, t.symbol) - 'a')};
      return Side{false, entity_of(kb, t)};
    };
    const Side first = side(set.front());
    for (std::size_t k = 1; k < set.size(); ++k) {
      const Side other = side(set[k]);
      if (!first.variable && !other.variable) {
        if (first.value != other.value) return false;
        continue;
      }
      if (first.variable && other.variable && first.value == other.value) continue;
      equalities.emplace_back(first, other);
    }
  }
  std::set<std::size_t> letters;
  for (const auto& [l, r] : equalities) {
    if (l.variable) letters.insert(l.value);
    if (r.variable) letters.insert(r.value);
  }
  subscript.clear();
  for (auto l : letters) subscript.push_back(static_cast<char>('a' + l));
  const std::size_t n = kb.num_entities();
  mask = DenseTensor(Shape(subscript.size(), n), 0.0);
  std::vector<std::size_t> value(26, 0);
  for (std::size_t flat = 0; flat < mask.size(); ++flat) {
    std::size_t rem = flat;
    for (std::size_t k = subscript.size(); k-- > 0;) {
      value[static_cast<std::size_t>(subscript[k] - 'a')] = rem % n;
      rem /= n;
    }
    bool unify = true;
    for (const auto& [l, r] : equalities) {
      const std::size_t lv = l.variable ? value[l.value] : l.value;
      const std::size_t rv = r.variable ? value[r.value] : r.value;
      if (lv != rv) unify = false;
    }
    mask[flat] = unify ? 0.0 : 1.0;
  }
  return true;
}

using FactorKey = std::tuple<std::size_t, std::vector<std::size_t>, bool>;
using FactorCache = std::map<FactorKey, DenseTensor>;

// Per-cell premise factor: the probability mass the premise literal accepts.
const DenseTensor& premise_factor(const PremiseOperand& op, const MarginalTable& q, FactorCache& cache) {
  FactorKey key{op.predicate, op.labels, op.multiclass};
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  const DenseTensor& table = q[op.predicate];
  const std::size_t d = table.extent(table.rank() - 1);
  Shape cells(table.shape().begin(), table.shape().end() - 1);
  DenseTensor out(cells);
  const std::size_t count = out.size();
  if (!op.multiclass) {
    const std::size_t label = op.labels.front();
    for (std::size_t c = 0; c < count; ++c) out[c] = table[c * d + label];
  } else {
    for (std::size_t c = 0; c < count; ++c) {
      double s = 0.0;
      for (auto v : op.labels) s += table[c * d + v];
      out[c] = s;
    }
  }
  return cache.emplace(std::move(key), std::move(out)).first->second;
}

DenseTensor message_cached(const CompiledImplication& ci, const MarginalTable& q, FactorCache& cache) {
  std::vector<DenseTensor> operands;
  operands.reserve(ci.spec.inputs.size());
  for (const auto& op : ci.premises) {
    DenseTensor t = premise_factor(op, q, cache);
    // Fix constant axes from the highest axis down so indices stay valid.
    for (auto it = op.fixed_axes.rbegin(); it != op.fixed_axes.rend(); ++it) t = slice_fixed(t, it->first, it->second);
    operands.push_back(std::move(t));
  }
  for (const auto& m : ci.masks) operands.push_back(m);
  DenseTensor result = execute(ci.plan, operands);
  const DenseTensor& target = q[ci.target_predicate];
  Shape cells(target.shape().begin(), target.shape().end() - 1);
  if (ci.scatter.empty()) return DenseTensor(cells, std::vector<double>(result.data().begin(), result.data().end()));
  DenseTensor out(cells, 0.0);
  for (std::size_t k = 0; k < ci.scatter.size(); ++k) out[ci.scatter[k]] += result[k];
  return out;
}

void clamp(MarginalTable& q, const ObservationMask& mask) {
  for (std::size_t r = 0; r < q.size(); ++r) {
    DenseTensor& t = q[r];
    const std::size_t d = t.extent(t.rank() - 1);
    const auto& observed = mask.observed[r];
    for (std::size_t c = 0; c < observed.size(); ++c) {
      if (!observed[c]) continue;
      for (std::size_t v = 0; v < d; ++v) t[c * d + v] = v == mask.label[r][c] ? 1.0 : 0.0;
    }
  }
}

}  // namespace

LabelTable zero_table(const KnowledgeBase& kb) {
  LabelTable t;
  for (const auto& p : kb.predicates()) {
    t.tensors.emplace_back(table_shape(kb.num_entities(), p.arity, p.num_labels()), 0.0);
  }
  return t;
}

MarginalTable initial_marginals(const UnaryTable& phi, const ObservationMask& mask) {
  MarginalTable q;
  for (const auto& t : phi.tensors) q.tensors.push_back(softmax_lastaxis(t));
  clamp(q, mask);
  return q;
}

EinsumSpec implication_spec(const Clause& clause, std::size_t hypothesis_index) {
  const auto vars = clause_variables(clause);
  if (vars.size() > 26) throw DataError("clause '" + clause.id + "' has more than 26 variables");
  EinsumSpec spec;
  for (std::size_t j = 0; j < clause.literals.size(); ++j) {
    if (j != hypothesis_index) spec.inputs.push_back(literal_letters(clause.literals[j], vars));
  }
  spec.output = distinct_letters(literal_letters(clause.literals.at(hypothesis_index), vars));
  return spec;
}

std::vector<CompiledImplication> compile(const RuleSet& rules, const KnowledgeBase& kb, const CompileOptions& options) {
  const auto& preds = kb.predicates();
  if (preds.size() != rules.predicates.size()) throw DataError("rule and KB predicate lists differ");
  for (std::size_t r = 0; r < preds.size(); ++r) {
    if (!(preds[r] == rules.predicates[r])) throw DataError("predicate '" + preds[r].name + "' differs from rules");
  }
  const std::size_t n = kb.num_entities();
  std::vector<CompiledImplication> out;
  for (const auto& formula : rules.formulas) {
    for (const auto& clause : split_cnf(formula)) {
      for (const auto& lit : clause.literals) {
        if (lit.value_set.empty() || lit.value_set.size() >= preds.at(lit.predicate).num_labels()) {
          throw DataError("clause '" + clause.id + "' is tautological or has an empty value set");
        }
      }
      const auto vars = clause_variables(clause);
      std::vector<std::string> mask_subs;
      std::vector<DenseTensor> masks;
      if (options.skip_tautological_groundings) {
        for (const auto& set : covering_sets(clause, preds)) {
          std::string sub;
          DenseTensor m;
          if (build_mask(clause, set, vars, kb, sub, m)) {
            mask_subs.push_back(std::move(sub));
            masks.push_back(std::move(m));
          }
        }
      }
      const auto implications = to_implications(clause, preds);
      for (std::size_t h = 0; h < implications.size(); ++h) {
        CompiledImplication ci;
        ci.formula = formula.name;
        ci.implication = implications[h];
        ci.weight = clause.weight;
        const Literal& hyp = clause.literals[h];
        ci.target_predicate = hyp.predicate;
        ci.target_labels = hyp.value_set;
        ci.multiclass_target = options.force_multiclass_path || !preds[hyp.predicate].is_binary();

        ci.spec = implication_spec(clause, h);
        std::size_t premise_pos = 0;
        for (std::size_t j = 0; j < clause.literals.size(); ++j) {
          if (j == h) continue;
          const Literal& lit = clause.literals[j];
          PremiseOperand op;
          op.predicate = lit.predicate;
          op.labels = ci.implication.premise[premise_pos].value_set;
          op.subscript = ci.spec.inputs[premise_pos];
          op.multiclass = options.force_multiclass_path || !preds[lit.predicate].is_binary();
          for (std::size_t a = 0; a < lit.args.size(); ++a) {
            if (!lit.args[a].is_variable()) op.fixed_axes.emplace_back(a, entity_of(kb, lit.args[a]));
          }
          ci.premises.push_back(std::move(op));
          ++premise_pos;
        }
        ci.mask_subscripts = mask_subs;
        ci.masks = masks;
        for (const auto& s : mask_subs) ci.spec.inputs.push_back(s);

        Extents extents;
        for (std::size_t v = 0; v < vars.size(); ++v) extents[static_cast<char>('a' + v)] = n;
        ci.plan = plan(ci.spec, extents);

        // Scatter when the hypothesis repeats a variable or holds a constant.
        bool identity = true;
        for (const auto& t : hyp.args) identity = identity && t.is_variable();
        identity = identity && ci.spec.output.size() == hyp.args.size();
        if (!identity) {
          const std::size_t out_cells = int_pow(n, ci.spec.output.size());
          ci.scatter.resize(out_cells);
          std::vector<std::size_t> coord(26, 0);
          for (std::size_t k = 0; k < out_cells; ++k) {
            std::size_t rem = k;
            for (std::size_t a = ci.spec.output.size(); a-- > 0;) {
              coord[static_cast<std::size_t>(ci.spec.output[a] - 'a')] = rem % n;
              rem /= n;
            }
            std::size_t cell = 0;
            for (const auto& t : hyp.args) {
              const std::size_t e =
                  t.is_variable() ? coord[static_cast<std::size_t>(letter_for(vars, t.symbol) - 'a')] : entity_of(kb, t);
              cell = cell * n + e;
            }
            ci.scatter[k] = cell;
          }
        }
        out.push_back(std::move(ci));
      }
    }
  }
  return out;
}

DenseTensor message(const CompiledImplication& ci, const MarginalTable& q) {
  FactorCache cache;
  return message_cached(ci, q, cache);
}

InferenceResult run_inference(const UnaryTable& phi, const std::vector<CompiledImplication>& compiled,
                              const EngineConfig& config, const ObservationMask& mask) {
  if (config.iterations < 1) throw DataError("iterations must be at least 1");
  if (!(config.damping >= 0.0 && config.damping <= 1.0)) throw DataError("damping must lie in [0, 1]");
  for (const auto& [name, w] : config.weight_overrides) {
    (void)w;
    bool known = std::any_of(compiled.begin(), compiled.end(), [&](const auto& ci) { return ci.formula == name; });
    if (!known) throw DataError("weight override for unknown formula '" + name + "'");
  }
  std::vector<double> weights;
  for (const auto& ci : compiled) {
    auto it = config.weight_overrides.find(ci.formula);
    weights.push_back(it == config.weight_overrides.end() ? ci.weight : it->second);
  }

  InferenceResult result;
  result.marginals = initial_marginals(phi, mask);
  if (!config.clamp_observed) {
    result.marginals.tensors.clear();
    for (const auto& t : phi.tensors) result.marginals.tensors.push_back(softmax_lastaxis(t));
  }
  for (std::size_t t = 1; t <= config.iterations; ++t) {
    const auto start = std::chrono::steady_clock::now();
    UnaryTable logits = phi;
    FactorCache cache;
    for (std::size_t k = 0; k < compiled.size(); ++k) {
      const auto& ci = compiled[k];
      if (weights[k] == 0.0) continue;
      const DenseTensor msg = message_cached(ci, result.marginals, cache);
      DenseTensor& target = logits[ci.target_predicate];
      const std::size_t d = target.extent(target.rank() - 1);
      const double w = weights[k];
      if (!ci.multiclass_target) {
        const std::size_t label = ci.target_labels.front();
        for (std::size_t c = 0; c < msg.size(); ++c) target[c * d + label] += w * msg[c];
      } else {
        for (std::size_t c = 0; c < msg.size(); ++c) {
          const double add = w * msg[c];
          for (auto v : ci.target_labels) target[c * d + v] += add;
        }
      }
    }
    for (std::size_t r = 0; r < logits.size(); ++r) {
      if (!logits[r].all_finite()) {
        throw NumericError(t, "non-finite logit for predicate #" + std::to_string(r));
      }
    }
    MarginalTable next;
    for (const auto& l : logits.tensors) next.tensors.push_back(softmax_lastaxis(l));
    if (config.damping > 0.0) {
      for (std::size_t r = 0; r < next.size(); ++r) {
        auto fresh = next[r].data();
        auto old = result.marginals[r].data();
        for (std::size_t i = 0; i < fresh.size(); ++i) {
          fresh[i] = (1.0 - config.damping) * fresh[i] + config.damping * old[i];
        }
      }
    }
    if (config.clamp_observed) clamp(next, mask);
    result.marginals = std::move(next);
    result.logits = std::move(logits);
    result.seconds_per_iteration.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  return result;
}

MarginalTable iterate(const UnaryTable& phi, const std::vector<CompiledImplication>& compiled,
                      const EngineConfig& config, const ObservationMask& mask) {
  return run_inference(phi, compiled, config, mask).marginals;
}

std::size_t transitivity_violations(const DenseTensor& q) {
  if (q.rank() != 3 || q.extent(0) != q.extent(1) || q.extent(2) != 2) {
    throw DataError("transitivity check needs an N x N x 2 marginal tensor");
  }
  const std::size_t n = q.extent(0);
  const std::size_t words = (n + 63) / 64;
  std::vector<std::uint64_t> rows(n * words, 0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t cell = (a * n + b) * 2;
      if (q[cell + 1] > q[cell]) rows[a * words + b / 64] |= std::uint64_t{1} << (b % 64);
    }
  }
  std::size_t count = 0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (!(rows[a * words + b / 64] >> (b % 64) & 1)) continue;
      for (std::size_t w = 0; w < words; ++w) {
        count += static_cast<std::size_t>(std::popcount(rows[b * words + w] & ~rows[a * words + w]));
      }
    }
  }
  return count;
}

double max_abs_diff(const LabelTable& a, const LabelTable& b) {
  if (a.size() != b.size()) throw DataError("tables hold different predicate counts");
  double worst = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r) {
    if (a[r].shape() != b[r].shape()) throw DataError("table shapes differ");
    for (std::size_t i = 0; i < a[r].size(); ++i) worst = std::max(worst, std::abs(a[r][i] - b[r][i]));
  }
  return worst;
}

}  // namespace logicmp
