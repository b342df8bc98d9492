#include "logicmp/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "logicmp/error.hpp"

namespace logicmp {

namespace {

bool contains(std::string_view s, char c) { return s.find(c) != std::string_view::npos; }

std::string distinct(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (!contains(out, c)) out.push_back(c);
  }
  return out;
}

std::string union_letters(std::string_view a, std::string_view b) { return distinct(std::string(a) + std::string(b)); }

struct Operand {
  std::size_t id;
  std::string sub;
};

// Letters of `merged` still needed by other live operands or the output.
std::string kept_letters(std::string_view merged, const std::vector<Operand>& live, std::size_t skip_a,
                         std::size_t skip_b, std::string_view output) {
  std::string keep;
  for (char c : distinct(merged)) {
    bool needed = contains(output, c);
    for (std::size_t k = 0; k < live.size() && !needed; ++k) {
      if (k != skip_a && k != skip_b && contains(live[k].sub, c)) needed = true;
    }
    if (needed) keep.push_back(c);
  }
  return keep;
}

// Result layout: the larger operand's letters in place, with each summed
// letter's slot taken over by the next new letter from the smaller operand.
std::string arrange_result(std::string_view small, std::string_view large, std::string_view keep) {
  std::string fresh;
  for (char c : distinct(small)) {
    if (contains(keep, c) && !contains(large, c)) fresh.push_back(c);
  }
  std::string out;
  std::size_t next = 0;
  for (char c : distinct(large)) {
    if (contains(keep, c)) {
      out.push_back(c);
    } else if (next < fresh.size()) {
      out.push_back(fresh[next++]);
    }
  }
  out += fresh.substr(next);
  return out;
}

std::string final_layout(std::string_view keep, std::string_view output) {
  std::string out;
  for (char c : output) {
    if (contains(keep, c)) out.push_back(c);
  }
  return out;
}

ContractionStep make_pair_step(const std::vector<Operand>& live, std::size_t i, std::size_t j, const EinsumSpec& spec,
                               const Extents& extents) {
  const Operand& a = live[i];
  const Operand& b = live[j];
  const std::string merged = a.sub + b.sub;
  const std::string keep = kept_letters(merged, live, i, j, spec.output);
  // Smaller operand is printed first; ties keep live-list order.
  const bool a_first = distinct(a.sub).size() <= distinct(b.sub).size();
  const Operand& first = a_first ? a : b;
  const Operand& second = a_first ? b : a;
  ContractionStep step;
  step.left = first.id;
  step.right = second.id;
  step.left_subscript = first.sub;
  step.right_subscript = second.sub;
  step.result_subscript =
      live.size() == 2 ? final_layout(keep, spec.output) : arrange_result(first.sub, second.sub, keep);
  step.est_flops = step_cost(union_letters(a.sub, b.sub), 2, extents);
  return step;
}

ContractionStep make_unary_step(const Operand& op, const EinsumSpec& spec, const Extents& extents) {
  ContractionStep step;
  step.left = op.id;
  step.left_subscript = op.sub;
  step.result_subscript = final_layout(op.sub, spec.output);
  step.est_flops = step_cost(distinct(op.sub), 1, extents);
  return step;
}

struct Candidate {
  std::vector<ContractionStep> steps;
  double cost = 0.0;
  std::size_t result_letters = 0;
  std::string text;

  bool better_than(const Candidate& other) const {
    if (cost != other.cost) return cost < other.cost;
    if (result_letters != other.result_letters) return result_letters < other.result_letters;
    return text < other.text;
  }
};

void extend(Candidate& c, const ContractionStep& s) {
  c.steps.push_back(s);
  c.cost += s.est_flops;
  c.result_letters += s.result_subscript.size();
  c.text += s.to_string();
  c.text.push_back(';');
}

void apply_step(std::vector<Operand>& live, std::size_t i, std::size_t j, const ContractionStep& s, std::size_t id) {
  live.erase(live.begin() + static_cast<std::ptrdiff_t>(j));
  live.erase(live.begin() + static_cast<std::ptrdiff_t>(i));
  live.push_back({id, s.result_subscript});
}

void search(std::vector<Operand> live, std::size_t next_id, Candidate partial, const EinsumSpec& spec,
            const Extents& extents, std::optional<Candidate>& best) {
  if (best && best->cost < partial.cost) return;
  if (live.size() == 1) {
    if (!best || partial.better_than(*best)) best = std::move(partial);
    return;
  }
  for (std::size_t i = 0; i < live.size(); ++i) {
    for (std::size_t j = i + 1; j < live.size(); ++j) {
      ContractionStep s = make_pair_step(live, i, j, spec, extents);
      Candidate c = partial;
      extend(c, s);
      std::vector<Operand> rest = live;
      apply_step(rest, i, j, s, next_id);
      search(std::move(rest), next_id + 1, std::move(c), spec, extents, best);
    }
  }
}

Candidate greedy(std::vector<Operand> live, std::size_t next_id, const EinsumSpec& spec, const Extents& extents) {
  Candidate out;
  while (live.size() > 1) {
    std::optional<Candidate> pick;
    std::size_t pi = 0, pj = 0;
    for (std::size_t i = 0; i < live.size(); ++i) {
      for (std::size_t j = i + 1; j < live.size(); ++j) {
        Candidate c;
        extend(c, make_pair_step(live, i, j, spec, extents));
        if (!pick || c.better_than(*pick)) {
          pick = std::move(c);
          pi = i;
          pj = j;
        }
      }
    }
    const ContractionStep s = pick->steps.front();
    extend(out, s);
    apply_step(live, pi, pj, s, next_id++);
  }
  return out;
}

void validate(const EinsumSpec& spec, const Extents& extents) {
  std::string letters;
  for (const auto& in : spec.inputs) letters += in;
  letters += spec.output;
  if (distinct(letters).size() > 26) throw DataError("einsum spec uses more than 26 indices");
  for (char c : letters) {
    if (c < 'a' || c > 'z') throw DataError(std::string("invalid einsum letter '") + c + "'");
    if (!extents.count(c)) throw DataError(std::string("unknown extent for index '") + c + "'");
  }
  if (distinct(spec.output).size() != spec.output.size()) throw DataError("einsum output repeats a letter");
}

std::optional<ContractionStep::Direct> lower(const ContractionStep& s, const Extents& extents) {
  if (!s.right) return std::nullopt;
  const std::string& l = s.left_subscript;
  const std::string& r = s.right_subscript;
  const std::string& o = s.result_subscript;
  if (distinct(l).size() != l.size() || distinct(r).size() != r.size()) return std::nullopt;
  std::string batch, left_free, right_free, summed;
  for (char c : o) {
    if (contains(l, c) && contains(r, c)) {
      batch.push_back(c);
    } else if (contains(l, c)) {
      left_free.push_back(c);
    } else {
      right_free.push_back(c);
    }
  }
  for (char c : l) {
    if (contains(r, c) && !contains(o, c)) summed.push_back(c);
  }
  // Letters summed away inside one operand need a reduction first.
  if (l.size() != batch.size() + left_free.size() + summed.size()) return std::nullopt;
  if (r.size() != batch.size() + right_free.size() + summed.size()) return std::nullopt;
  ContractionStep::Direct d;
  if (l == batch + left_free + summed && r == batch + summed + right_free && o == batch + left_free + right_free) {
    d.swap = false;
  } else if (r == batch + right_free + summed && l == batch + summed + left_free &&
             o == batch + right_free + left_free) {
    d.swap = true;
  } else {
    return std::nullopt;
  }
  auto volume = [&](const std::string& letters) {
    std::size_t v = 1;
    for (char c : letters) v *= extents.at(c);
    return v;
  };
  d.nb = volume(batch);
  d.ni = volume(d.swap ? right_free : left_free);
  d.nk = volume(summed);
  d.nj = volume(d.swap ? left_free : right_free);
  for (char c : o) d.result_shape.push_back(extents.at(c));
  return d;
}

ContractionPlan finish(const EinsumSpec& spec, const Extents& extents, std::vector<ContractionStep> steps) {
  ContractionPlan p;
  p.spec = spec;
  p.extents = extents;
  p.steps = std::move(steps);
  for (auto& s : p.steps) s.direct = lower(s, extents);
  p.final_subscript = spec.output;
  for (const auto& s : p.steps) {
    p.total_cost += s.est_flops;
    p.max_intermediate_arity = std::max(p.max_intermediate_arity, s.active_indices());
  }
  p.naive_cost = naive_cost(spec, extents);
  return p;
}

std::vector<Operand> initial_operands(const EinsumSpec& spec) {
  std::vector<Operand> live;
  for (std::size_t k = 0; k < spec.inputs.size(); ++k) live.push_back({k, spec.inputs[k]});
  return live;
}

}  // namespace

std::size_t ContractionStep::active_indices() const {
  return distinct(left_subscript + right_subscript + result_subscript).size();
}

std::string ContractionStep::to_string() const {
  std::string s = left_subscript;
  if (right) s += "," + right_subscript;
  return s + "->" + result_subscript;
}

double step_cost(std::string_view letters, std::size_t operands, const Extents& extents) {
  double volume = 1.0;
  for (char c : distinct(letters)) volume *= static_cast<double>(extents.at(c));
  return volume * static_cast<double>(std::max<std::size_t>(1, operands - 1));
}

double naive_cost(const EinsumSpec& spec, const Extents& extents) {
  if (spec.inputs.empty()) return 0.0;
  std::string letters;
  for (const auto& in : spec.inputs) letters += in;
  return step_cost(letters, spec.inputs.size(), extents);
}

ContractionPlan plan(const EinsumSpec& spec, const Extents& extents) {
  validate(spec, extents);
  auto live = initial_operands(spec);
  if (live.empty()) return finish(spec, extents, {});
  if (live.size() == 1) return finish(spec, extents, {make_unary_step(live.front(), spec, extents)});
  if (live.size() <= kExhaustiveLimit) {
    std::optional<Candidate> best;
    search(live, live.size(), Candidate{}, spec, extents, best);
    return finish(spec, extents, std::move(best->steps));
  }
  return finish(spec, extents, greedy(live, live.size(), spec, extents).steps);
}

ContractionPlan plan_from_order(const EinsumSpec& spec, const Extents& extents,
                                std::span<const std::pair<std::size_t, std::size_t>> order) {
  validate(spec, extents);
  auto live = initial_operands(spec);
  if (live.size() <= 1) {
    if (!order.empty()) throw DataError("explicit order given for fewer than two operands");
    return plan(spec, extents);
  }
  if (order.size() + 1 != live.size()) throw DataError("explicit order must contract every operand exactly once");
  std::vector<ContractionStep> steps;
  std::size_t next_id = live.size();
  for (auto [i, j] : order) {
    if (i > j) std::swap(i, j);
    if (i == j || j >= live.size()) throw DataError("explicit order names an invalid operand pair");
    ContractionStep s = make_pair_step(live, i, j, spec, extents);
    apply_step(live, i, j, s, next_id++);
    steps.push_back(std::move(s));
  }
  return finish(spec, extents, std::move(steps));
}

DenseTensor execute(const ContractionPlan& plan, std::span<const DenseTensor> inputs) {
  if (inputs.size() != plan.spec.inputs.size()) {
    throw DataError("plan expects " + std::to_string(plan.spec.inputs.size()) + " operands, got " +
                    std::to_string(inputs.size()));
  }
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const auto& sub = plan.spec.inputs[k];
    if (sub.size() != inputs[k].rank()) throw DataError("operand " + std::to_string(k) + " rank mismatch");
    for (std::size_t a = 0; a < sub.size(); ++a) {
      if (inputs[k].extent(a) != plan.extents.at(sub[a])) {
        throw DataError("operand " + std::to_string(k) + " extent mismatch on index '" + std::string(1, sub[a]) + "'");
      }
    }
  }
  if (plan.steps.empty()) {
    // No operands: the empty product.
    return broadcast("", DenseTensor::scalar(1.0), plan.final_subscript, plan.extents);
  }
  std::vector<DenseTensor> intermediates;
  intermediates.reserve(plan.steps.size());
  auto fetch = [&](std::size_t id) -> const DenseTensor& {
    return id < inputs.size() ? inputs[id] : intermediates.at(id - inputs.size());
  };
  for (const auto& s : plan.steps) {
    if (s.direct) {
      const auto& d = *s.direct;
      const DenseTensor& a = fetch(d.swap ? *s.right : s.left);
      const DenseTensor& b = fetch(d.swap ? s.left : *s.right);
      DenseTensor out(d.result_shape, 0.0);
      gemm_batched(d.nb, d.ni, d.nk, d.nj, a.data().data(), b.data().data(), out.data().data());
      intermediates.push_back(std::move(out));
    } else if (s.right) {
      intermediates.push_back(
          contract(s.left_subscript, fetch(s.left), s.right_subscript, fetch(*s.right), s.result_subscript));
    } else {
      intermediates.push_back(reduce(s.left_subscript, fetch(s.left), s.result_subscript));
    }
  }
  const std::string& last = plan.steps.back().result_subscript;
  if (last == plan.final_subscript) return std::move(intermediates.back());
  return broadcast(last, intermediates.back(), plan.final_subscript, plan.extents);
}

std::string format_plan(const ContractionPlan& plan) {
  std::string out;
  char buf[64];
  for (const auto& s : plan.steps) {
    std::snprintf(buf, sizeof buf, " cost=%.0f\n", s.est_flops);
    out += s.to_string() + buf;
  }
  return out;
}

}  // namespace logicmp
