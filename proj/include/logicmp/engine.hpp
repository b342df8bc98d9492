#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "logicmp/fol.hpp"
#include "logicmp/kb.hpp"
#include "logicmp/planner.hpp"
#include "logicmp/tensor.hpp"

namespace logicmp {

/// One tensor per predicate, shape N^arity x D.
struct LabelTable {
  std::vector<DenseTensor> tensors;

  DenseTensor& operator[](std::size_t predicate) { return tensors.at(predicate); }
  const DenseTensor& operator[](std::size_t predicate) const { return tensors.at(predicate); }
  std::size_t size() const { return tensors.size(); }
  friend bool operator==(const LabelTable&, const LabelTable&) = default;
};

using UnaryTable = LabelTable;     // logits
using MarginalTable = LabelTable;  // probabilities

LabelTable zero_table(const KnowledgeBase& kb);

/// Softmax of `phi` with observed cells clamped to one-hot.
MarginalTable initial_marginals(const UnaryTable& phi, const ObservationMask& mask);

struct CompileOptions {
  /// Add mask operands that zero groundings whose literals cover every label of
  /// one ground atom (e.g. S(a) | !S(b) at a=b). Off by default: degenerate
  /// groundings are part of the einsum as written.
  bool skip_tautological_groundings = false;
  /// Route every literal through the value-set path, even binary singletons.
  bool force_multiclass_path = false;
};

struct PremiseOperand {
  std::size_t predicate = 0;
  std::vector<std::size_t> labels;                                // premise holds on these labels
  std::vector<std::pair<std::size_t, std::size_t>> fixed_axes;  // (axis, entity) for constants
  std::string subscript;                                          // letters of the remaining axes
  bool multiclass = false;
};

struct CompiledImplication {
  std::string formula;
  Implication implication;
  double weight = 1.0;
  std::size_t target_predicate = 0;
  std::vector<std::size_t> target_labels;
  bool multiclass_target = false;
  std::vector<PremiseOperand> premises;
  std::vector<std::string> mask_subscripts;
  std::vector<DenseTensor> masks;
  EinsumSpec spec;  // premise operands, then masks
  ContractionPlan plan;
  /// Hypothesis cell for each einsum output cell; empty when the output
  /// already is the hypothesis layout.
  std::vector<std::size_t> scatter;
};

/// Einsum spec of an implication from the letter assignment alone (variables
/// map to a, b, ... in clause order; constants drop their axis).
EinsumSpec implication_spec(const Clause& clause, std::size_t hypothesis_index);

std::vector<CompiledImplication> compile(const RuleSet& rules, const KnowledgeBase& kb,
                                         const CompileOptions& options = {});

/// Expected number of true-premise groundings per hypothesis cell, shape
/// N^arity of the hypothesis predicate.
DenseTensor message(const CompiledImplication& ci, const MarginalTable& q);

struct EngineConfig {
  std::size_t iterations = 5;
  std::map<std::string, double> weight_overrides;  // keyed by formula name
  double damping = 0.0;
  bool clamp_observed = true;
};

struct InferenceResult {
  MarginalTable marginals;
  UnaryTable logits;  // pre-softmax logits of the last iteration
  std::vector<double> seconds_per_iteration;
};

InferenceResult run_inference(const UnaryTable& phi, const std::vector<CompiledImplication>& compiled,
                              const EngineConfig& config, const ObservationMask& mask);

MarginalTable iterate(const UnaryTable& phi, const std::vector<CompiledImplication>& compiled,
                      const EngineConfig& config, const ObservationMask& mask);

/// Triples (a,b,c) with argmax C(a,b)=1, C(b,c)=1 and C(a,c)=0.
std::size_t transitivity_violations(const DenseTensor& q);

double max_abs_diff(const LabelTable& a, const LabelTable& b);

}  // namespace logicmp
