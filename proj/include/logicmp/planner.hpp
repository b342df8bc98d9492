#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "logicmp/tensor.hpp"

namespace logicmp {

/// One contraction. Operand ids below the input count name inputs; larger ids
/// name the intermediate produced by step `id - input_count`.
struct ContractionStep {
  std::size_t left = 0;
  std::optional<std::size_t> right;  // empty for a unary reduction
  std::string left_subscript;
  std::string right_subscript;
  std::string result_subscript;
  double est_flops = 0.0;

  /// Set when both operands and the result already sit in batch/free/summed
  /// layout, so execute() can call the batched product without reshaping.
  struct Direct {
    bool swap = false;  // right operand plays the left factor
    std::size_t nb = 1, ni = 1, nk = 1, nj = 1;
    Shape result_shape;
  };
  std::optional<Direct> direct;

  /// Number of distinct letters touched by this step.
  std::size_t active_indices() const;
  std::string to_string() const;  // "LHS,RHS->RES"
};

struct ContractionPlan {
  EinsumSpec spec;
  Extents extents;
  std::vector<ContractionStep> steps;
  std::string final_subscript;
  /// M': largest number of distinct letters any single step touches.
  std::size_t max_intermediate_arity = 0;
  double total_cost = 0.0;
  /// Cost of the single-shot loop nest over every letter.
  double naive_cost = 0.0;
};

/// Cost of one step touching `letters` with `operands` inputs: the extent
/// product, counted once per multiply (a pairwise step costs the product).
double step_cost(std::string_view letters, std::size_t operands, const Extents& extents);

/// Single-shot cost of `spec`: every letter at once, (n-1) multiplies per point.
double naive_cost(const EinsumSpec& spec, const Extents& extents);

/// Minimum-cost pairwise contraction order. Exhaustive for up to
/// `kExhaustiveLimit` operands, greedy beyond. Ties resolve by fewer result
/// letters, then by the lexicographically smallest step text.
ContractionPlan plan(const EinsumSpec& spec, const Extents& extents);

/// Plan following a caller-chosen pairwise order. Each pair names positions in
/// the live operand list, where a contraction removes both operands and
/// appends its result.
ContractionPlan plan_from_order(const EinsumSpec& spec, const Extents& extents,
                                std::span<const std::pair<std::size_t, std::size_t>> order);

DenseTensor execute(const ContractionPlan& plan, std::span<const DenseTensor> inputs);

/// Stable text rendering: one `LHS,RHS->RES cost=<int>` line per step.
std::string format_plan(const ContractionPlan& plan);

inline constexpr std::size_t kExhaustiveLimit = 6;

}  // namespace logicmp
