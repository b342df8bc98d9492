#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "logicmp/engine.hpp"

namespace logicmp {

/// Block-structured coreference matrix C(a,b) with noisy unary logits.
struct DemoConfig {
  std::size_t tokens = 64;
  std::size_t blocks = 4;
  double noise = 0.1;   // probability of flipping a cell's unary label
  double margin = 2.0;  // |logit| of the (possibly flipped) label
  double jitter = 0.0;  // standard deviation of extra Gaussian logit noise
  std::uint64_t seed = 1;
  std::size_t iterations = 5;
  double weight = 1.0;
};

struct DemoReport {
  std::size_t tokens = 0;
  std::size_t violations_before = 0;
  std::size_t violations_after = 0;
  double accuracy_before = 0.0;
  double accuracy_after = 0.0;
  std::size_t max_intermediate_arity = 0;
  std::vector<double> seconds_per_iteration;
};

/// Rule text of the demo: `!C(a,b) | !C(b,c) | C(a,c)`.
const char* transitivity_rules();

/// Ground-truth block of each token (contiguous, sizes differ by at most one).
std::vector<std::size_t> demo_blocks(std::size_t tokens, std::size_t blocks);

UnaryTable demo_unary(const DemoConfig& config, const KnowledgeBase& kb);

DemoReport run_transitivity_demo(const DemoConfig& config);

}  // namespace logicmp
