#pragma once

#include <cstddef>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "logicmp/engine.hpp"
#include "logicmp/fol.hpp"
#include "logicmp/kb.hpp"
#include "logicmp/tensor.hpp"

// Brute-force references. Everything here is written as plain nested loops
// and shares no arithmetic with the tensor, planner or engine code paths.
namespace logicmp::oracle {

struct Grounding {
  std::string clause_id;
  std::vector<std::size_t> assignment;  // entity per clause variable
  std::vector<GroundAtom> atoms;        // one per literal position
};

std::vector<Grounding> enumerate_groundings(const Clause& clause, const KnowledgeBase& kb,
                                            std::size_t limit = 1'000'000);

enum class GroundingMode {
  per_position,  // each literal position is its own factor, as the einsum computes it
  strict,        // one factor per distinct ground atom, messages once per grounding
};

struct Options {
  GroundingMode mode = GroundingMode::per_position;
  bool skip_tautological_groundings = false;
  bool premise_product = false;  // product-of-premise message instead of the full expectation
  std::size_t message_limit = 100'000;
  std::map<std::string, double> weight_overrides;
};

/// One synchronous mean-field update of every unobserved cell from `q`.
/// Observed cells are returned one-hot.
MarginalTable naive_mf_step(const MarginalTable& q, const UnaryTable& phi, const RuleSet& rules,
                            const KnowledgeBase& kb, const Options& options = {});

/// Exact marginals of p(v | O) by enumerating every world. Throws
/// LimitExceeded past 2^max_bits worlds.
MarginalTable exact_marginals(const KnowledgeBase& kb, const RuleSet& rules, const UnaryTable& phi,
                              const std::map<std::string, double>& weight_overrides = {},
                              std::size_t max_bits = 20);

/// Message of one grounding to the atom at position h, per label of that atom:
/// the expectation of the clause indicator over the other positions.
std::vector<double> grounding_message_full(const std::vector<std::vector<std::size_t>>& value_sets,
                                           const std::vector<std::vector<double>>& marginals, std::size_t h);

/// Same message through the true-premise product: 1[v in Z_h] * prod_j (1 - sum_{Z_j} Q_j).
std::vector<double> grounding_message_simplified(const std::vector<std::vector<std::size_t>>& value_sets,
                                                 const std::vector<std::vector<double>>& marginals, std::size_t h);

/// Nested-loop einsum over every letter assignment.
DenseTensor reference_einsum(const EinsumSpec& spec, const std::vector<DenseTensor>& inputs,
                             const Extents& declared = {});

struct InstanceOptions {
  std::size_t max_entities = 6;
  std::size_t max_predicates = 3;
  std::size_t max_arity = 2;
  std::size_t max_formulas = 4;
  std::size_t max_literals = 3;
  std::size_t max_labels = 3;
  std::size_t max_variables = 3;
  std::size_t max_cnf_clauses = 1;  // >1 lets formulas hold several clauses
  double observe_probability = 0.2;
  double constant_probability = 0.1;
  double phi_scale = 1.5;
  bool binary_only = false;
};

struct Instance {
  RuleSet rules;
  KnowledgeBase kb;
  UnaryTable phi;
  std::string rule_text;
};

Instance random_instance(std::mt19937_64& rng, const InstanceOptions& options = {});

/// Every clause of every formula as its own formula with the parent weight.
RuleSet flatten_cnf(const RuleSet& rules);

}  // namespace logicmp::oracle
