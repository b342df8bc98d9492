#include "logicmp/demo.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "logicmp/error.hpp"

namespace logicmp {

namespace {

KnowledgeBase demo_kb(const RuleSet& rules, std::size_t tokens) {
  std::vector<std::string> names;
  for (std::size_t t = 0; t < tokens; ++t) names.push_back("t" + std::to_string(t));
  return KnowledgeBase(rules.predicates, std::move(names));
}

double accuracy(const DenseTensor& q, const std::vector<std::size_t>& block) {
  const std::size_t n = block.size();
  std::size_t hits = 0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t cell = (a * n + b) * 2;
      const bool predicted = q[cell + 1] > q[cell];
      hits += predicted == (block[a] == block[b]) ? 1 : 0;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(n * n);
}

}  // namespace

const char* transitivity_rules() {
  return "predicate C(token,token)\n"
         "transitivity: !C(a,b) | !C(b,c) | C(a,c)\n";
}

std::vector<std::size_t> demo_blocks(std::size_t tokens, std::size_t blocks) {
  std::vector<std::size_t> out(tokens);
  for (std::size_t t = 0; t < tokens; ++t) out[t] = t * blocks / tokens;
  return out;
}

UnaryTable demo_unary(const DemoConfig& config, const KnowledgeBase& kb) {
  const std::size_t n = config.tokens;
  const auto block = demo_blocks(n, config.blocks);
  std::mt19937_64 rng(config.seed);
  std::bernoulli_distribution flip(config.noise);
  std::normal_distribution<double> jitter(0.0, 1.0);
  UnaryTable phi = zero_table(kb);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      bool label = block[a] == block[b];
      if (flip(rng)) label = !label;
      const double noise = config.jitter * jitter(rng);
      phi[0][(a * n + b) * 2 + 1] = (label ? config.margin : -config.margin) + noise;
    }
  }
  return phi;
}

DemoReport run_transitivity_demo(const DemoConfig& config) {
  if (config.tokens < 3) throw DataError("the demo needs at least 3 tokens");
  if (config.blocks < 1 || config.blocks > config.tokens) throw DataError("blocks must lie in [1, tokens]");
  if (!(config.noise >= 0.0 && config.noise <= 1.0)) throw DataError("noise must lie in [0, 1]");
  if (config.iterations < 1) throw DataError("iterations must be at least 1");

  const RuleSet rules = parse_rules(transitivity_rules());
  const KnowledgeBase kb = demo_kb(rules, config.tokens);
  const UnaryTable phi = demo_unary(config, kb);
  const auto compiled = compile(rules, kb);
  const ObservationMask mask = kb.mask();
  const auto block = demo_blocks(config.tokens, config.blocks);

  DemoReport report;
  report.tokens = config.tokens;
  const MarginalTable baseline = initial_marginals(phi, mask);
  report.violations_before = transitivity_violations(baseline[0]);
  report.accuracy_before = accuracy(baseline[0], block);

  EngineConfig engine;
  engine.iterations = config.iterations;
  engine.weight_overrides["transitivity"] = config.weight;
  const InferenceResult result = run_inference(phi, compiled, engine, mask);
  report.violations_after = transitivity_violations(result.marginals[0]);
  report.accuracy_after = accuracy(result.marginals[0], block);
  report.seconds_per_iteration = result.seconds_per_iteration;
  for (const auto& ci : compiled) {
    report.max_intermediate_arity = std::max(report.max_intermediate_arity, ci.plan.max_intermediate_arity);
  }
  return report;
}

}  // namespace logicmp
