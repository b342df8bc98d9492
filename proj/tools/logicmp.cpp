#include <iostream>

#include "CLI11.hpp"
#include "logicmp/cli.hpp"

using namespace logicmp;

int main(int argc, char** argv) {
  CLI::App app{"logicmp: mean-field inference for Markov logic rules via planned einsum"};
  app.require_subcommand(1);

  cli::InferOptions infer;
  std::string evidence, unary, query, output;
  auto* infer_cmd = app.add_subcommand("infer", "run inference and write marginals");
  infer_cmd->add_option("--rules", infer.rules, "rule file")->required()->check(CLI::ExistingFile);
  infer_cmd->add_option("--evidence", evidence, "evidence file")->check(CLI::ExistingFile);
  infer_cmd->add_option("--unary", unary, "unary logits file (default: zeros)")->check(CLI::ExistingFile);
  infer_cmd->add_option("--query", query, "atoms to report (default: all unobserved)")->check(CLI::ExistingFile);
  infer_cmd->add_option("--entities", infer.entities, "extra entities, placed before evidence constants");
  infer_cmd->add_option("--iterations", infer.iterations, "mean-field iterations T")->capture_default_str();
  infer_cmd->add_option("--weight", infer.weights, "override a formula weight, NAME=V (repeatable)");
  infer_cmd->add_option("--output", output, "output file (default: stdout)");
  infer_cmd->add_option("--format", infer.format, "csv or json")->capture_default_str();
  infer_cmd->add_option("--seed", infer.seed, "accepted for a uniform interface; inference is deterministic");
  infer_cmd->add_flag("--oracle", infer.oracle, "cross-check one iteration against the naive oracle");
  infer_cmd->add_option("--damping", infer.damping, "damping factor in [0,1]")->capture_default_str();
  infer_cmd->add_flag("--include-observed", infer.include_observed, "also report observed cells");
  infer_cmd->add_flag("--skip-tautologies", infer.skip_tautologies,
                      "drop groundings whose literals cover every label of one atom");

  cli::PlanOptions plan;
  std::string plan_rules;
  auto* plan_cmd = app.add_subcommand("plan", "print contraction plans");
  plan_cmd->add_option("--rules", plan_rules, "rule file")->check(CLI::ExistingFile);
  plan_cmd->add_option("--spec", plan.specs, "einsum spec such as ab,bc->ac (repeatable)");
  plan_cmd->add_option("--domain-size", plan.domain_size, "extent of every index")->capture_default_str();

  DemoConfig demo;
  auto* demo_cmd = app.add_subcommand("demo-transitivity", "noisy block matrix with the transitivity rule");
  demo_cmd->add_option("--tokens", demo.tokens, "matrix size")->capture_default_str();
  demo_cmd->add_option("--blocks", demo.blocks, "ground-truth blocks")->capture_default_str();
  demo_cmd->add_option("--noise", demo.noise, "label flip rate")->capture_default_str();
  demo_cmd->add_option("--jitter", demo.jitter, "Gaussian logit noise")->capture_default_str();
  demo_cmd->add_option("--margin", demo.margin, "unary logit magnitude")->capture_default_str();
  demo_cmd->add_option("--seed", demo.seed, "random seed")->capture_default_str();
  demo_cmd->add_option("--iterations", demo.iterations, "mean-field iterations T")->capture_default_str();
  demo_cmd->add_option("--weight", demo.weight, "rule weight")->capture_default_str();

  cli::AucprOptions auc;
  auto* auc_cmd = app.add_subcommand("aucpr", "area under the precision-recall curve");
  auc_cmd->add_option("--predictions", auc.predictions, "marginal CSV or 'ATOM score' lines")
      ->required()
      ->check(CLI::ExistingFile);
  auc_cmd->add_option("--truth", auc.truth, "true facts in evidence syntax")->required()->check(CLI::ExistingFile);

  cli::CheckOptions check;
  auto* check_cmd = app.add_subcommand("check", "oracle equivalence suite on random instances");
  check_cmd->add_option("--instances", check.instances, "random instances")->capture_default_str();
  check_cmd->add_option("--seed", check.seed, "random seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kUsage;
  }

  if (*infer_cmd) {
    if (!evidence.empty()) infer.evidence = evidence;
    if (!unary.empty()) infer.unary = unary;
    if (!query.empty()) infer.query = query;
    if (!output.empty()) infer.output = output;
    return cli::cmd_infer(infer, std::cout, std::cerr);
  }
  if (*plan_cmd) {
    if (!plan_rules.empty()) plan.rules = plan_rules;
    return cli::cmd_plan(plan, std::cout, std::cerr);
  }
  if (*demo_cmd) return cli::cmd_demo_transitivity(demo, std::cout, std::cerr);
  if (*auc_cmd) return cli::cmd_aucpr(auc, std::cout, std::cerr);
  if (*check_cmd) return cli::cmd_check(check, std::cout, std::cerr);
  return cli::kUsage;
}
