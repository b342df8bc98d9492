#include "logicmp/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <random>

#include "logicmp/error.hpp"
#include "logicmp/io.hpp"
#include "logicmp/oracle.hpp"

namespace logicmp::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kDataError;
  }
}

std::string fmt(const char* format, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, value);
  return buf;
}

std::map<std::string, double> parse_weights(const std::vector<std::string>& items, const RuleSet& rules) {
  std::map<std::string, double> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--weight expects NAME=VALUE, got '" + item + "'");
    const std::string name = item.substr(0, eq);
    double value = 0.0;
    const char* first = item.data() + eq + 1;
    const char* last = item.data() + item.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
      throw UsageError("invalid weight value in '" + item + "'");
    }
    bool known = std::any_of(rules.formulas.begin(), rules.formulas.end(),
                             [&](const CnfFormula& f) { return f.name == name; });
    if (!known) throw UsageError("--weight names unknown formula '" + name + "'");
    out[name] = value;
  }
  return out;
}

void print_plan(const ContractionPlan& p, std::ostream& out) {
  out << format_plan(p);
  std::string letters;
  for (const auto& in : p.spec.inputs) letters += in;
  letters += p.spec.output;
  std::sort(letters.begin(), letters.end());
  letters.erase(std::unique(letters.begin(), letters.end()), letters.end());
  const bool reducible = !p.spec.inputs.empty() && p.max_intermediate_arity < letters.size();
  out << "M'=" << p.max_intermediate_arity << " cost=" << fmt("%.0f", p.total_cost)
      << " naive=" << fmt("%.0f", p.naive_cost);
  if (p.total_cost > 0) out << " ratio=" << fmt("%g", p.naive_cost / p.total_cost);
  out << (p.spec.inputs.empty() ? " empty-premise" : reducible ? " reducible" : " non-reducible") << "\n";
}

}  // namespace

int cmd_infer(const InferOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    if (options.iterations < 1) throw UsageError("--iterations must be at least 1");
    if (options.format != "csv" && options.format != "json") throw UsageError("--format must be csv or json");
    if (!(options.damping >= 0.0 && options.damping <= 1.0)) throw UsageError("--damping must lie in [0, 1]");

    const RuleSet rules = parse_rules(read_file(options.rules));
    for (const auto& w : rules.warnings) err << "warning: " << w << "\n";
    const auto weights = parse_weights(options.weights, rules);

    std::vector<std::string> seed = rule_constants(rules);
    seed.insert(seed.end(), options.entities.begin(), options.entities.end());
    const std::string evidence = options.evidence ? read_file(*options.evidence) : std::string();
    const KnowledgeBase kb = load_evidence(evidence, rules.predicates, seed);
    const UnaryTable phi = options.unary ? load_unary(read_file(*options.unary), kb) : zero_table(kb);
    std::optional<std::vector<GroundAtom>> query;
    if (options.query) query = load_query(read_file(*options.query), kb);

    CompileOptions copts;
    copts.skip_tautological_groundings = options.skip_tautologies;
    const auto compiled = compile(rules, kb, copts);
    const ObservationMask mask = kb.mask();

    EngineConfig config;
    config.iterations = options.iterations;
    config.weight_overrides = weights;
    config.damping = options.damping;

    if (options.oracle) {
      EngineConfig one = config;
      one.iterations = 1;
      one.damping = 0.0;
      const MarginalTable engine_q = iterate(phi, compiled, one, mask);
      oracle::Options oopts;
      oopts.skip_tautological_groundings = options.skip_tautologies;
      oopts.weight_overrides = weights;
      const MarginalTable oracle_q = oracle::naive_mf_step(initial_marginals(phi, mask), phi, rules, kb, oopts);
      const double diff = max_abs_diff(engine_q, oracle_q);
      err << "oracle check (T=1): max |engine - naive| = " << fmt("%.3e", diff) << "\n";
      if (!(diff <= 1e-9)) {
        err << "oracle check FAILED: divergence exceeds 1e-9\n";
        return kCheckFailed;
      }
    }

    const InferenceResult result = run_inference(phi, compiled, config, mask);
    err << "entities: " << kb.num_entities() << "\n";
    err << "iterations: " << result.seconds_per_iteration.size() << "\n";
    for (std::size_t t = 0; t < result.seconds_per_iteration.size(); ++t) {
      err << "iteration " << t + 1 << ": " << fmt("%.6f", result.seconds_per_iteration[t]) << " s\n";
    }
    for (const auto& ci : compiled) {
      err << "rule " << ci.implication.clause_id << " h=" << ci.implication.hypothesis_index << " einsum "
          << ci.spec.to_string() << " M'=" << ci.plan.max_intermediate_arity << "\n";
    }

    const auto records = marginal_records(kb, result.marginals, query, options.include_observed);
    const std::string text = options.format == "json" ? format_json(records) : format_csv(records);
    if (options.output) {
      std::ofstream file(*options.output, std::ios::binary);
      if (!file) throw DataError("cannot write '" + *options.output + "'");
      file << text;
    } else {
      out << text;
    }
    return kOk;
  });
}

int cmd_plan(const PlanOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    if (!options.rules && options.specs.empty()) throw UsageError("plan needs --rules or --spec");
    if (options.domain_size < 1) throw UsageError("--domain-size must be at least 1");
    auto extents_for = [&](const EinsumSpec& spec) {
      Extents e;
      for (const auto& in : spec.inputs) {
        for (char c : in) e[c] = options.domain_size;
      }
      for (char c : spec.output) e[c] = options.domain_size;
      return e;
    };
    if (options.rules) {
      const RuleSet rules = parse_rules(read_file(*options.rules));
      for (const auto& w : rules.warnings) err << "warning: " << w << "\n";
      for (const auto& f : rules.formulas) {
        for (const auto& clause : split_cnf(f)) {
          for (std::size_t h = 0; h < clause.literals.size(); ++h) {
            const EinsumSpec spec = implication_spec(clause, h);
            out << "implication " << clause.id << " h=" << h << " "
                << print_literal(clause.literals[h], rules.predicates) << " einsum " << spec.to_string() << "\n";
            print_plan(plan(spec, extents_for(spec)), out);
          }
        }
      }
    }
    for (const auto& text : options.specs) {
      const EinsumSpec spec = EinsumSpec::parse(text);
      out << "einsum " << spec.to_string() << "\n";
      print_plan(plan(spec, extents_for(spec)), out);
    }
    return kOk;
  });
}

int cmd_demo_transitivity(const DemoConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    if (config.tokens < 3) throw UsageError("--tokens must be at least 3");
    if (config.iterations < 1) throw UsageError("--iterations must be at least 1");
    const DemoReport r = run_transitivity_demo(config);
    out << "tokens: " << r.tokens << " blocks: " << config.blocks << " noise: " << fmt("%g", config.noise)
        << " seed: " << config.seed << " iterations: " << config.iterations << " weight: " << fmt("%g", config.weight)
        << "\n";
    out << "violations before: " << r.violations_before << "\n";
    out << "violations after: " << r.violations_after << "\n";
    out << "accuracy before: " << fmt("%.4f", r.accuracy_before) << "\n";
    out << "accuracy after: " << fmt("%.4f", r.accuracy_after) << "\n";
    out << "M': " << r.max_intermediate_arity << "\n";
    for (std::size_t t = 0; t < r.seconds_per_iteration.size(); ++t) {
      out << "iteration " << t + 1 << ": " << fmt("%.6f", r.seconds_per_iteration[t]) << " s\n";
    }
    return kOk;
  });
}

int cmd_aucpr(const AucprOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const auto items = align(load_predictions(read_file(options.predictions)), load_truth(read_file(options.truth)));
    out << fmt("%.9f", aucpr(items)) << "\n";
    return kOk;
  });
}

int cmd_check(const CheckOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    std::mt19937_64 rng(options.seed);
    double engine_oracle = 0.0;
    double shortcut = 0.0;
    bool cnf_identical = true;
    bool multiclass_identical = true;
    for (std::size_t k = 0; k < options.instances; ++k) {
      {
        auto inst = oracle::random_instance(rng);
        const auto mask = inst.kb.mask();
        EngineConfig one;
        one.iterations = 1;
        const auto q_engine = iterate(inst.phi, compile(inst.rules, inst.kb), one, mask);
        const auto q0 = initial_marginals(inst.phi, mask);
        const auto q_full = oracle::naive_mf_step(q0, inst.phi, inst.rules, inst.kb);
        oracle::Options shortcut_opts;
        shortcut_opts.premise_product = true;
        const auto q_short = oracle::naive_mf_step(q0, inst.phi, inst.rules, inst.kb, shortcut_opts);
        engine_oracle = std::max(engine_oracle, max_abs_diff(q_engine, q_full));
        shortcut = std::max(shortcut, max_abs_diff(q_short, q_full));
      }
      {
        oracle::InstanceOptions cnf;
        cnf.max_cnf_clauses = 3;
        auto inst = oracle::random_instance(rng, cnf);
        const auto mask = inst.kb.mask();
        EngineConfig cfg;
        cfg.iterations = 3;
        const auto a = iterate(inst.phi, compile(inst.rules, inst.kb), cfg, mask);
        const auto b = iterate(inst.phi, compile(oracle::flatten_cnf(inst.rules), inst.kb), cfg, mask);
        cnf_identical = cnf_identical && a == b;
      }
      {
        oracle::InstanceOptions binary;
        binary.binary_only = true;
        auto inst = oracle::random_instance(rng, binary);
        const auto mask = inst.kb.mask();
        EngineConfig cfg;
        cfg.iterations = 3;
        CompileOptions forced;
        forced.force_multiclass_path = true;
        const auto a = iterate(inst.phi, compile(inst.rules, inst.kb), cfg, mask);
        const auto b = iterate(inst.phi, compile(inst.rules, inst.kb, forced), cfg, mask);
        multiclass_identical = multiclass_identical && a == b;
      }
    }
    const bool ok_engine = engine_oracle <= 1e-9;
    const bool ok_shortcut = shortcut <= 1e-12;
    out << (ok_engine ? "PASS" : "FAIL") << " engine vs naive mean-field: max |diff| = " << fmt("%.3e", engine_oracle)
        << " (tol 1e-9)\n";
    out << (ok_shortcut ? "PASS" : "FAIL") << " premise-product vs full expectation: max |diff| = "
        << fmt("%.3e", shortcut) << " (tol 1e-12)\n";
    out << (cnf_identical ? "PASS" : "FAIL") << " CNF vs split clauses: bit-identical\n";
    out << (multiclass_identical ? "PASS" : "FAIL") << " value-set path vs binary path: bit-identical\n";
    out << "instances: " << options.instances << " seed: " << options.seed << "\n";
    return ok_engine && ok_shortcut && cnf_identical && multiclass_identical ? kOk : kCheckFailed;
  });
}

}  // namespace logicmp::cli
