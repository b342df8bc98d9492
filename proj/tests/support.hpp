#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "logicmp/engine.hpp"
#include "logicmp/fol.hpp"
#include "logicmp/io.hpp"
#include "logicmp/kb.hpp"

namespace testing {

inline std::string fixture(const std::string& name) { return std::string(LOGICMP_FIXTURES) + "/" + name; }

struct Smoke {
  logicmp::RuleSet rules;
  logicmp::KnowledgeBase kb;
  logicmp::UnaryTable phi;
};

// Entities seeded as {A, B} so index order matches the atom listing A, B.
inline Smoke load_smoke() {
  auto rules = logicmp::parse_rules(logicmp::read_file(fixture("smoke.rules")));
  auto kb = logicmp::load_evidence(logicmp::read_file(fixture("smoke.evidence")), rules.predicates, {"A", "B"});
  auto phi = logicmp::load_unary(logicmp::read_file(fixture("smoke.unary")), kb);
  return {std::move(rules), std::move(kb), std::move(phi)};
}

// Plain two-pass softmax, kept apart from the library's version.
inline std::vector<double> softmax(const std::vector<double>& logits) {
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  std::vector<double> out;
  double z = 0.0;
  for (double v : logits) {
    out.push_back(std::exp(v - m));
    z += out.back();
  }
  for (double& v : out) v /= z;
  return out;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace testing
