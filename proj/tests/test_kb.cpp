#include <algorithm>
#include <random>

#include "doctest.h"
#include "logicmp/error.hpp"
#include "logicmp/kb.hpp"
#include "support.hpp"

using namespace logicmp;

namespace {

const RuleSet& smoke_rules() {
  static const RuleSet r =
      parse_rules("predicate smoke(p)\npredicate friend(p,p)\npredicate cancer(p)\n");
  return r;
}

}  // namespace

TEST_CASE("load_evidence: smoke facts") {
  const auto kb = load_evidence("friend(B,A)\ncancer(B)\n", smoke_rules().predicates);
  CHECK(kb.num_entities() == 2);
  CHECK(kb.observations().size() == 2);
  CHECK(kb.entities() == std::vector<std::string>{"B", "A"});
  const GroundAtom f{1, {0, 1}};
  CHECK(kb.observed_label(f) == 1u);
}

TEST_CASE("load_evidence: seed entities come first") {
  const auto kb = load_evidence("friend(B,A)\n", smoke_rules().predicates, {"A", "C"});
  CHECK(kb.entities() == std::vector<std::string>{"A", "C", "B"});
}

TEST_CASE("load_evidence: empty domain is an error") {
  CHECK_THROWS_AS(load_evidence("", smoke_rules().predicates), DataError);
  CHECK_THROWS_AS(load_evidence("# only a comment\n", smoke_rules().predicates), DataError);
}

TEST_CASE("load_evidence: duplicates collapse, conflicts do not") {
  const auto kb = load_evidence("friend(B,A)\nfriend(B,A)\n", smoke_rules().predicates);
  CHECK(kb.observations().size() == 1);
  CHECK_THROWS_AS(load_evidence("friend(B,A)\n!friend(B,A)\n", smoke_rules().predicates), DataError);
}

TEST_CASE("load_evidence: syntax and semantic errors") {
  const auto& p = smoke_rules().predicates;
  CHECK_THROWS_AS(load_evidence("friend(B)\n", p), DataError);
  CHECK_THROWS_AS(load_evidence("enemy(B,A)\n", p), DataError);
  CHECK_THROWS_AS(load_evidence("friend(B, A)\n", p), ParseError);
  CHECK_THROWS_AS(load_evidence("friend(B,A\n", p), ParseError);
  CHECK_THROWS_AS(load_evidence("smoke(A)=maybe\n", p), DataError);
  try {
    load_evidence("smoke(A)\n\n  smoke(A)x\n", p);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("load_evidence: multi-class labels") {
  const auto r = parse_rules("predicate label(t) labels {O,B-PER,I-PER}\npredicate next(t,t)\n");
  const auto kb = load_evidence("label(t0)=I-PER\nnext(t0,t1)\n!next(t1,t0)\n", r.predicates);
  CHECK(kb.observed_label(GroundAtom{0, {0}}) == 2u);
  CHECK(kb.observed_label(GroundAtom{1, {1, 0}}) == 0u);
  CHECK_THROWS_AS(load_evidence("label(t0)=X\n", r.predicates), DataError);
  // A bare multi-class atom names no label.
  CHECK_THROWS_AS(load_evidence("label(t0)\n", r.predicates), DataError);
}

TEST_CASE("variable_universe") {
  const auto s = testing::load_smoke();
  const auto u = variable_universe(s.kb);
  std::size_t total = 0;
  for (auto c : u) total += c;
  CHECK(total == 6);

  const auto r = parse_rules("predicate R(x,x)\n");
  const auto all = load_evidence("R(A,A)\nR(A,B)\n!R(B,A)\nR(B,B)\n", r.predicates);
  CHECK(variable_universe(all) == std::vector<std::size_t>{0});

  const KnowledgeBase three(r.predicates, {"x", "y", "z"});
  CHECK(variable_universe(three) == std::vector<std::size_t>{9});
}

TEST_CASE("property: unobserved plus observed cells fill every predicate") {
  std::mt19937_64 rng(101);
  const auto& p = smoke_rules().predicates;
  const std::vector<std::string> names{"A", "B", "C", "D"};
  for (int draw = 0; draw < 50; ++draw) {
    std::string text;
    for (int line = 0; line < 8; ++line) {
      const auto a = names[rng() % 4], b = names[rng() % 4];
      switch (rng() % 3) {
        case 0: text += "smoke(" + a + ")\n"; break;
        case 1: text += "friend(" + a + "," + b + ")\n"; break;
        default: text += "cancer(" + b + ")\n"; break;
      }
    }
    const auto kb = load_evidence(text, p, names);
    const auto u = variable_universe(kb);
    const auto mask = kb.mask();
    for (std::size_t r = 0; r < p.size(); ++r) {
      const auto observed = static_cast<std::size_t>(std::count(mask.observed[r].begin(), mask.observed[r].end(), 1));
      CHECK(u[r] + observed == int_pow(4, p[r].arity));
    }
  }
}

TEST_CASE("property: observation set ignores line order") {
  std::vector<std::string> lines{"friend(A,B)", "smoke(C)", "!cancer(A)", "friend(C,C)", "cancer(B)"};
  const std::vector<std::string> seed{"A", "B", "C"};
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& l : v) s += l + "\n";
    return s;
  };
  const auto base = load_evidence(join(lines), smoke_rules().predicates, seed).observations();
  std::mt19937_64 rng(103);
  for (int draw = 0; draw < 20; ++draw) {
    std::shuffle(lines.begin(), lines.end(), rng);
    CHECK(load_evidence(join(lines), smoke_rules().predicates, seed).observations() == base);
  }
}

TEST_CASE("cells and atoms map back and forth") {
  const KnowledgeBase kb(smoke_rules().predicates, {"A", "B", "C"});
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t cell = 0; cell < kb.num_cells(r); ++cell) CHECK(kb.cell_index(kb.cell_atom(r, cell)) == cell);
  }
  CHECK(kb.atom_text(GroundAtom{1, {2, 0}}) == "friend(C,A)");
  CHECK(kb.cell_index(GroundAtom{1, {2, 0}}) == 6);
}

TEST_CASE("knowledge base rejects an empty domain and duplicate entities collapse") {
  CHECK_THROWS_AS(KnowledgeBase(smoke_rules().predicates, {}), DataError);
  const KnowledgeBase kb(smoke_rules().predicates, {"A", "A", "B"});
  CHECK(kb.num_entities() == 2);
}
