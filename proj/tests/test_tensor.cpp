#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "logicmp/error.hpp"
#include "logicmp/oracle.hpp"
#include "logicmp/tensor.hpp"

using namespace logicmp;

namespace {

DenseTensor random_tensor(std::mt19937_64& rng, Shape shape) {
  std::normal_distribution<double> z;
  DenseTensor t(std::move(shape));
  for (auto& v : t.data()) v = z(rng);
  return t;
}

double max_diff(const DenseTensor& a, const DenseTensor& b) {
  REQUIRE(a.shape() == b.shape());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Random spec over at most three letters, each input of rank 1..3.
EinsumSpec random_spec(std::mt19937_64& rng) {
  const std::string pool = "abc";
  const std::size_t letters = 1 + rng() % 3;
  EinsumSpec spec;
  const std::size_t n_inputs = 1 + rng() % 3;
  std::string seen;
  for (std::size_t k = 0; k < n_inputs; ++k) {
    std::string sub;
    const std::size_t rank = 1 + rng() % 3;
    for (std::size_t i = 0; i < rank; ++i) sub.push_back(pool[rng() % letters]);
    spec.inputs.push_back(sub);
    seen += sub;
  }
  for (char c : pool.substr(0, letters)) {
    if (seen.find(c) != std::string::npos && (rng() & 1)) spec.output.push_back(c);
  }
  return spec;
}

std::vector<DenseTensor> inputs_for(std::mt19937_64& rng, const EinsumSpec& spec, const Extents& ext) {
  std::vector<DenseTensor> out;
  for (const auto& sub : spec.inputs) {
    Shape s;
    for (char c : sub) s.push_back(ext.at(c));
    out.push_back(random_tensor(rng, s));
  }
  return out;
}

}  // namespace

TEST_CASE("einsum: identity contraction") {
  const DenseTensor eye({2, 2}, {1, 0, 0, 1});
  const DenseTensor m({2, 2}, {2, 3, 4, 5});
  const DenseTensor inputs[] = {eye, m};
  CHECK(einsum(EinsumSpec::parse("ab,bc->ac"), inputs) == m);
}

TEST_CASE("einsum: vector through all-ones matrix") {
  const DenseTensor inputs[] = {DenseTensor({2}, {0.5, 0.5}), DenseTensor({2, 2}, 1.0)};
  const auto out = einsum(EinsumSpec::parse("a,ab->b"), inputs);
  CHECK(out == DenseTensor({2}, {1.0, 1.0}));
}

TEST_CASE("einsum: broadcast output letter") {
  const DenseTensor inputs[] = {DenseTensor({2}, {1, 2})};
  const auto out = einsum(EinsumSpec::parse("a->ab"), inputs, {{'b', 3}});
  CHECK(out == DenseTensor({2, 3}, {1, 1, 1, 2, 2, 2}));
}

TEST_CASE("einsum: errors") {
  const DenseTensor inputs[] = {DenseTensor({2, 3}), DenseTensor({2, 2})};
  CHECK_THROWS_AS(einsum(EinsumSpec::parse("ab,bc->ac"), inputs), DataError);
  const DenseTensor one[] = {DenseTensor({2})};
  CHECK_THROWS_AS(einsum(EinsumSpec::parse("a->ab"), one), DataError);
  CHECK_THROWS_AS(EinsumSpec::parse("aB->a"), DataError);
  CHECK_THROWS_AS(EinsumSpec::parse("ab"), DataError);
}

TEST_CASE("spec text round-trips") {
  for (const char* s : {"ab,bc->ac", "a->ab", "->", "pi,qj,ijkl,rk,sl->pqrs", "aa->a"}) {
    CHECK(EinsumSpec::parse(s).to_string() == s);
  }
}

TEST_CASE("einsum matches the nested-loop reference on small random specs") {
  std::mt19937_64 rng(17);
  for (int draw = 0; draw < 300; ++draw) {
    const auto spec = random_spec(rng);
    Extents ext{{'a', 1 + rng() % 4}, {'b', 1 + rng() % 4}, {'c', 1 + rng() % 4}};
    const auto in = inputs_for(rng, spec, ext);
    const auto got = einsum(spec, in);
    const auto want = oracle::reference_einsum(spec, in);
    INFO(spec.to_string());
    CHECK(max_diff(got, want) <= 1e-12);
  }
}

TEST_CASE("einsum is multilinear in each input") {
  std::mt19937_64 rng(23);
  const auto spec = EinsumSpec::parse("ab,bc->ac");
  for (int draw = 0; draw < 20; ++draw) {
    const auto a = random_tensor(rng, {3, 4});
    const auto b = random_tensor(rng, {3, 4});
    const auto c = random_tensor(rng, {4, 2});
    const double alpha = 0.7, beta = -1.3;
    const DenseTensor mix[] = {add(scale(a, alpha), scale(b, beta)), c};
    const DenseTensor in_a[] = {a, c};
    const DenseTensor in_b[] = {b, c};
    const auto lhs = einsum(spec, mix);
    const auto rhs = add(scale(einsum(spec, in_a), alpha), scale(einsum(spec, in_b), beta));
    CHECK(max_diff(lhs, rhs) <= 1e-12);
  }
}

TEST_CASE("swapping inputs with their subscripts leaves the output unchanged") {
  std::mt19937_64 rng(29);
  const auto a = random_tensor(rng, {3, 4});
  const auto b = random_tensor(rng, {4, 2});
  const DenseTensor ab[] = {a, b};
  const DenseTensor ba[] = {b, a};
  CHECK(max_diff(einsum(EinsumSpec::parse("ab,bc->ac"), ab), einsum(EinsumSpec::parse("bc,ab->ac"), ba)) <= 1e-14);
}

TEST_CASE("repeated letter extracts the diagonal") {
  std::mt19937_64 rng(31);
  const auto t = random_tensor(rng, {4, 4});
  const DenseTensor in[] = {t};
  const auto d = einsum(EinsumSpec::parse("aa->a"), in);
  for (std::size_t i = 0; i < 4; ++i) CHECK(d[i] == t[i * 4 + i]);
}

TEST_CASE("pairwise contract agrees with the reference, including diagonals") {
  std::mt19937_64 rng(37);
  struct Case {
    const char *l, *r, *o;
  };
  const Case cases[] = {{"ab", "bc", "ac"}, {"ab", "bc", "ca"}, {"abc", "cb", "a"},   {"ab", "ac", "bc"},
                        {"aab", "b", "a"},  {"ab", "cd", "abcd"}, {"abc", "abd", "dbc"}, {"ab", "ab", ""}};
  for (const auto& c : cases) {
    Extents ext{{'a', 3}, {'b', 2}, {'c', 4}, {'d', 2}};
    const auto spec = EinsumSpec::parse(std::string(c.l) + "," + c.r + "->" + c.o);
    const auto in = inputs_for(rng, spec, ext);
    INFO(spec.to_string());
    CHECK(max_diff(contract(c.l, in[0], c.r, in[1], c.o), oracle::reference_einsum(spec, in)) <= 1e-12);
  }
}

TEST_CASE("reduce, broadcast and permute") {
  const DenseTensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(reduce("ab", t, "a") == DenseTensor({2}, {6, 15}));
  CHECK(reduce("ab", t, "ba") == DenseTensor({3, 2}, {1, 4, 2, 5, 3, 6}));
  const std::size_t axes[] = {1, 0};
  CHECK(permute(t, axes) == reduce("ab", t, "ba"));
  CHECK(broadcast("a", DenseTensor({2}, {1, 2}), "ba", {{'b', 2}}) == DenseTensor({2, 2}, {1, 2, 1, 2}));
}

TEST_CASE("slice_fixed") {
  const DenseTensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(slice_fixed(t, 0, 1) == DenseTensor({3}, {4, 5, 6}));
  CHECK(slice_fixed(t, 1, 2) == DenseTensor({2}, {3, 6}));
  const auto s = slice_fixed(DenseTensor({3}, {7, 8, 9}), 0, 2);
  CHECK(s.rank() == 0);
  CHECK(s[0] == 9.0);
  CHECK_THROWS_AS(slice_fixed(t, 0, 2), DataError);
  CHECK_THROWS_AS(slice_fixed(t, 2, 0), DataError);
}

TEST_CASE("slicing equals contracting with a one-hot indicator") {
  std::mt19937_64 rng(41);
  for (std::size_t pos = 0; pos < 3; ++pos) {
    const auto t = random_tensor(rng, {3, 3});
    DenseTensor hot({3}, 0.0);
    hot[pos] = 1.0;
    const DenseTensor in[] = {t, hot};
    CHECK(max_diff(slice_fixed(t, 1, pos), einsum(EinsumSpec::parse("ab,b->a"), in)) <= 1e-15);
  }
}

TEST_CASE("elementwise operations") {
  const auto s = softmax_lastaxis(DenseTensor({1, 2}, {0.0, 0.0}));
  CHECK(s[0] == 0.5);
  CHECK(s[1] == 0.5);
  CHECK(sub_from_one(DenseTensor({1}, {0.3}))[0] == doctest::Approx(0.7).epsilon(1e-15));
  CHECK_THROWS_AS(add(DenseTensor({2}), DenseTensor({3})), DataError);

  std::mt19937_64 rng(43);
  const auto logits = random_tensor(rng, {5, 3});
  const auto e = exp(logits);
  const auto sm = softmax_lastaxis(logits);
  for (std::size_t row = 0; row < 5; ++row) {
    double z = 0.0, total = 0.0;
    for (std::size_t v = 0; v < 3; ++v) z += e[row * 3 + v];
    for (std::size_t v = 0; v < 3; ++v) {
      CHECK(std::abs(sm[row * 3 + v] - e[row * 3 + v] / z) <= 1e-12);
      total += sm[row * 3 + v];
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("softmax stays finite for large logits") {
  const auto s = softmax_lastaxis(DenseTensor({1, 2}, {1000.0, 0.0}));
  CHECK(s.all_finite());
  CHECK(s[0] == 1.0);
}

TEST_CASE("tensor dump round-trips bit-exactly") {
  std::mt19937_64 rng(47);
  const auto t = random_tensor(rng, {2, 3, 2});
  std::stringstream ss;
  write_tensor(ss, t);
  CHECK(ss.str().rfind("shape: 2 3 2\n", 0) == 0);
  CHECK(read_tensor(ss) == t);
}

TEST_CASE("batched product kernel") {
  // Two batches of (2x3)(3x9); 9 columns exercise the blocked and tail paths.
  std::mt19937_64 rng(53);
  const auto a = random_tensor(rng, {2, 2, 3});
  const auto b = random_tensor(rng, {2, 3, 9});
  DenseTensor c({2, 2, 9}, 0.0);
  gemm_batched(2, 2, 3, 9, a.data().data(), b.data().data(), c.data().data());
  CHECK(max_diff(c, oracle::reference_einsum(EinsumSpec::parse("zik,zkj->zij"), {a, b})) <= 1e-12);
}
