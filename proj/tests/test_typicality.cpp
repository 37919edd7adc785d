#include "testing.hpp"

#include <cmath>

#include "wynerlab/rng.hpp"
#include "wynerlab/typicality.hpp"

using namespace wynerlab;
using Catch::Approx;

namespace {

Sequence bits(std::size_t idx, std::size_t n) {
  Sequence s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = static_cast<Symbol>((idx >> i) & 1u);
  return s;
}

// sum of Q^n over every binary sequence that passes the membership test
double brute_typical_prob(const FinitePmf& q, std::size_t n, double eps) {
  double acc = 0;
  for (std::size_t i = 0; i < (std::size_t{1} << n); ++i) {
    const auto s = bits(i, n);
    if (is_typical(s, q, eps)) acc += std::exp(log_product_mass(q, s));
  }
  return acc;
}

}  // namespace

TEST_CASE("is_typical examples", "[typicality]") {
  const FinitePmf half = FinitePmf::uniform(2);
  CHECK(is_typical(Sequence{0, 1, 0, 1}, half, 0.01));
  CHECK_FALSE(is_typical(Sequence{0, 0, 2}, FinitePmf({0.5, 0.5, 0.0}), 1.0));
  CHECK(is_typical(Sequence{1, 1, 1, 1, 1, 1, 0, 0, 0, 0}, half, 0.2));
  CHECK_FALSE(is_typical(Sequence{1, 1, 1, 1, 1, 1, 1, 0, 0, 0}, half, 0.2));
  CHECK(is_typical(Sequence{1, 1, 1, 1, 1, 1, 0, 0, 0, 0}, TypicalSpec(half, 10, 0.2)));
  CHECK_THROWS_AS(TypicalSpec(half, 10, 0.0), ConfigError);
}

TEST_CASE("typical_prob_exact examples", "[typicality]") {
  for (std::size_t n : {1, 7, 40}) CHECK(typical_prob_exact(TypicalSpec(FinitePmf::uniform(2), n, 1.0)) == Approx(1.0));
  CHECK(typical_prob_exact(TypicalSpec(FinitePmf::uniform(2), 1, 0.1)) == 0.0);

  const FinitePmf q({0.9, 0.1});
  const double exact = typical_prob_exact(TypicalSpec(q, 50, 0.5));
  Rng g = make_stream(51, 1, 0);
  const std::size_t trials = 1000000;
  std::size_t hits = 0;
  Sequence s(50);
  for (std::size_t t = 0; t < trials; ++t) {
    for (auto& v : s) v = uniform01(g) < 0.1 ? 1 : 0;
    hits += is_typical(s, q, 0.5);
  }
  const double p = static_cast<double>(hits) / trials;
  CHECK(std::abs(p - exact) <= 3.0 * std::sqrt(exact * (1 - exact) / trials));

  CHECK_THROWS_AS(typical_prob_exact(TypicalSpec(q, 201, 0.5)), ResourceError);
}

TEST_CASE("typical_prob_exact against enumeration", "[typicality]") {
  for (double p1 : {0.3, 0.5, 0.8})
    for (std::size_t n : {6, 10, 13})
      for (double eps : {0.1, 0.3, 0.6}) {
        const FinitePmf q({1 - p1, p1});
        CHECK(typical_prob_exact(TypicalSpec(q, n, eps)) == Approx(brute_typical_prob(q, n, eps)).margin(1e-13));
      }
}

TEST_CASE("cond_typical_defect_exact examples", "[typicality]") {
  const FinitePmf qw = FinitePmf::uniform(2);
  const ConditionalPmf det({{1, 0}, {0, 1}});
  CHECK(cond_typical_defect_exact(qw, det, Sequence{0, 1, 0, 1, 1, 0}, 0.3, 0.1) == Approx(0.0).margin(1e-15));

  // exhaustive over all 2^8 conditional draws
  const ConditionalPmf cond({{0.7, 0.3}, {0.2, 0.8}});
  const Sequence w{0, 1, 1, 0, 0, 1, 0, 1};
  for (auto [eps, epsp] : {std::pair{0.6, 0.3}, std::pair{0.9, 0.2}, std::pair{0.4, 0.1}}) {
    double inside = 0;
    for (std::size_t i = 0; i < 256; ++i) {
      const auto x = bits(i, 8);
      if (is_cond_typical(w, x, qw, cond, eps)) inside += std::exp(log_product_mass(cond, w, x));
    }
    CHECK(cond_typical_defect_exact(qw, cond, w, eps, epsp) == Approx(1 - inside).margin(1e-13));
  }

  CHECK_THROWS_AS(cond_typical_defect_exact(qw, cond, w, 0.3, 0.3), ConfigError);
  CHECK_THROWS_AS(cond_typical_defect_exact(qw, cond, Sequence{0, 0, 0, 0, 0, 0, 0, 1}, 0.6, 0.3), DomainError);
}

TEST_CASE("contyplem_bound examples", "[typicality]") {
  CHECK(contyplem_bound(1.0, 0.5, 0, 0.3, 2, 2) == Approx(8.0));
  const double a = 0.3 / 1.1, b = 0.3 / 0.9;
  CHECK(contyplem_bound(0.4, 0.1, 100, 0.1, 2, 2) ==
        Approx(4 * (std::exp(-a * a * 10.0 / 3.0) + std::exp(-b * b * 10.0 / 2.0))));
  double prev = kInf;
  for (std::size_t n = 0; n <= 5000; n += 250) {
    const double v = contyplem_bound(0.4, 0.2, n, 0.1, 2, 2);
    CHECK(v < prev);
    prev = v;
  }
  CHECK(contyplem_bound(0.4, 0.2, 20000, 0.1, 2, 2) < 1e-6);
  CHECK_THROWS_AS(contyplem_bound(0.2, 0.4, 10, 0.1, 2, 2), ConfigError);
  CHECK_THROWS_AS(contyplem_bound(0.4, 0.2, 10, 0.0, 2, 2), ConfigError);
}

TEST_CASE("property: typical probability is monotone in eps", "[typicality][property]") {
  for (double p1 : {0.2, 0.45})
    for (std::size_t n : {20, 60, 150}) {
      double prev = 0;
      for (int i = 1; i <= 40; ++i) {
        const double v = typical_prob_exact(TypicalSpec(FinitePmf({1 - p1, p1}), n, 0.025 * i));
        REQUIRE(v >= prev - 1e-15);
        prev = v;
      }
    }
}

TEST_CASE("property: typical probability approaches one", "[typicality][property]") {
  // lattice effects break monotonicity at small n, so compare well separated lengths
  const FinitePmf q({0.3, 0.7});
  const double a = typical_prob_exact(TypicalSpec(q, 20, 0.2));
  const double b = typical_prob_exact(TypicalSpec(q, 80, 0.2));
  const double c = typical_prob_exact(TypicalSpec(q, 200, 0.2));
  CHECK(a < b);
  CHECK(b < c);
  CHECK(c > 0.9);
}

TEST_CASE("property: members satisfy the TV half-bound", "[typicality][property]") {
  Rng g = make_stream(51, 2, 0);
  for (std::size_t k = 0; k < 2000; ++k) {
    const auto q = random_pmf(3, g);
    Sequence s(30);
    for (auto& v : s) v = static_cast<Symbol>(sample_index(q.mass(), g));
    const double eps = 0.1 + uniform01(g);
    if (!is_typical(s, q, eps)) continue;
    const auto t = SequenceType::of(s, 3).empirical();
    double l1 = 0;
    for (std::size_t x = 0; x < 3; ++x) l1 += std::abs(t[x] - q[x]);
    REQUIRE(l1 / 2 <= eps / 2 + 1e-12);
  }
}

TEST_CASE("property: defect below the uniform bound", "[typicality][property]") {
  for (std::size_t k = 0; k < 5; ++k) {
    Rng g = make_stream(51, 3, k);
    const auto qw = random_pmf(2, g);
    const auto cond = random_conditional(2, 2, g);
    for (std::size_t n = 8; n <= 64; n += 4) {
      const auto ex = cond_defect_extremes(qw, cond, n, 0.5, 0.25);
      REQUIRE(ex.max_defect <= contyplem_bound(0.5, 0.25, n, cond.min_positive(), 2, 2));
    }
  }
}
