#include "testing.hpp"

#include <cmath>

#include "wynerlab/divergence.hpp"
#include "wynerlab/rng.hpp"

using namespace wynerlab;
using Catch::Approx;

namespace {

// the defining sum, evaluated directly
double renyi_direct(const std::vector<double>& p, const std::vector<double>& q, double s) {
  double acc = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0) acc += std::pow(p[i], 1 + s) * std::pow(q[i], -s);
  return std::log(acc) / s;
}

std::vector<double> vec(const FinitePmf& p) { return {p.mass().begin(), p.mass().end()}; }

}  // namespace

TEST_CASE("renyi examples", "[divergence]") {
  const FinitePmf p({0.2, 0.5, 0.3});
  for (double s : {-1.0, -0.5, 0.0, 0.5, 1.0}) CHECK(renyi(p, p, RenyiOrder(s)) == Approx(0.0).margin(1e-15));
  CHECK(renyi(FinitePmf({1, 0}), FinitePmf::uniform(2), RenyiOrder(-1)) == Approx(std::log(2.0)));
  CHECK(renyi(FinitePmf::uniform(2), FinitePmf({0.25, 0.75}), RenyiOrder(1)) == Approx(std::log(4.0 / 3.0)));
  CHECK(renyi(FinitePmf::uniform(2), FinitePmf({1, 0}), RenyiOrder(0.5)) == kInf);
  CHECK_THROWS_AS(renyi(FinitePmf::uniform(2), FinitePmf::uniform(3), RenyiOrder(1)), ConfigError);
  CHECK_THROWS_AS(RenyiOrder(-1.5), ConfigError);
}

TEST_CASE("conditional_renyi examples", "[divergence]") {
  const auto j = JointPmf::from_matrix({{0.1, 0.3}, {0.4, 0.2}});
  CHECK(conditional_renyi(j, conditional(j), RenyiOrder(0.5)) == Approx(0.0).margin(1e-14));

  const auto single = JointPmf::from_matrix({{0.3, 0.7}});
  const ConditionalPmf q({{0.6, 0.4}});
  CHECK(conditional_renyi(single, q, RenyiOrder(1)) ==
        Approx(renyi(FinitePmf({0.3, 0.7}), FinitePmf({0.6, 0.4}), RenyiOrder(1))));

  Rng g = make_stream(21, 1, 0);
  const auto p = random_joint(2, 2, g);
  const auto qc = random_conditional(2, 2, g);
  const auto px = marginal(p, 0);
  std::vector<double> glued;
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t y = 0; y < 2; ++y) glued.push_back(px[x] * qc(x, y));
  for (double s : {-0.5, 0.5, 1.0})
    CHECK(conditional_renyi(p, qc, RenyiOrder(s)) ==
          Approx(renyi_direct({p.mass().begin(), p.mass().end()}, glued, s)).margin(1e-13));
}

TEST_CASE("tv examples", "[divergence]") {
  CHECK(tv(FinitePmf({0.7, 0.3}), FinitePmf({0.7, 0.3})) == 0.0);
  CHECK(tv(FinitePmf({1, 0}), FinitePmf({0, 1})) == 1.0);
  CHECK(tv(FinitePmf({0.7, 0.3}), FinitePmf({0.4, 0.6})) == Approx(0.3));
}

TEST_CASE("binary_renyi examples", "[divergence]") {
  CHECK(binary_renyi(0.3, 0.3, RenyiOrder(0.5)) == Approx(0.0).margin(1e-15));
  CHECK(binary_renyi(1.0, 0.5, RenyiOrder(0)) == Approx(std::log(2.0)));
  CHECK(binary_renyi(0.75, 0.5, RenyiOrder(1)) == Approx(std::log(1.25)));
}

TEST_CASE("sason_inf examples", "[divergence]") {
  CHECK(sason_inf(0.0, RenyiOrder(1)) == 0.0);
  CHECK(sason_inf(1.0, RenyiOrder(0.5)) == kInf);
  const double v = sason_inf(0.5, RenyiOrder(-0.5));
  CHECK(v >= pinsker_lb(0.5, -0.5));
  CHECK(v >= sason_closed_lb(0.5, 0.5, OrderSide::below_one));
  // no grid point does better
  for (int i = 0; i <= 100; ++i) {
    const double q = 0.5 * i / 100.0;
    CHECK(v <= binary_renyi(q + 0.5, q, RenyiOrder(-0.5)) + 1e-12);
  }
}

TEST_CASE("sason_inf at eps = 1 and order zero", "[divergence]") {
  // the only admissible pair is (1,0) against (0,1); D_0 of disjoint supports is infinite
  CHECK(sason_inf(1.0, RenyiOrder(-1)) == kInf);
}

TEST_CASE("pinsker_lb examples", "[divergence]") {
  CHECK(pinsker_lb(0.0, 0.3) == 0.0);
  CHECK(pinsker_lb(1.0, 0.0) == 0.5);
  CHECK(pinsker_lb(0.5, 1.0) == 0.25);
}

TEST_CASE("sason_closed_lb examples", "[divergence]") {
  CHECK(sason_closed_lb(0.75, 0.5, OrderSide::above_one) == 0.0);
  CHECK(sason_closed_lb(1.0 - 1.0 / (4.0 * std::exp(1.0)), 0.5, OrderSide::above_one) == Approx(1.0));
  CHECK(sason_closed_lb(0.5, 0.5, OrderSide::below_one) == 0.0);
  CHECK_THROWS_AS(sason_closed_lb(0.5, 1.5, OrderSide::below_one), ConfigError);
}

TEST_CASE("property: renyi matches the defining sum", "[divergence][property]") {
  for (std::size_t k = 0; k < 300; ++k) {
    Rng g = make_stream(21, 2, k);
    const auto p = random_pmf(4, g), q = random_pmf(4, g);
    for (double s : {-0.5, 0.5, 1.0}) REQUIRE(renyi(p, q, RenyiOrder(s)) == Approx(renyi_direct(vec(p), vec(q), s)).margin(1e-12));
  }
}

TEST_CASE("property: monotone in the order", "[divergence][property]") {
  const double s_grid[] = {-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0, 1.5, 2.0};
  for (std::size_t k = 0; k < 1000; ++k) {
    Rng g = make_stream(21, 3, k);
    const auto p = random_pmf(2 + k % 4, g), q = random_pmf(2 + k % 4, g);
    double prev = -kInf;
    for (double s : s_grid) {
      const double d = renyi(p, q, RenyiOrder(s));
      REQUIRE(d >= prev - 1e-12);
      prev = d;
    }
  }
}

TEST_CASE("property: data processing through marginals", "[divergence][property]") {
  for (std::size_t k = 0; k < 300; ++k) {
    Rng g = make_stream(21, 4, k);
    const auto p = random_joint(3, 2, g), q = random_joint(3, 2, g);
    for (double s : {-0.5, 0.0, 0.5, 1.0}) {
      const RenyiOrder o(s);
      REQUIRE(renyi(marginal(p, 0), marginal(q, 0), o) <= renyi(p, q, o) + 1e-12);
    }
  }
}

TEST_CASE("property: Pinsker and binary-infimum chains", "[divergence][property]") {
  for (std::size_t k = 0; k < 200; ++k) {
    Rng g = make_stream(21, 5, k);
    const auto p = random_pmf(3, g), q = random_pmf(3, g);
    const double t = tv(p, q);
    for (double s : {-0.5, 0.0, 0.5, 1.0}) {
      const RenyiOrder o(s);
      const double d = renyi(p, q, o);
      REQUIRE(d >= pinsker_lb(t, s) - 1e-12);
      const double inf = sason_inf(t, o);
      REQUIRE(d >= inf - 1e-9);
      if (s >= 0) REQUIRE(inf >= sason_closed_lb(t, s, OrderSide::above_one) - 1e-12);
      if (s < 0) REQUIRE(inf >= sason_closed_lb(t, -s, OrderSide::below_one) - 1e-12);
    }
  }
}

TEST_CASE("property: KL is the limit at s -> 0", "[divergence][property]") {
  for (std::size_t k = 0; k < 200; ++k) {
    Rng g = make_stream(21, 6, k);
    const auto p = random_pmf(4, g), q = random_pmf(4, g);
    const double d0 = renyi(p, q, RenyiOrder(0));
    REQUIRE(std::abs(renyi(p, q, RenyiOrder(1e-5)) - d0) <= 1e-3);
    REQUIRE(std::abs(renyi(p, q, RenyiOrder(-1e-5)) - d0) <= 1e-3);
  }
}
