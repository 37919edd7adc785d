#include "testing.hpp"

#include <cmath>

#include "wynerlab/prob.hpp"
#include "wynerlab/rng.hpp"

using namespace wynerlab;
using Catch::Approx;

namespace {

// H(A) + H(B) - H(AB) written out independently of the library
double mi_by_entropies(const std::vector<std::vector<double>>& m) {
  auto h = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v)
      if (x > 0) s -= x * std::log(x);
    return s;
  };
  std::vector<double> a(m.size(), 0.0), b(m[0].size(), 0.0), ab;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[i].size(); ++j) {
      a[i] += m[i][j];
      b[j] += m[i][j];
      ab.push_back(m[i][j]);
    }
  return h(a) + h(b) - h(ab);
}

}  // namespace

TEST_CASE("FinitePmf rejects bad mass", "[prob]") {
  CHECK_THROWS_AS(FinitePmf({0.5, 0.6}), ConfigError);
  CHECK_THROWS_AS(FinitePmf({1.2, -0.2}), ConfigError);
  CHECK_THROWS_AS(FinitePmf(std::vector<double>{}), ConfigError);
  const FinitePmf p({0.5, 0.0, 0.5});
  CHECK(p.support() == std::vector<std::size_t>{0, 2});
}

TEST_CASE("marginal examples", "[prob]") {
  const auto uni = JointPmf::from_matrix({{0.25, 0.25}, {0.25, 0.25}});
  CHECK(marginal(uni, 0)[0] == Approx(0.5));
  CHECK(marginal(uni, 0)[1] == Approx(0.5));
  const auto diag = JointPmf::from_matrix({{0.5, 0.0}, {0.0, 0.5}});
  CHECK(marginal(diag, 1)[0] == Approx(0.5));
  const auto m = JointPmf::from_matrix({{0.4, 0.1}, {0.2, 0.3}});
  CHECK(marginal(m, 0)[0] == Approx(0.5).margin(1e-15));
  CHECK(marginal(m, 0)[1] == Approx(0.5).margin(1e-15));
  CHECK(marginal(m, 1)[0] == Approx(0.6).margin(1e-15));
  CHECK_THROWS_AS(marginal(m, 2), std::exception);
}

TEST_CASE("induced_joint examples", "[prob]") {
  const FinitePmf p({0.3, 0.7}), q({0.6, 0.4});
  const MarkovCoupling single(FinitePmf({1.0}), ConditionalPmf({{0.3, 0.7}}), ConditionalPmf({{0.6, 0.4}}));
  const auto j = xy_marginal(single);
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t y = 0; y < 2; ++y) CHECK(j.at(x, y) == Approx(p[x] * q[y]).margin(1e-15));

  const MarkovCoupling copy(FinitePmf::uniform(2), ConditionalPmf({{1, 0}, {0, 1}}), ConditionalPmf({{1, 0}, {0, 1}}));
  const auto c = induced_joint(copy);
  CHECK(c.at(0, 0, 0) == 0.5);
  CHECK(c.at(1, 1, 1) == 0.5);
  CHECK(c.at(0, 1, 1) == 0.0);

  const MarkovCoupling bsc(FinitePmf::uniform(2), ConditionalPmf::bsc(0.1), ConditionalPmf::bsc(0.1));
  CHECK(induced_joint(bsc).at(0, 0, 0) == Approx(0.405).margin(1e-15));
}

TEST_CASE("mutual_information examples", "[prob]") {
  CHECK(mutual_information(JointPmf::from_matrix({{0.24, 0.36}, {0.16, 0.24}})) == Approx(0.0).margin(1e-15));
  CHECK(mutual_information(JointPmf::from_matrix({{0.5, 0.0}, {0.0, 0.5}})) == Approx(std::log(2.0)));
  const std::vector<std::vector<double>> m{{0.4, 0.1}, {0.1, 0.4}};
  CHECK(mutual_information(JointPmf::from_matrix(m)) == Approx(mi_by_entropies(m)).margin(1e-14));
}

TEST_CASE("log_product_mass examples", "[prob]") {
  CHECK(log_product_mass(FinitePmf::uniform(2), Sequence{}) == 0.0);
  CHECK(log_product_mass(FinitePmf::uniform(2), Sequence{0, 1, 1}) == Approx(-3 * std::log(2.0)));
  CHECK(log_product_mass(FinitePmf({0.9, 0.1}), Sequence{0, 1}) == Approx(std::log(0.09)));
  CHECK(log_product_mass(FinitePmf({1.0, 0.0}), Sequence{0, 1}) == -kInf);
}

TEST_CASE("matrix text format round trip", "[prob]") {
  const auto rows = parse_matrix("# pi\n0.45 0.05\n0.05 0.45\n");
  CHECK(rows.size() == 2);
  CHECK(parse_matrix(format_matrix(rows)) == rows);
  CHECK_THROWS_AS(parse_matrix("0.5 abc"), ConfigError);
}

TEST_CASE("property: induced joint factorizes exactly", "[prob][property]") {
  for (std::size_t k = 0; k < 200; ++k) {
    Rng g = make_stream(11, 1, k);
    const std::size_t nw = 1 + k % 4, nx = 2 + k % 3, ny = 2 + (k / 3) % 3;
    const MarkovCoupling c(random_pmf(nw, g), random_conditional(nw, nx, g), random_conditional(nw, ny, g));
    const auto j = induced_joint(c);
    for (std::size_t w = 0; w < nw; ++w)
      for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y)
          REQUIRE(j.at(w, x, y) == c.q_w[w] * c.x_given_w(w, x) * c.y_given_w(w, y));
  }
}

TEST_CASE("property: mutual information equals the entropy decomposition", "[prob][property]") {
  for (std::size_t k = 0; k < 1000; ++k) {
    Rng g = make_stream(11, 2, k);
    const auto j = random_joint(2 + k % 3, 2 + (k / 3) % 3, g);
    REQUIRE(mutual_information(j) == Approx(mi_by_entropies(j.to_matrix())).margin(1e-10));
  }
}

TEST_CASE("property: marginal is linear", "[prob][property]") {
  for (std::size_t k = 0; k < 200; ++k) {
    Rng g = make_stream(11, 3, k);
    const auto p = random_joint(3, 2, g), q = random_joint(3, 2, g);
    const double lam = uniform01(g);
    std::vector<double> mix(p.size());
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = lam * p.mass()[i] + (1 - lam) * q.mass()[i];
    const JointPmf m({3, 2}, mix);
    for (std::size_t axis : {0, 1}) {
      const auto a = marginal(m, axis), b = marginal(p, axis), c = marginal(q, axis);
      for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(std::abs(a[i] - (lam * b[i] + (1 - lam) * c[i])) <= 1e-12);
    }
  }
}

TEST_CASE("property: conditioning re-expands the joint", "[prob][property]") {
  for (std::size_t k = 0; k < 100; ++k) {
    Rng g = make_stream(11, 4, k);
    const auto j = random_joint(3, 4, g);
    const auto px = marginal(j, 0);
    const auto cond = conditional(j);
    for (std::size_t x = 0; x < 3; ++x)
      for (std::size_t y = 0; y < 4; ++y) REQUIRE(std::abs(px[x] * cond(x, y) - j.at(x, y)) <= 1e-12);
  }
}

TEST_CASE("SequenceType empirical pmf", "[prob]") {
  const auto t = SequenceType::of(Sequence{0, 1, 1, 2}, 3);
  CHECK(t.counts == std::vector<std::size_t>{1, 2, 1});
  CHECK(t.empirical()[1] == 0.5);
}
