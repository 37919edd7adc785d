#include "testing.hpp"

#include <cmath>

#include "wynerlab/fixtures.hpp"
#include "wynerlab/synthesis.hpp"

using namespace wynerlab;
using Catch::Approx;

namespace {

const MarkovCoupling kBsc = fixtures::bsc_coupling(0.25);

// P(x^n | m) from the definition: restricted product law over its normalizer
double cond_prob_direct(const SynthesisCode& c, std::size_t m, const Sequence& x, Axis a) {
  const auto& cond = a == Axis::x ? c.base.x_given_w : c.base.y_given_w;
  const auto& w = c.codebook[m];
  if (c.truncation == Truncation::none) return std::exp(log_product_mass(cond, w, x));
  if (!is_cond_typical(w, x, c.base.q_w, cond, c.eps)) return 0.0;
  double z = 0;
  const std::size_t k = cond.cols(), n = w.size();
  for (std::size_t i = 0; i < detail::ipow(k, n); ++i) {
    const auto s = detail::decode_sequence(i, n, k);
    if (is_cond_typical(w, s, c.base.q_w, cond, c.eps)) z += std::exp(log_product_mass(cond, w, s));
  }
  return std::exp(log_product_mass(cond, w, x)) / z;
}

}  // namespace

TEST_CASE("codeword_count", "[synthesis]") {
  CHECK(codeword_count(7, 0.0) == 1);
  CHECK(codeword_count(4, std::log(2.0)) == 16);
  CHECK(codeword_count(3, 0.5) == 5);
  CHECK_THROWS_AS(codeword_count(4, -0.1), ConfigError);
  CHECK_THROWS_AS(codeword_count(100, 1.0), ResourceError);
}

TEST_CASE("truncated_w_sampler", "[synthesis]") {
  Rng g = make_stream(61, 1, 0);
  const MarkovCoupling one(FinitePmf({1.0}), ConditionalPmf({{0.5, 0.5}}), ConditionalPmf({{0.5, 0.5}}));
  CHECK(truncated_w_sampler(one, 9, 0.1, g) == Sequence(9, 0));

  // with a uniform binary W the eps' = 1 band admits every count
  const MarkovCoupling full(FinitePmf::uniform(2), ConditionalPmf::constant(2, FinitePmf::uniform(2)),
                            ConditionalPmf::constant(2, FinitePmf::uniform(2)));
  for (int i = 0; i < 100; ++i) {
    std::size_t tries = 0;
    truncated_w_sampler(full, 5, 1.0, g, Truncation::typical, &tries);
    CHECK(tries == 1);
  }

  const MarkovCoupling half(FinitePmf::uniform(2), ConditionalPmf::bsc(0.1), ConditionalPmf::bsc(0.1));
  const std::size_t draws = 100000;
  std::size_t proposals = 0;
  bool all_typical = true;
  for (std::size_t i = 0; i < draws; ++i) {
    std::size_t t = 0;
    all_typical = all_typical && is_typical(truncated_w_sampler(half, 20, 0.3, g, Truncation::typical, &t), half.q_w, 0.3);
    proposals += t;
  }
  CHECK(all_typical);
  const double p = typical_prob_exact(TypicalSpec(half.q_w, 20, 0.3));
  const double rate = static_cast<double>(draws) / static_cast<double>(proposals);
  CHECK(std::abs(rate - p) <= 3.0 * std::sqrt(p * (1 - p) / static_cast<double>(proposals)));

  CHECK_THROWS_AS(truncated_w_sampler(half, 1, 0.3, g), ResourceError);
}

TEST_CASE("truncated_cond_sampler", "[synthesis]") {
  Rng g = make_stream(61, 2, 0);
  const MarkovCoupling det(FinitePmf::uniform(2), ConditionalPmf({{0, 1}, {1, 0}}), ConditionalPmf({{1, 0}, {0, 1}}));
  const Sequence w{0, 1, 1, 0, 1, 0};
  CHECK(truncated_cond_sampler(det, w, 0.5, g, Axis::x) == Sequence{1, 0, 0, 1, 0, 1});
  CHECK(truncated_cond_sampler(det, w, 0.5, g, Axis::y) == w);

  // a single W symbol reduces to marginal truncation of Q_{X|W=0}
  const MarkovCoupling one(FinitePmf({1.0}), ConditionalPmf({{0.5, 0.5}}), ConditionalPmf({{0.5, 0.5}}));
  for (int i = 0; i < 200; ++i)
    CHECK(is_typical(truncated_cond_sampler(one, Sequence(12, 0), 0.2, g, Axis::x), FinitePmf::uniform(2), 0.2));

  // acceptance of plain conditional draws against the uniform bound
  const MarkovCoupling bsc(FinitePmf::uniform(2), ConditionalPmf::bsc(0.1), ConditionalPmf::bsc(0.1));
  const auto wt = truncated_w_sampler(bsc, 30, 0.2, g);
  std::size_t ok = 0;
  const std::size_t trials = 20000;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto x = truncated_cond_sampler(bsc, wt, 0.4, g, Axis::x, Truncation::none);
    ok += is_cond_typical(wt, x, bsc.q_w, bsc.x_given_w, 0.4);
  }
  const double bound = contyplem_bound(0.4, 0.2, 30, 0.1, 2, 2);
  CHECK(static_cast<double>(ok) / trials >= 1.0 - bound);
  CHECK(static_cast<double>(ok) / trials ==
        Approx(1.0 - cond_typical_defect_exact(bsc.q_w, bsc.x_given_w, wt, 0.4, 0.2)).margin(0.015));
}

TEST_CASE("build_code", "[synthesis]") {
  const auto a = build_code(kBsc, 8, 0.3, 0.6, 0.3, 99);
  CHECK(a.m_count == codeword_count(8, 0.3));
  CHECK(a.codebook.size() == a.m_count);
  for (const auto& w : a.codebook) CHECK(is_typical(w, kBsc.q_w, 0.3));
  const auto b = build_code(kBsc, 8, 0.3, 0.6, 0.3, 99);
  CHECK(a.codebook == b.codebook);
  CHECK(build_code(kBsc, 8, 0.0, 0.6, 0.3, 1).m_count == 1);
  CHECK_THROWS_AS(build_code(kBsc, 8, 0.3, 0.3, 0.6, 1), ConfigError);
  // conditional shells are empty at n = 4 for this coupling
  CHECK_THROWS_AS(build_code(kBsc, 4, 0.3, 0.6, 0.3, 1), ResourceError);
}

TEST_CASE("induced_joint_exact", "[synthesis]") {
  const MarkovCoupling one(FinitePmf({1.0}), ConditionalPmf({{0.3, 0.7}}), ConditionalPmf({{0.6, 0.4}}));
  const auto c1 = build_code(one, 1, 0.0, 1.0, 0.5, 1, Truncation::none);
  const auto p1 = induced_joint_exact(c1);
  CHECK(p1.at(0, 0) == Approx(0.18));
  CHECK(p1.at(1, 0) == Approx(0.42));

  for (auto trunc : {Truncation::typical, Truncation::none}) {
    const auto code = build_code(kBsc, 8, 0.25, 0.6, 0.3, 5, trunc);
    const auto p = induced_joint_exact(code);
    double total = 0;
    for (double v : p.mass) total += v;
    CHECK(total == Approx(1.0).margin(1e-9));

    // marginal over y^n equals (1/M) sum_m P(x^n|m)
    for (std::size_t i = 0; i < p.rows; i += 17) {
      double row = 0;
      for (std::size_t j = 0; j < p.cols; ++j) row += p.at(i, j);
      double direct = 0;
      const auto x = detail::decode_sequence(i, 8, 2);
      for (std::size_t m = 0; m < code.m_count; ++m) direct += cond_prob_direct(code, m, x, Axis::x);
      CHECK(row == Approx(direct / code.m_count).margin(1e-12));
    }
  }
}

TEST_CASE("property: induced joint equals the per-point definition", "[synthesis][property]") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto code = build_code(fixtures::dsbs_ternary_coupling(), 8, 0.3, 0.6, 0.3, seed);
    const auto p = induced_joint_exact(code);
    std::vector<std::vector<double>> px(code.m_count), py(code.m_count);
    for (std::size_t m = 0; m < code.m_count; ++m)
      for (std::size_t i = 0; i < 256; ++i) {
        const auto s = detail::decode_sequence(i, 8, 2);
        px[m].push_back(cond_prob_direct(code, m, s, Axis::x));
        py[m].push_back(cond_prob_direct(code, m, s, Axis::y));
      }
    for (std::size_t i = 0; i < p.rows; ++i)
      for (std::size_t j = 0; j < p.cols; ++j) {
        double direct = 0;
        for (std::size_t m = 0; m < code.m_count; ++m) direct += px[m][i] * py[m][j];
        REQUIRE(std::abs(p.at(i, j) - direct / static_cast<double>(code.m_count)) <= 1e-12);
      }
  }
}

TEST_CASE("copy source: TV shrinks with the codebook", "[synthesis]") {
  const MarkovCoupling copy(FinitePmf::uniform(2), ConditionalPmf({{1, 0}, {0, 1}}), ConditionalPmf({{1, 0}, {0, 1}}));
  double prev = kInf;
  for (double rate : {0.3, 0.8, 1.5}) {
    double mean = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed)
      mean += estimate_tv(build_code(copy, 4, rate, 1.0, 0.5, seed, Truncation::none), 0, 0).point / 5;
    CHECK(mean < prev);
    prev = mean;
  }
  CHECK(prev < 0.15);
}

TEST_CASE("estimate_tv", "[synthesis]") {
  const MarkovCoupling one(FinitePmf({1.0}), ConditionalPmf({{0.3, 0.7}}), ConditionalPmf({{0.6, 0.4}}));
  const auto c1 = build_code(one, 5, 0.2, 1.0, 0.5, 1, Truncation::none);
  const auto e1 = estimate_tv(c1, 0, 0);
  CHECK(e1.point == Approx(0.0).margin(1e-14));
  CHECK(e1.method == Method::exact);
  CHECK(e1.std_error == 0.0);

  const auto code = build_code(kBsc, 8, 0.3, 0.6, 0.3, 3);
  const auto ex = estimate_tv(code, 0, 0);
  const auto mc = estimate_tv(code, 20000, 4, true);
  CHECK(mc.method == Method::monte_carlo);
  CHECK(std::abs(ex.point - mc.point) <= 3 * mc.std_error);
}

TEST_CASE("estimate_renyi", "[synthesis]") {
  const MarkovCoupling one(FinitePmf({1.0}), ConditionalPmf({{0.3, 0.7}}), ConditionalPmf({{0.6, 0.4}}));
  const auto c1 = build_code(one, 4, 0.0, 1.0, 0.5, 1, Truncation::none);
  for (double s : {-1.0, -0.5, 0.0, 0.5, 1.0}) CHECK(estimate_renyi(c1, s, 0, 0).point == Approx(0.0).margin(1e-12));

  const auto code = build_code(fixtures::dsbs_wyner_coupling(0.1), 6, 0.5, 1.0, 0.5, 8, Truncation::none);
  const auto d05 = estimate_renyi(code, 0.5, 0, 0), d1 = estimate_renyi(code, 1.0, 0, 0);
  CHECK(d05.point <= d1.point);
  CHECK(d1.normalized == Approx(d1.point / 6));
  for (double s : {-0.5, 0.0, 0.5, 1.0}) {
    const auto ex = estimate_renyi(code, s, 0, 0);
    const auto mc = estimate_renyi(code, s, 20000, 9, true);
    CHECK(std::abs(ex.point - mc.point) <= 4 * mc.std_error);
  }
  CHECK_THROWS_AS(estimate_renyi(code, 1.5, 0, 0), ConfigError);
}

TEST_CASE("structural zeros under truncation", "[synthesis]") {
  const auto code = build_code(fixtures::dsbs_ternary_coupling(), 8, 0.3, 0.6, 0.3, 2);
  const auto d0 = estimate_renyi(code, -1.0, 0, 0);
  CHECK(d0.structural_zeros > 0);
  CHECK(std::isfinite(d0.point));
  CHECK(d0.point > 0);
  const auto mc = estimate_renyi(code, -1.0, 5000, 1, true);
  CHECK(mc.structural_zeros > 0);
}

TEST_CASE("gamma_oneshot", "[synthesis]") {
  const FinitePmf pw({0.4, 0.6}), pi({0.5, 0.5});
  const ConditionalPmf cond({{0.9, 0.1}, {0.2, 0.8}});
  const FinitePmf px({0.4 * 0.9 + 0.6 * 0.2, 0.4 * 0.1 + 0.6 * 0.8});
  const double dm = renyi(px, pi, RenyiOrder(0.5));
  CHECK(gamma_oneshot(pw, cond, pi, 1e9, 0.5) == Approx(dm));
  const double dc = conditional_renyi(pw, cond, pi, RenyiOrder(0.5));
  CHECK(gamma_oneshot(pw, cond, pi, 0.0, 0.5) == Approx(std::max(dc, dm)));
  CHECK(gamma_oneshot(pw, cond, px, dc + 1.0, 0.5) == Approx(0.0).margin(1e-14));
  // the conditional term evaluated by hand
  double acc = 0;
  for (std::size_t w = 0; w < 2; ++w)
    for (std::size_t x = 0; x < 2; ++x) acc += pw[w] * std::pow(cond(w, x), 1.5) * std::pow(pi[x], -0.5);
  CHECK(dc == Approx(std::log(acc) / 0.5));
  CHECK_THROWS_AS(gamma_oneshot(pw, cond, pi, 0.1, 0.0), ConfigError);
}

TEST_CASE("oneshot_bound_verify", "[synthesis]") {
  const FinitePmf pw({0.4, 0.6}), pi({0.3, 0.7});
  const ConditionalPmf cond({{0.9, 0.1}, {0.2, 0.8}});
  const auto r1 = oneshot_bound_verify(pw, cond, pi, 1, 0.7);
  const double dc = conditional_renyi(pw, cond, pi, RenyiOrder(0.7));
  CHECK(r1.lhs == Approx(std::exp(0.7 * dc)));
  CHECK(r1.holds);
  CHECK(r1.rhs - r1.lhs >= std::exp(0.7 * renyi(FinitePmf({0.48, 0.52}), pi, RenyiOrder(0.7))) - 1e-12);

  const auto r2 = oneshot_bound_verify(pw, cond, pi, 2, 1.0);
  CHECK(r2.codebooks == 4);
  CHECK(r2.exact);
  CHECK(r2.holds);
  CHECK(r2.holds_gamma);

  const auto mc = oneshot_bound_verify(pw, cond, pi, 4, 0.5, 10000, 3);
  const auto ex = oneshot_bound_verify(pw, cond, pi, 4, 0.5);
  CHECK(std::abs(mc.lhs - ex.lhs) <= 4 * mc.lhs_se);
  CHECK(mc.holds);
}

TEST_CASE("rate_bound_check", "[synthesis]") {
  const MarkovCoupling one(FinitePmf({1.0}), ConditionalPmf({{0.3, 0.7}}), ConditionalPmf({{0.6, 0.4}}));
  const auto r1 = rate_bound_check(one, 6, 0.9, 0.5, 1.0);
  CHECK(r1.holds);

  const auto tern = fixtures::dsbs_ternary_coupling();
  const auto r = rate_bound_check(tern, 8, 0.6, 0.3, 1.0);
  CHECK(r.holds);
  CHECK(r.slack >= 0);
  CHECK(r.w_types == 1);
  CHECK(r.corrected_rhs >= r.paper_rhs);

  const auto smaller = rate_bound_check(tern, 8, 0.5, 0.25, 1.0);
  CHECK(smaller.holds);
  CHECK(smaller.slack < r.slack);
}

TEST_CASE("truncation_domination", "[synthesis]") {
  for (std::size_t n : {5, 6, 8}) {
    const auto rep = truncation_domination(kBsc, n, 0.6, 0.3);
    CHECK(rep.pointwise);
    CHECK(rep.divergence_ok);
    CHECK(rep.max_ratio <= 1.0);
  }
}
