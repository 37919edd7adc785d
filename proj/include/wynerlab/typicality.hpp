#pragma once

// Method-of-types utilities: epsilon-typical sets, conditional typical sets,
// exact typical-set probabilities and the uniform conditional-typicality bound.
//
// A sequence is eps-typical for Q when every symbol count N(x) satisfies
// |N(x) - n Q(x)| <= eps n Q(x).  The conditional set of x^n given w^n is
// joint typicality of (w^n, x^n) for Q_WX, which only constrains the counts
// N(w,x).  Given w^n those counts are independent multinomials, one per w.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "wynerlab/error.hpp"
#include "wynerlab/prob.hpp"

namespace wynerlab {

inline constexpr std::size_t kMaxTypeLength = 200;
inline constexpr std::size_t kMaxTypeAlphabet = 8;

struct TypicalSpec {
  FinitePmf ref;
  std::size_t n = 0;
  double eps = 0.0;

  TypicalSpec(FinitePmf q, std::size_t len, double e) : ref(std::move(q)), n(len), eps(e) {
    if (!(e > 0.0)) throw ConfigError("TypicalSpec: eps must be positive");
  }
};

/// Inclusive count range allowed for one symbol.  Empty when lo > hi.
struct CountRange {
  long lo = 0, hi = -1;
  bool empty() const { return lo > hi; }
};

namespace detail {

// absorbs rounding in products such as 0.2 * 10 * 0.5
inline constexpr double kCountSlack = 1e-9;

inline CountRange count_range(double expected, double eps, std::size_t n) {
  if (expected <= 0.0) return {0, 0};
  const double dev = eps * expected;
  const double tol = kCountSlack * std::max(1.0, expected);
  CountRange r{static_cast<long>(std::ceil(expected - dev - tol)), static_cast<long>(std::floor(expected + dev + tol))};
  r.lo = std::max(r.lo, 0L);
  r.hi = std::min(r.hi, static_cast<long>(n));
  return r;
}

inline void check_type_budget(std::size_t n, std::size_t k) {
  if (n > kMaxTypeLength || k > kMaxTypeAlphabet)
    throw ResourceError("type enumeration budget exceeded (n <= 200, alphabet <= 8)");
}

}  // namespace detail

/// Cumulative table of log k!.
class LogFactorial {
 public:
  explicit LogFactorial(std::size_t n_max = kMaxTypeLength) : table_(n_max + 1, 0.0) {
    for (std::size_t k = 2; k <= n_max; ++k) table_[k] = table_[k - 1] + std::log(static_cast<double>(k));
  }
  double operator()(std::size_t k) const { return table_.at(k); }

 private:
  std::vector<double> table_;
};

inline const LogFactorial& log_factorial() {
  static const LogFactorial t;
  return t;
}

/// Calls f(counts) for every composition of n into k nonnegative parts,
/// optionally restricted to per-part ranges.
inline void for_each_composition(std::size_t n, std::size_t k, const std::function<void(const std::vector<long>&)>& f,
                                 std::span<const CountRange> ranges = {}) {
  if (k == 0) return;
  std::vector<long> c(k, 0);
  auto range = [&](std::size_t i) { return ranges.empty() ? CountRange{0, static_cast<long>(n)} : ranges[i]; };
  std::function<void(std::size_t, long)> rec = [&](std::size_t i, long left) {
    const auto r = range(i);
    if (i + 1 == k) {
      if (left >= r.lo && left <= r.hi) {
        c[i] = left;
        f(c);
      }
      return;
    }
    for (long v = std::max(0L, r.lo); v <= std::min(left, r.hi); ++v) {
      c[i] = v;
      rec(i + 1, left - v);
    }
  };
  rec(0, static_cast<long>(n));
}

/// Per-symbol count ranges of the eps-typical set of q at length n.
inline std::vector<CountRange> typical_ranges(const FinitePmf& q, std::size_t n, double eps) {
  std::vector<CountRange> r;
  for (std::size_t x = 0; x < q.size(); ++x) r.push_back(detail::count_range(static_cast<double>(n) * q[x], eps, n));
  return r;
}

inline bool is_typical_counts(std::span<const long> counts, const FinitePmf& q, double eps) {
  if (counts.size() != q.size()) throw ConfigError("is_typical: alphabet mismatch");
  long n = 0;
  for (long c : counts) n += c;
  const auto r = typical_ranges(q, static_cast<std::size_t>(n), eps);
  for (std::size_t x = 0; x < q.size(); ++x)
    if (counts[x] < r[x].lo || counts[x] > r[x].hi) return false;
  return true;
}

inline bool is_typical(std::span<const Symbol> seq, const FinitePmf& q, double eps) {
  std::vector<long> counts(q.size(), 0);
  for (Symbol s : seq) {
    if (s >= q.size()) return false;
    ++counts[s];
  }
  return is_typical_counts(counts, q, eps);
}

inline bool is_typical(std::span<const Symbol> seq, const TypicalSpec& spec) {
  if (seq.size() != spec.n) throw ConfigError("is_typical: sequence length differs from spec.n");
  return is_typical(seq, spec.ref, spec.eps);
}

/// Joint eps-typicality of (w^n, x^n) for Q_WX = Q_W Q_{X|W}.
inline bool is_cond_typical(std::span<const Symbol> w_seq, std::span<const Symbol> x_seq, const FinitePmf& q_w,
                            const ConditionalPmf& x_given_w, double eps) {
  if (w_seq.size() != x_seq.size()) throw ConfigError("is_cond_typical: length mismatch");
  const std::size_t nw = q_w.size(), nx = x_given_w.cols();
  const std::size_t n = w_seq.size();
  std::vector<long> counts(nw * nx, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (w_seq[i] >= nw || x_seq[i] >= nx) return false;
    ++counts[w_seq[i] * nx + x_seq[i]];
  }
  for (std::size_t w = 0; w < nw; ++w)
    for (std::size_t x = 0; x < nx; ++x) {
      const auto r = detail::count_range(static_cast<double>(n) * q_w[w] * x_given_w(w, x), eps, n);
      const long c = counts[w * nx + x];
      if (c < r.lo || c > r.hi) return false;
    }
  return true;
}

/// log P(Multinomial(n, q) has every count inside its range), by dynamic
/// programming over symbols: O(k n^2) instead of enumerating compositions.
inline double log_multinomial_box(std::size_t n, std::span<const double> q, std::span<const CountRange> ranges) {
  detail::check_type_budget(n, q.size());
  const auto& lf = log_factorial();
  // dp[t] = log sum over partial compositions with total t of prod q^c / c!
  std::vector<double> dp(n + 1, -kInf), next(n + 1);
  dp[0] = 0.0;
  for (std::size_t x = 0; x < q.size(); ++x) {
    std::fill(next.begin(), next.end(), -kInf);
    const auto r = ranges[x];
    if (r.empty()) return -kInf;
    const double lq = safe_log(q[x]);
    for (std::size_t t = 0; t <= n; ++t) {
      if (dp[t] == -kInf) continue;
      for (long c = r.lo; c <= r.hi && t + static_cast<std::size_t>(c) <= n; ++c) {
        if (c > 0 && lq == -kInf) break;
        const double term = dp[t] + (c > 0 ? c * lq : 0.0) - lf(static_cast<std::size_t>(c));
        double& dst = next[t + static_cast<std::size_t>(c)];
        dst = dst == -kInf ? term : std::max(dst, term) + std::log1p(std::exp(-std::abs(dst - term)));
      }
    }
    dp.swap(next);
  }
  return dp[n] == -kInf ? -kInf : lf(n) + dp[n];
}

/// Q^n(T^n_eps(Q)), exact.
inline double typical_prob_exact(const TypicalSpec& spec) {
  detail::check_type_budget(spec.n, spec.ref.size());
  const auto r = typical_ranges(spec.ref, spec.n, spec.eps);
  return std::min(1.0, std::exp(log_multinomial_box(spec.n, spec.ref.mass(), r)));
}

/// Q_{X|W}^n(T^n_eps(Q_WX | w^n) | w^n) for any w^n with the given counts.
inline double cond_typical_prob_for_type(const FinitePmf& q_w, const ConditionalPmf& x_given_w,
                                         std::span<const long> w_counts, double eps) {
  if (w_counts.size() != q_w.size() || x_given_w.rows() != q_w.size())
    throw ConfigError("cond_typical_prob: shape mismatch");
  long n = 0;
  for (long c : w_counts) n += c;
  const auto nn = static_cast<std::size_t>(n);
  detail::check_type_budget(nn, x_given_w.cols());
  double log_p = 0.0;
  for (std::size_t w = 0; w < q_w.size(); ++w) {
    std::vector<CountRange> r;
    for (std::size_t x = 0; x < x_given_w.cols(); ++x)
      r.push_back(detail::count_range(static_cast<double>(nn) * q_w[w] * x_given_w(w, x), eps, nn));
    log_p += log_multinomial_box(static_cast<std::size_t>(w_counts[w]), x_given_w.row(w), r);
    if (log_p == -kInf) return 0.0;
  }
  return std::min(1.0, std::exp(log_p));
}

inline std::vector<long> counts_of(std::span<const Symbol> seq, std::size_t alphabet) {
  std::vector<long> c(alphabet, 0);
  for (Symbol s : seq) {
    if (s >= alphabet) throw ConfigError("symbol outside alphabet");
    ++c[s];
  }
  return c;
}

/// 1 - Q_{X|W}^n(T^n_eps(Q_WX|w^n) | w^n).  w^n must be eps'-typical for Q_W.
inline double cond_typical_defect_exact(const FinitePmf& q_w, const ConditionalPmf& x_given_w,
                                        std::span<const Symbol> w_seq, double eps, double eps_prime) {
  if (!(eps_prime > 0.0 && eps_prime < eps)) throw ConfigError("cond_typical_defect: need 0 < eps' < eps");
  if (!is_typical(w_seq, q_w, eps_prime)) throw DomainError("cond_typical_defect: w^n is not eps'-typical");
  const auto c = counts_of(w_seq, q_w.size());
  return std::max(0.0, 1.0 - cond_typical_prob_for_type(q_w, x_given_w, c, eps));
}

struct DefectExtremes {
  std::size_t admissible_types = 0;  ///< eps'-typical w-types at this n
  double max_defect = 0.0;
  double min_cond_prob = 1.0;  ///< 1 - max_defect
};

/// Extremes of the conditional defect over every eps'-typical w-type.
inline DefectExtremes cond_defect_extremes(const FinitePmf& q_w, const ConditionalPmf& x_given_w, std::size_t n,
                                           double eps, double eps_prime) {
  detail::check_type_budget(n, q_w.size());
  DefectExtremes out;
  const auto r = typical_ranges(q_w, n, eps_prime);
  for_each_composition(
      n, q_w.size(),
      [&](const std::vector<long>& c) {
        ++out.admissible_types;
        const double p = cond_typical_prob_for_type(q_w, x_given_w, c, eps);
        out.min_cond_prob = std::min(out.min_cond_prob, p);
      },
      r);
  out.max_defect = out.admissible_types ? 1.0 - out.min_cond_prob : 0.0;
  return out;
}

/// Uniform bound on the conditional defect:
/// |X||W| (exp(-(1/3)((eps-eps')/(1+eps'))^2 n q_min) + exp(-(1/2)((eps-eps')/(1-eps'))^2 n q_min)),
/// with q_min the smallest positive entry of Q_{X|W}.
inline double contyplem_bound(double eps, double eps_prime, std::size_t n, double q_min, std::size_t x_size,
                              std::size_t w_size) {
  if (!(eps_prime > 0.0 && eps_prime < eps && eps <= 1.0))
    throw ConfigError("contyplem_bound: need 0 < eps' < eps <= 1");
  if (!(q_min > 0.0 && q_min <= 1.0)) throw ConfigError("contyplem_bound: q_min must lie in (0,1]");
  const double nq = static_cast<double>(n) * q_min;
  const double a = (eps - eps_prime) / (1.0 + eps_prime);
  const double b = (eps - eps_prime) / (1.0 - eps_prime);
  return static_cast<double>(x_size * w_size) * (std::exp(-a * a * nq / 3.0) + std::exp(-b * b * nq / 2.0));
}

}  // namespace wynerlab
