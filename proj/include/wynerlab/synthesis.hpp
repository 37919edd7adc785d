#pragma once

// Distributed source synthesis with random codebooks.
//
// A code draws m_count = ceil(e^{nR}) codewords i.i.d. from P_{W^n}; the two
// terminals map the shared index m to X^n ~ P_{X^n|W^n}(.|w(m)) and
// Y^n ~ P_{Y^n|W^n}(.|w(m)) independently, inducing
//
//   P_{X^nY^n}(x^n, y^n) = (1/M) sum_m P(x^n|w(m)) P(y^n|w(m)).
//
// With Truncation::typical the three laws are the product laws restricted
// to the (conditionally) typical sets and renormalized; with
// Truncation::none they are the plain product laws.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wynerlab/divergence.hpp"
#include "wynerlab/error.hpp"
#include "wynerlab/prob.hpp"
#include "wynerlab/rng.hpp"
#include "wynerlab/typicality.hpp"

namespace wynerlab {

enum class Truncation { typical, none };
enum class Axis { x, y };
enum class Method { exact, monte_carlo };

inline const char* to_string(Method m) { return m == Method::exact ? "exact" : "monte_carlo"; }
inline const char* to_string(Truncation t) { return t == Truncation::typical ? "typical" : "none"; }

inline constexpr std::size_t kExactCellBudget = std::size_t{1} << 22;  ///< |X|^n |Y|^n
inline constexpr std::size_t kExactCodewordBudget = std::size_t{1} << 14;
inline constexpr std::size_t kDefaultRejectionBudget = std::size_t{1} << 22;

/// ceil(e^{nR}), guarded so that e.g. n = 4, R = log 2 gives exactly 16.
inline std::size_t codeword_count(std::size_t n, double rate) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw ConfigError("rate must be finite and >= 0");
  const double v = std::exp(static_cast<double>(n) * rate);
  if (v > 0x1p62) throw ResourceError("codebook size e^{nR} is too large");
  return static_cast<std::size_t>(std::ceil(v * (1.0 - 1e-12)));
}

struct SynthesisCode {
  std::size_t n = 0;
  double rate = 0.0;
  std::size_t m_count = 0;
  std::vector<Sequence> codebook;
  MarkovCoupling base;
  double eps = 1.0;
  double eps_prime = 0.5;
  Truncation truncation = Truncation::typical;
  std::uint64_t seed = 0;
};

namespace detail {

inline const ConditionalPmf& axis_cond(const MarkovCoupling& c, Axis a) {
  return a == Axis::x ? c.x_given_w : c.y_given_w;
}

inline bool ranges_feasible(std::span<const CountRange> r, long total) {
  long lo = 0, hi = 0;
  for (const auto& x : r) {
    if (x.empty()) return false;
    lo += x.lo;
    hi += x.hi;
  }
  return lo <= total && total <= hi;
}

inline std::size_t ipow(std::size_t b, std::size_t e) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < e; ++i) {
    if (r > (std::size_t{1} << 40) / std::max<std::size_t>(b, 1)) throw ResourceError("alphabet power overflow");
    r *= b;
  }
  return r;
}

/// Sequence index with the first symbol most significant.
inline Sequence decode_sequence(std::size_t idx, std::size_t n, std::size_t k) {
  Sequence s(n);
  for (std::size_t i = n; i-- > 0;) {
    s[i] = static_cast<Symbol>(idx % k);
    idx /= k;
  }
  return s;
}

inline std::size_t encode_sequence(std::span<const Symbol> s, std::size_t k) {
  std::size_t idx = 0;
  for (Symbol v : s) idx = idx * k + v;
  return idx;
}

/// pi^n as a dense |X|^n x |Y|^n row-major array.
inline std::vector<double> product_law(const JointPmf& pi, std::size_t n) {
  const std::size_t nx = pi.dim(0), ny = pi.dim(1);
  std::vector<double> cur{1.0};
  std::size_t rows = 1, cols = 1;
  for (std::size_t t = 0; t < n; ++t) {
    std::vector<double> nxt(rows * nx * cols * ny);
    const std::size_t ncols = cols * ny;
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) {
        const double v = cur[i * cols + j];
        for (std::size_t x = 0; x < nx; ++x)
          for (std::size_t y = 0; y < ny; ++y) nxt[(i * nx + x) * ncols + j * ny + y] = v * pi.at(x, y);
      }
    cur.swap(nxt);
    rows *= nx;
    cols *= ny;
  }
  return cur;
}

/// log of the conditional normalizer Q^n(T_eps(Q_W.|w^n)|w^n); 0 without truncation.
inline double log_cond_normalizer(const MarkovCoupling& base, std::span<const Symbol> w, double eps, Axis a,
                                  Truncation t) {
  if (t == Truncation::none) return 0.0;
  const auto c = counts_of(w, base.w_size());
  return safe_log(cond_typical_prob_for_type(base.q_w, axis_cond(base, a), c, eps));
}

/// Exact P(.|w^n) over the whole output alphabet power.
inline std::vector<double> conditional_law(const MarkovCoupling& base, std::span<const Symbol> w, double eps, Axis a,
                                           Truncation t) {
  const auto& cond = axis_cond(base, a);
  const std::size_t k = cond.cols(), n = w.size();
  const std::size_t total = ipow(k, n);
  const double log_z = log_cond_normalizer(base, w, eps, a, t);
  std::vector<double> out(total, 0.0);
  if (log_z == -kInf) return out;
  Sequence x(n, 0);
  for (std::size_t idx = 0; idx < total; ++idx) {
    if (idx > 0) {
      // increment x as a base-k counter
      for (std::size_t i = n; i-- > 0;) {
        if (++x[i] < k) break;
        x[i] = 0;
      }
    }
    if (t == Truncation::typical && !is_cond_typical(w, x, base.q_w, cond, eps)) continue;
    const double lp = log_product_mass(cond, w, x);
    if (lp > -kInf) out[idx] = std::exp(lp - log_z);
  }
  return out;
}

/// sum_k weight_k * outer(rows_x[k], rows_y[k]) as a row-major dense array.
inline std::vector<double> dense_mixture(const std::vector<std::vector<double>>& rows_x,
                                         const std::vector<std::vector<double>>& rows_y,
                                         const std::vector<double>& weights) {
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const auto k = static_cast<Eigen::Index>(weights.size());
  const auto a = static_cast<Eigen::Index>(rows_x.at(0).size());
  const auto b = static_cast<Eigen::Index>(rows_y.at(0).size());
  RowMat xm(k, a), ym(k, b);
  for (Eigen::Index i = 0; i < k; ++i) {
    xm.row(i) = Eigen::Map<const Eigen::RowVectorXd>(rows_x[static_cast<std::size_t>(i)].data(), a) *
                weights[static_cast<std::size_t>(i)];
    ym.row(i) = Eigen::Map<const Eigen::RowVectorXd>(rows_y[static_cast<std::size_t>(i)].data(), b);
  }
  RowMat p = xm.transpose() * ym;
  return std::vector<double>(p.data(), p.data() + p.size());
}

inline void check_exact_budget(std::size_t nx, std::size_t ny, std::size_t n) {
  const std::size_t a = ipow(nx, n), b = ipow(ny, n);
  if (a > kExactCellBudget || b > kExactCellBudget || a * b > kExactCellBudget)
    throw ResourceError("exact induced joint exceeds the 2^22 cell budget");
}

inline std::vector<Sequence> typical_w_sequences(const MarkovCoupling& base, std::size_t n, double eps_prime,
                                                 Truncation t) {
  const std::size_t total = ipow(base.w_size(), n);
  if (total > kExactCellBudget) throw ResourceError("too many W sequences to enumerate");
  std::vector<Sequence> out;
  for (std::size_t idx = 0; idx < total; ++idx) {
    auto w = decode_sequence(idx, n, base.w_size());
    if (t == Truncation::none ? log_product_mass(base.q_w, w) > -kInf : is_typical(w, base.q_w, eps_prime))
      out.push_back(std::move(w));
  }
  return out;
}

}  // namespace detail

/// Draw w^n from Q_W^n restricted to T^n_{eps'}(Q_W) by rejection.  `tries`,
/// when given, receives the number of proposals used.
inline Sequence truncated_w_sampler(const MarkovCoupling& base, std::size_t n, double eps_prime, Rng& g,
                                    Truncation t = Truncation::typical, std::size_t* tries = nullptr,
                                    std::size_t budget = kDefaultRejectionBudget) {
  const auto& q = base.q_w;
  Sequence w(n);
  if (t == Truncation::none) {
    for (auto& s : w) s = static_cast<Symbol>(sample_index(q.mass(), g));
    if (tries) *tries = 1;
    return w;
  }
  const auto r = typical_ranges(q, n, eps_prime);
  if (!detail::ranges_feasible(r, static_cast<long>(n)))
    throw ResourceError("the eps'-typical set of Q_W is empty at this n");
  for (std::size_t k = 1; k <= budget; ++k) {
    for (auto& s : w) s = static_cast<Symbol>(sample_index(q.mass(), g));
    if (is_typical(w, q, eps_prime)) {
      if (tries) *tries = k;
      return w;
    }
  }
  std::string msg = "rejection budget exceeded for the W sampler";
  if (n <= kMaxTypeLength && q.size() <= kMaxTypeAlphabet)
    msg += "; exact typical probability " + std::to_string(typical_prob_exact(TypicalSpec(q, n, eps_prime)));
  throw ResourceError(msg);
}

/// Draw x^n (or y^n) from the product conditional law restricted to the
/// conditionally eps-typical set of w^n.  The restriction factorizes over
/// the positions sharing a w-symbol, so each block is rejection-sampled
/// separately.
inline Sequence truncated_cond_sampler(const MarkovCoupling& base, std::span<const Symbol> w_seq, double eps, Rng& g,
                                       Axis axis, Truncation t = Truncation::typical,
                                       std::size_t budget = kDefaultRejectionBudget) {
  const auto& cond = detail::axis_cond(base, axis);
  const std::size_t n = w_seq.size(), nw = base.w_size(), k = cond.cols();
  Sequence out(n);
  if (t == Truncation::none) {
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<Symbol>(sample_index(cond.row(w_seq[i]), g));
    return out;
  }
  std::vector<std::vector<std::size_t>> pos(nw);
  for (std::size_t i = 0; i < n; ++i) {
    if (w_seq[i] >= nw) throw ConfigError("w symbol outside alphabet");
    pos[w_seq[i]].push_back(i);
  }
  for (std::size_t w = 0; w < nw; ++w) {
    if (pos[w].empty()) continue;
    std::vector<CountRange> r;
    for (std::size_t x = 0; x < k; ++x)
      r.push_back(detail::count_range(static_cast<double>(n) * base.q_w[w] * cond(w, x), eps, n));
    if (!detail::ranges_feasible(r, static_cast<long>(pos[w].size())))
      throw ResourceError("conditional typical set is empty for this w^n");
    std::vector<long> counts(k);
    bool ok = false;
    for (std::size_t tr = 0; tr < budget && !ok; ++tr) {
      std::fill(counts.begin(), counts.end(), 0);
      for (auto i : pos[w]) {
        out[i] = static_cast<Symbol>(sample_index(cond.row(w), g));
        ++counts[out[i]];
      }
      ok = true;
      for (std::size_t x = 0; x < k && ok; ++x) ok = counts[x] >= r[x].lo && counts[x] <= r[x].hi;
    }
    if (!ok) throw ResourceError("rejection budget exceeded for the conditional sampler");
  }
  return out;
}

inline constexpr std::uint64_t kCodebookCell = 0xC0DE;

inline SynthesisCode build_code(const MarkovCoupling& base, std::size_t n, double rate, double eps, double eps_prime,
                                std::uint64_t seed, Truncation t = Truncation::typical) {
  if (t == Truncation::typical && !(eps_prime > 0.0 && eps_prime < eps && eps <= 1.0))
    throw ConfigError("build_code: need 0 < eps' < eps <= 1");
  SynthesisCode c;
  c.n = n;
  c.rate = rate;
  c.m_count = codeword_count(n, rate);
  c.base = base;
  c.eps = eps;
  c.eps_prime = eps_prime;
  c.truncation = t;
  c.seed = seed;
  c.codebook.reserve(c.m_count);
  for (std::size_t m = 0; m < c.m_count; ++m) {
    Rng g = make_stream(seed, kCodebookCell, m);
    c.codebook.push_back(truncated_w_sampler(base, n, eps_prime, g, t));
  }
  if (t == Truncation::typical) {
    // one check per w-type; an empty conditional set leaves P(.|w) undefined
    std::map<std::vector<long>, bool> seen;
    for (const auto& w : c.codebook) {
      auto counts = counts_of(w, base.w_size());
      if (!seen.emplace(counts, true).second) continue;
      if (cond_typical_prob_for_type(base.q_w, base.x_given_w, counts, eps) <= 0.0 ||
          cond_typical_prob_for_type(base.q_w, base.y_given_w, counts, eps) <= 0.0)
        throw ResourceError("build_code: a codeword has an empty conditional typical set at this n");
    }
  }
  return c;
}

struct InducedJointExact {
  std::size_t n = 0, rows = 0, cols = 0;
  std::vector<double> mass;  ///< row-major, x^n index by y^n index
  double at(std::size_t i, std::size_t j) const { return mass[i * cols + j]; }
};

inline InducedJointExact induced_joint_exact(const SynthesisCode& code) {
  const std::size_t nx = code.base.x_size(), ny = code.base.y_size();
  detail::check_exact_budget(nx, ny, code.n);
  if (code.m_count > kExactCodewordBudget) throw ResourceError("exact induced joint exceeds the 2^14 codeword budget");
  std::map<Sequence, std::size_t> uniq;
  for (const auto& w : code.codebook) ++uniq[w];
  std::vector<std::vector<double>> rx, ry;
  std::vector<double> wts;
  for (const auto& [w, mult] : uniq) {
    rx.push_back(detail::conditional_law(code.base, w, code.eps, Axis::x, code.truncation));
    ry.push_back(detail::conditional_law(code.base, w, code.eps, Axis::y, code.truncation));
    wts.push_back(static_cast<double>(mult) / static_cast<double>(code.m_count));
  }
  InducedJointExact out;
  out.n = code.n;
  out.rows = detail::ipow(nx, code.n);
  out.cols = detail::ipow(ny, code.n);
  out.mass = detail::dense_mixture(rx, ry, wts);
  return out;
}

/// Pointwise evaluation of P(x^n|m), P(y^n|m) and the induced joint, in O(M n).
class CodeEvaluator {
 public:
  explicit CodeEvaluator(const SynthesisCode& code) : code_(code) {
    std::map<std::vector<long>, std::pair<double, double>> cache;
    for (const auto& w : code.codebook) {
      const auto c = counts_of(w, code.base.w_size());
      auto it = cache.find(c);
      if (it == cache.end()) {
        const double zx = detail::log_cond_normalizer(code.base, w, code.eps, Axis::x, code.truncation);
        const double zy = detail::log_cond_normalizer(code.base, w, code.eps, Axis::y, code.truncation);
        it = cache.emplace(c, std::make_pair(zx, zy)).first;
      }
      log_zx_.push_back(it->second.first);
      log_zy_.push_back(it->second.second);
    }
  }

  double log_cond(std::size_t m, std::span<const Symbol> s, Axis a) const {
    const auto& w = code_.codebook[m];
    const auto& cond = detail::axis_cond(code_.base, a);
    if (code_.truncation == Truncation::typical && !is_cond_typical(w, s, code_.base.q_w, cond, code_.eps))
      return -kInf;
    const double z = a == Axis::x ? log_zx_[m] : log_zy_[m];
    if (z == -kInf) return -kInf;
    return log_product_mass(cond, w, s) - z;
  }

  double log_joint(std::span<const Symbol> x, std::span<const Symbol> y) const {
    LogSumExp acc;
    for (std::size_t m = 0; m < code_.m_count; ++m) {
      const double lx = log_cond(m, x, Axis::x);
      if (lx == -kInf) continue;
      acc.add(lx + log_cond(m, y, Axis::y));
    }
    return acc.value() - std::log(static_cast<double>(code_.m_count));
  }

 private:
  const SynthesisCode& code_;
  std::vector<double> log_zx_, log_zy_;
};

struct DivergenceEstimate {
  double point = 0.0;
  double std_error = 0.0;
  Method method = Method::exact;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  double normalized = 0.0;           ///< point / n
  std::size_t structural_zeros = 0;  ///< sampled pi-support points with P = 0
};

inline bool exact_within_budget(const SynthesisCode& code) {
  try {
    detail::check_exact_budget(code.base.x_size(), code.base.y_size(), code.n);
  } catch (const ResourceError&) {
    return false;
  }
  return code.m_count <= kExactCodewordBudget;
}

namespace detail {

inline void draw_pi_pair(const JointPmf& pi, std::size_t n, Rng& g, Sequence& x, Sequence& y) {
  x.resize(n);
  y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto f = sample_index(pi.mass(), g);
    x[i] = static_cast<Symbol>(f / pi.dim(1));
    y[i] = static_cast<Symbol>(f % pi.dim(1));
  }
}

inline double log_pi_pair(const JointPmf& pi, std::span<const Symbol> x, std::span<const Symbol> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += safe_log(pi.at(x[i], y[i]));
  return s;
}

/// Jackknife standard error of (1/s) log(mean v).
inline double jackknife_log_mean(const std::vector<double>& v, double s) {
  const double n = static_cast<double>(v.size());
  if (v.size() < 2) return kInf;
  double sum = 0.0;
  for (double x : v) sum += x;
  std::vector<double> th(v.size());
  double mean_th = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double loo = (sum - v[i]) / (n - 1.0);
    th[i] = loo > 0.0 ? std::log(loo) / s : kInf;
    mean_th += th[i];
  }
  mean_th /= n;
  double acc = 0.0;
  for (double t : th) acc += (t - mean_th) * (t - mean_th);
  return std::sqrt((n - 1.0) / n * acc);
}

inline double mean_se(const std::vector<double>& v, double* mean_out) {
  const double n = static_cast<double>(v.size());
  double m = 0.0;
  for (double x : v) m += x;
  m /= n;
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  *mean_out = m;
  return v.size() > 1 ? std::sqrt(acc / (n - 1.0) / n) : kInf;
}

}  // namespace detail

/// TV(P_{X^nY^n}, pi^n): exact within budget, otherwise the Monte-Carlo
/// estimate of E_pi[(1 - P/pi)^+] under samples drawn from pi^n.
inline DivergenceEstimate estimate_tv(const SynthesisCode& code, std::size_t samples, std::uint64_t seed,
                                      bool force_monte_carlo = false) {
  const JointPmf pi = xy_marginal(code.base);
  DivergenceEstimate e;
  e.seed = seed;
  if (!force_monte_carlo && exact_within_budget(code)) {
    const auto p = induced_joint_exact(code);
    e.point = tv_unchecked(p.mass, detail::product_law(pi, code.n));
    e.normalized = e.point;
    return e;
  }
  if (samples < 2) throw ConfigError("estimate_tv: need at least 2 samples");
  e.method = Method::monte_carlo;
  e.samples = samples;
  const CodeEvaluator ev(code);
  Rng g = make_stream(seed, 0x7F, code.n);
  std::vector<double> v(samples);
  Sequence x, y;
  for (std::size_t i = 0; i < samples; ++i) {
    detail::draw_pi_pair(pi, code.n, g, x, y);
    const double lr = ev.log_joint(x, y) - detail::log_pi_pair(pi, x, y);
    if (lr == -kInf) ++e.structural_zeros;
    v[i] = std::max(0.0, 1.0 - std::exp(lr));
  }
  e.std_error = detail::mean_se(v, &e.point);
  e.normalized = e.point;
  return e;
}

/// D_{1+s}(P_{X^nY^n} || pi^n), s in [-1, 1].  Exact within budget;
/// otherwise plug-in Monte-Carlo with P as proposal for s >= 0 and pi for s < 0.
inline DivergenceEstimate estimate_renyi(const SynthesisCode& code, double s, std::size_t samples,
                                         std::uint64_t seed, bool force_monte_carlo = false) {
  if (!(s >= -1.0 && s <= 1.0)) throw ConfigError("estimate_renyi: s must lie in [-1, 1]");
  const JointPmf pi = xy_marginal(code.base);
  DivergenceEstimate e;
  e.seed = seed;
  const double n = static_cast<double>(code.n);
  if (!force_monte_carlo && exact_within_budget(code)) {
    const auto p = induced_joint_exact(code);
    const auto q = detail::product_law(pi, code.n);
    e.point = renyi_unchecked(p.mass, q, RenyiOrder(s));
    for (std::size_t i = 0; i < q.size(); ++i)
      if (q[i] > 0.0 && p.mass[i] <= 0.0) ++e.structural_zeros;
    e.normalized = code.n ? e.point / n : e.point;
    return e;
  }
  if (samples < 2) throw ConfigError("estimate_renyi: need at least 2 samples");
  e.method = Method::monte_carlo;
  e.samples = samples;
  const CodeEvaluator ev(code);
  Rng g = make_stream(seed, 0x5E, code.n);
  std::vector<double> v(samples);
  Sequence x, y;
  for (std::size_t i = 0; i < samples; ++i) {
    if (s >= 0.0) {
      const std::size_t m = static_cast<std::size_t>(uniform01(g) * static_cast<double>(code.m_count));
      const auto& w = code.codebook[std::min(m, code.m_count - 1)];
      x = truncated_cond_sampler(code.base, w, code.eps, g, Axis::x, code.truncation);
      y = truncated_cond_sampler(code.base, w, code.eps, g, Axis::y, code.truncation);
    } else {
      detail::draw_pi_pair(pi, code.n, g, x, y);
    }
    const double lr = ev.log_joint(x, y) - detail::log_pi_pair(pi, x, y);
    if (lr == -kInf) ++e.structural_zeros;
    if (s == 0.0)
      v[i] = lr;
    else if (s == -1.0)
      v[i] = lr > -kInf ? 1.0 : 0.0;
    else if (s > 0.0)
      v[i] = std::exp(s * lr);
    else
      v[i] = lr > -kInf ? std::exp((1.0 + s) * lr) : 0.0;
  }
  if (s == 0.0) {
    e.std_error = detail::mean_se(v, &e.point);
  } else {
    double mean = 0.0;
    detail::mean_se(v, &mean);
    const double ss = s == -1.0 ? -1.0 : s;
    e.point = mean > 0.0 ? std::log(mean) / ss : kInf;
    e.std_error = mean > 0.0 ? detail::jackknife_log_mean(v, ss) : kInf;
  }
  e.normalized = code.n ? e.point / n : e.point;
  return e;
}

/// max{D_{1+s}(P_{X|W}||pi_X|P_W) - R, D_{1+s}(P_X||pi_X)}.
inline double gamma_oneshot(const FinitePmf& p_w, const ConditionalPmf& p_x_given_w, const FinitePmf& pi_x,
                            double rate, double s) {
  if (!(s > 0.0 && s <= 1.0)) throw ConfigError("gamma_oneshot: s must lie in (0,1]");
  const double d_cond = conditional_renyi(p_w, p_x_given_w, pi_x, RenyiOrder(s));
  std::vector<double> px(pi_x.size(), 0.0);
  for (std::size_t w = 0; w < p_w.size(); ++w)
    for (std::size_t x = 0; x < pi_x.size(); ++x) px[x] += p_w[w] * p_x_given_w(w, x);
  const double d_marg = renyi_unchecked(px, pi_x.mass(), RenyiOrder(s));
  return std::max(d_cond - rate, d_marg);
}

struct OneShotReport {
  double lhs = 0.0;     ///< E_U sum_x P(x|U)^{1+s} pi^{-s}
  double lhs_se = 0.0;  ///< 0 for exact enumeration
  double rhs = 0.0;     ///< e^{s D(P_{X|W}||pi|P_W) - sR} + e^{s D(P_X||pi)}
  double rhs_gamma = 0.0;  ///< 2 e^{s Gamma}
  std::size_t codebooks = 0;
  bool exact = true;
  bool holds = false;
  bool holds_gamma = false;
};

/// One-shot soft-covering bound with |M| = m codewords (R = log m), checked
/// by exhaustive enumeration of codebooks when trials == 0, otherwise by
/// sampling `trials` codebooks.
inline OneShotReport oneshot_bound_verify(const FinitePmf& p_w, const ConditionalPmf& p_x_given_w,
                                          const FinitePmf& pi_x, std::size_t m, double s, std::size_t trials = 0,
                                          std::uint64_t seed = 0) {
  if (m == 0) throw ConfigError("oneshot_bound_verify: need at least one codeword");
  if (!(s > 0.0 && s <= 1.0)) throw ConfigError("oneshot_bound_verify: s must lie in (0,1]");
  if (p_x_given_w.rows() != p_w.size() || p_x_given_w.cols() != pi_x.size())
    throw ConfigError("oneshot_bound_verify: shape mismatch");
  const std::size_t nw = p_w.size(), nx = pi_x.size();
  const double rate = std::log(static_cast<double>(m));

  auto inner = [&](const std::vector<std::size_t>& book) {
    double acc = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
      double p = 0.0;
      for (auto w : book) p += p_x_given_w(w, x);
      p /= static_cast<double>(m);
      if (p <= 0.0) continue;
      if (pi_x[x] <= 0.0) return kInf;
      acc += std::exp((1.0 + s) * std::log(p) - s * std::log(pi_x[x]));
    }
    return acc;
  };

  OneShotReport r;
  if (trials == 0) {
    const std::size_t total = detail::ipow(nw, m);
    if (total > (std::size_t{1} << 20)) throw ResourceError("too many codebooks to enumerate");
    for (std::size_t idx = 0; idx < total; ++idx) {
      const auto seq = detail::decode_sequence(idx, m, nw);
      std::vector<std::size_t> book(seq.begin(), seq.end());
      double pr = 1.0;
      for (auto w : book) pr *= p_w[w];
      if (pr > 0.0) r.lhs += pr * inner(book);
    }
    r.codebooks = total;
  } else {
    r.exact = false;
    Rng g = make_stream(seed, 0x0E5, m);
    std::vector<double> v(trials);
    std::vector<std::size_t> book(m);
    for (std::size_t t = 0; t < trials; ++t) {
      for (auto& w : book) w = sample_index(p_w.mass(), g);
      v[t] = inner(book);
    }
    r.lhs_se = detail::mean_se(v, &r.lhs);
    r.codebooks = trials;
  }
  const double d_cond = conditional_renyi(p_w, p_x_given_w, pi_x, RenyiOrder(s));
  std::vector<double> px(nx, 0.0);
  for (std::size_t w = 0; w < nw; ++w)
    for (std::size_t x = 0; x < nx; ++x) px[x] += p_w[w] * p_x_given_w(w, x);
  const double d_marg = renyi_unchecked(px, pi_x.mass(), RenyiOrder(s));
  r.rhs = std::exp(s * d_cond - s * rate) + std::exp(s * d_marg);
  r.rhs_gamma = 2.0 * std::exp(s * gamma_oneshot(p_w, p_x_given_w, pi_x, rate, s));
  const double slack = r.exact ? 1e-12 * r.rhs : 3.0 * r.lhs_se;
  r.holds = r.lhs <= r.rhs + slack;
  r.holds_gamma = r.lhs <= r.rhs_gamma + slack;
  return r;
}

struct RateBoundReport {
  double lhs = 0.0;            ///< (1/n) D_{1+s}(P_{W^nX^nY^n} || P_{W^n} pi^n)
  double paper_rhs = 0.0;      ///< with the 4 eps/(1-eps') H coefficient
  double corrected_rhs = 0.0;  ///< with ((1+eps)^2/(1-eps') - (1-eps)^2/(1+eps')) H
  double delta1 = 0.0, delta2 = 0.0;
  double slack = 0.0;  ///< paper_rhs - lhs
  bool holds = false;
  std::size_t w_types = 0;
};

/// Exact per-letter conditional divergence of the truncated construction
/// against the single-letter rate bound.
inline RateBoundReport rate_bound_check(const MarkovCoupling& base, std::size_t n, double eps, double eps_prime,
                                        double s) {
  if (!(eps_prime > 0.0 && eps_prime < eps && eps <= 1.0)) throw ConfigError("rate_bound_check: need 0 < eps' < eps <= 1");
  if (!(s > 0.0 && s <= 1.0)) throw ConfigError("rate_bound_check: s must lie in (0,1]");
  if (n == 0) throw ConfigError("rate_bound_check: n must be positive");
  const std::size_t nx = base.x_size(), ny = base.y_size(), nw = base.w_size();
  detail::check_exact_budget(nx, ny, n);
  const JointPmf pi = xy_marginal(base);
  const auto pin = detail::product_law(pi, n);
  const std::size_t cols = detail::ipow(ny, n);
  const double log_tw = std::log(typical_prob_exact(TypicalSpec(base.q_w, n, eps_prime)));
  const auto& lf = log_factorial();

  RateBoundReport rep;
  LogSumExp total;
  for_each_composition(
      n, nw,
      [&](const std::vector<long>& c) {
        ++rep.w_types;
        Sequence w;
        for (std::size_t k = 0; k < nw; ++k) w.insert(w.end(), static_cast<std::size_t>(c[k]), static_cast<Symbol>(k));
        // log(number of sequences of this type) + log P_{W^n}(w^n)
        double log_mult = lf(n);
        for (long v : c) log_mult -= lf(static_cast<std::size_t>(v));
        const double log_pw = log_product_mass(base.q_w, w) - log_tw;
        const auto px = detail::conditional_law(base, w, eps, Axis::x, Truncation::typical);
        const auto py = detail::conditional_law(base, w, eps, Axis::y, Truncation::typical);
        LogSumExp inner;
        for (std::size_t i = 0; i < px.size(); ++i) {
          if (px[i] <= 0.0) continue;
          for (std::size_t j = 0; j < py.size(); ++j) {
            if (py[j] <= 0.0) continue;
            const double q = pin[i * cols + j];
            if (q <= 0.0) {
              inner.add(kInf);
              continue;
            }
            inner.add((1.0 + s) * (std::log(px[i]) + std::log(py[j])) - s * std::log(q));
          }
        }
        total.add(log_mult + log_pw + inner.value());
      },
      typical_ranges(base.q_w, n, eps_prime));
  if (rep.w_types == 0) throw ResourceError("rate_bound_check: the eps'-typical set of Q_W is empty at this n");
  rep.lhs = total.value() / (static_cast<double>(n) * s);

  const auto ex = cond_defect_extremes(base.q_w, base.x_given_w, n, eps, eps_prime);
  const auto ey = cond_defect_extremes(base.q_w, base.y_given_w, n, eps, eps_prime);
  rep.delta1 = ex.max_defect;
  rep.delta2 = ey.max_defect;
  const double i_q = mutual_information(induced_joint(base), 0);
  const double h_q = entropy(pi);
  const double a = (1.0 - eps) * (1.0 - eps) / (1.0 + eps_prime);
  const double b = (1.0 + eps) * (1.0 + eps) / (1.0 - eps_prime);
  const double corr = -std::log((1.0 - rep.delta1) * (1.0 - rep.delta2)) / static_cast<double>(n);
  rep.paper_rhs = a * i_q + 4.0 * eps / (1.0 - eps_prime) * h_q + corr;
  rep.corrected_rhs = a * i_q + (b - a) * h_q + corr;
  rep.slack = rep.paper_rhs - rep.lhs;
  rep.holds = rep.slack >= 0.0;
  return rep;
}

struct DominationReport {
  double delta_n = 0.0;
  double max_ratio = 0.0;  ///< max over (x^n,y^n) of P(x^n,y^n)(1 - delta_n) / pi^n(x^n,y^n)
  bool pointwise = false;
  std::vector<double> s_values, divergences, bounds;
  bool divergence_ok = false;
};

/// The codebook-averaged truncated law sum_w P_{W^n}(w) P(x^n|w) P(y^n|w)
/// against pi^n / (1 - delta_n), with
/// delta_n = 1 - Q_W^n(T_{eps'}) min_w Q(T_eps|w)_X min_w Q(T_eps|w)_Y.
inline DominationReport truncation_domination(const MarkovCoupling& base, std::size_t n, double eps, double eps_prime,
                                              const std::vector<double>& s_values = {0.5, 1.0}) {
  if (!(eps_prime > 0.0 && eps_prime < eps && eps <= 1.0)) throw ConfigError("truncation_domination: need 0 < eps' < eps <= 1");
  detail::check_exact_budget(base.x_size(), base.y_size(), n);
  const JointPmf pi = xy_marginal(base);
  const double tw = typical_prob_exact(TypicalSpec(base.q_w, n, eps_prime));
  const auto ex = cond_defect_extremes(base.q_w, base.x_given_w, n, eps, eps_prime);
  const auto ey = cond_defect_extremes(base.q_w, base.y_given_w, n, eps, eps_prime);
  if (ex.admissible_types == 0 || tw <= 0.0) throw ResourceError("truncation_domination: empty typical set");
  DominationReport rep;
  rep.delta_n = 1.0 - tw * ex.min_cond_prob * ey.min_cond_prob;
  const auto ws = detail::typical_w_sequences(base, n, eps_prime, Truncation::typical);
  std::vector<std::vector<double>> rx, ry;
  std::vector<double> wt;
  for (const auto& w : ws) {
    rx.push_back(detail::conditional_law(base, w, eps, Axis::x, Truncation::typical));
    ry.push_back(detail::conditional_law(base, w, eps, Axis::y, Truncation::typical));
    wt.push_back(std::exp(log_product_mass(base.q_w, w)) / tw);
  }
  const auto p = detail::dense_mixture(rx, ry, wt);
  const auto q = detail::product_law(pi, n);
  rep.pointwise = true;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    const double ratio = q[i] > 0.0 ? p[i] * (1.0 - rep.delta_n) / q[i] : kInf;
    rep.max_ratio = std::max(rep.max_ratio, ratio);
  }
  rep.pointwise = rep.max_ratio <= 1.0 + 1e-12;
  rep.divergence_ok = true;
  for (double s : s_values) {
    const double d = renyi_unchecked(p, q, RenyiOrder(s));
    const double bound = (1.0 + s) / s * std::log(1.0 / (1.0 - rep.delta_n));
    rep.s_values.push_back(s);
    rep.divergences.push_back(d);
    rep.bounds.push_back(bound);
    rep.divergence_ok = rep.divergence_ok && d <= bound + 1e-12;
  }
  return rep;
}

}  // namespace wynerlab
