#pragma once

// Discrepancy measures: relative entropy, Renyi divergence of order 1+s,
// conditional versions, total variation, the binary Renyi divergence and the
// lower-bound family relating Renyi divergence to total variation.

#include <algorithm>
#include <cmath>
#include <span>

#include "wynerlab/error.hpp"
#include "wynerlab/prob.hpp"

namespace wynerlab {

/// Renyi order 1+s with s in [-1, inf).
class RenyiOrder {
 public:
  explicit RenyiOrder(double s) : s_(s) {
    if (!(s >= -1.0) || std::isnan(s)) throw ConfigError("RenyiOrder: s must be >= -1");
  }
  static RenyiOrder kl() { return RenyiOrder(0.0); }
  static RenyiOrder zero() { return RenyiOrder(-1.0); }

  double s() const { return s_; }
  double order() const { return 1.0 + s_; }
  bool is_kl() const { return s_ == 0.0; }
  bool is_zero_order() const { return s_ == -1.0; }

 private:
  double s_;
};

/// Renyi divergence on raw mass vectors.  No normalization check, so it can
/// be used on large enumerated laws; callers supply valid pmfs.
inline double renyi_unchecked(std::span<const double> p, std::span<const double> q, RenyiOrder ord) {
  if (p.size() != q.size()) throw ConfigError("renyi: mismatched alphabets");
  const double s = ord.s();
  if (ord.is_kl()) {
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] <= 0.0) continue;
      if (q[i] <= 0.0) return kInf;
      d += p[i] * std::log(p[i] / q[i]);
    }
    return std::max(d, 0.0);
  }
  if (ord.is_zero_order()) {
    double covered = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p[i] > 0.0) covered += q[i];
    if (covered <= 0.0) return kInf;
    return std::max(-std::log(std::min(covered, 1.0)), 0.0);
  }
  LogSumExp acc;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) {
      if (s > 0.0) return kInf;
      continue;  // q^{-s} = 0 for s < 0
    }
    acc.add((1.0 + s) * std::log(p[i]) - s * std::log(q[i]));
  }
  const double lse = acc.value();
  if (lse == -kInf) return kInf;  // only reachable for s < 0: (1/s) log 0
  return std::max(lse / s, 0.0);
}

/// D_{1+s}(p || q).  s = 0 is relative entropy and s = -1 is -log q(supp p).
/// Returns +inf on absolute-continuity violations where the order demands it.
inline double renyi(const FinitePmf& p, const FinitePmf& q, RenyiOrder ord) {
  if (p.size() != q.size()) throw ConfigError("renyi: mismatched alphabets");
  return renyi_unchecked(p.mass(), q.mass(), ord);
}

inline double renyi(const JointPmf& p, const JointPmf& q, RenyiOrder ord) {
  if (p.dims() != q.dims()) throw ConfigError("renyi: mismatched shapes");
  return renyi_unchecked(p.mass(), q.mass(), ord);
}

inline double kl(const FinitePmf& p, const FinitePmf& q) { return renyi(p, q, RenyiOrder::kl()); }

/// D_{1+s}(P_{Y|X} || Q_{Y|X} | P_X) = D_{1+s}(P_X P_{Y|X} || P_X Q_{Y|X}), with
/// P_{XY} given as a rank-2 joint and Q_{Y|X} as rows indexed by x.
inline double conditional_renyi(const JointPmf& p_joint, const ConditionalPmf& q_cond, RenyiOrder ord) {
  if (p_joint.rank() != 2 || q_cond.rows() != p_joint.dim(0) || q_cond.cols() != p_joint.dim(1))
    throw ConfigError("conditional_renyi: shape mismatch");
  const FinitePmf px = marginal(p_joint, 0);
  std::vector<double> glued(p_joint.size());
  for (std::size_t x = 0; x < p_joint.dim(0); ++x)
    for (std::size_t y = 0; y < p_joint.dim(1); ++y) glued[x * p_joint.dim(1) + y] = px[x] * q_cond(x, y);
  return renyi_unchecked(p_joint.mass(), glued, ord);
}

/// Conditional version with the conditional law and the conditioning pmf
/// supplied separately: D_{1+s}(P_{X|W} || Q_X | P_W) for a fixed output law.
inline double conditional_renyi(const FinitePmf& p_w, const ConditionalPmf& p_x_given_w,
                                const FinitePmf& q_x, RenyiOrder ord) {
  if (p_x_given_w.rows() != p_w.size() || p_x_given_w.cols() != q_x.size())
    throw ConfigError("conditional_renyi: shape mismatch");
  std::vector<double> lhs, rhs;
  for (std::size_t w = 0; w < p_w.size(); ++w)
    for (std::size_t x = 0; x < q_x.size(); ++x) {
      lhs.push_back(p_w[w] * p_x_given_w(w, x));
      rhs.push_back(p_w[w] * q_x[x]);
    }
  return renyi_unchecked(lhs, rhs, ord);
}

inline double tv_unchecked(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ConfigError("tv: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return std::min(0.5 * acc, 1.0);
}

/// Total variation distance, half the l1 distance.
inline double tv(const FinitePmf& p, const FinitePmf& q) {
  if (p.size() != q.size()) throw ConfigError("tv: shape mismatch");
  return tv_unchecked(p.mass(), q.mass());
}
inline double tv(const JointPmf& p, const JointPmf& q) {
  if (p.dims() != q.dims()) throw ConfigError("tv: shape mismatch");
  return tv_unchecked(p.mass(), q.mass());
}

/// d_{1+s}(p || q) between Bernoulli laws with success probabilities p and q.
inline double binary_renyi(double p, double q, RenyiOrder ord) {
  if (!(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0))
    throw ConfigError("binary_renyi: probabilities outside [0,1]");
  const double a[2] = {p, 1.0 - p};
  const double b[2] = {q, 1.0 - q};
  return renyi_unchecked(a, b, ord);
}

namespace detail {

inline double golden_section_min(const std::function<double(double)>& f, double lo, double hi,
                                 double width, double* arg_out) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > width) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  if (fc <= fd) {
    if (arg_out) *arg_out = c;
    return fc;
  }
  if (arg_out) *arg_out = d;
  return fd;
}

}  // namespace detail

/// inf_{q in [0, 1-eps]} d_{1+s}(q + eps || q): the binary reduction of the
/// smallest Renyi divergence compatible with total variation eps.  Dense grid
/// of 10001 points followed by golden-section refinement around the best one.
inline double sason_inf(double eps, RenyiOrder ord) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw ConfigError("sason_inf: eps outside [0,1]");
  if (eps == 0.0) return 0.0;
  const double top = 1.0 - eps;
  auto obj = [&](double q) {
    q = std::clamp(q, 0.0, top);
    return binary_renyi(std::min(q + eps, 1.0), q, ord);
  };
  if (top <= 0.0) return obj(0.0);
  constexpr int kGrid = 10001;
  double best = kInf;
  int best_i = 0;
  for (int i = 0; i < kGrid; ++i) {
    const double v = obj(top * i / (kGrid - 1));
    if (v < best) {
      best = v;
      best_i = i;
    }
  }
  if (best == kInf || best == 0.0) return best;
  const double lo = top * std::max(best_i - 1, 0) / (kGrid - 1);
  const double hi = top * std::min(best_i + 1, kGrid - 1) / (kGrid - 1);
  const double refined = detail::golden_section_min(obj, lo, hi, 1e-10, nullptr);
  return std::min(best, refined);
}

/// Pinsker-type bound (1+s) eps^2 / 2 on D_{1+s} under total variation eps.
inline double pinsker_lb(double eps, double s) {
  if (!(s > -1.0)) throw ConfigError("pinsker_lb: s must exceed -1");
  return (1.0 + s) * eps * eps / 2.0;
}

/// Which side of order one a closed-form bound addresses.
enum class OrderSide {
  below_one,  ///< bounds D_{1-s}, s in (0,1)
  above_one,  ///< bounds D_{1+s}, s in [0, inf)
};

/// Raw two-term bound [min{1,(1-s)/s} log 1/(1-eps) - (1/s) log 2]^+ on the
/// binary infimum of order 1-s, s in (0,1).
inline double sason_raw_lb(double eps, double s) {
  if (!(s > 0.0 && s < 1.0)) throw ConfigError("sason_raw_lb: s must lie in (0,1)");
  if (!(eps >= 0.0 && eps <= 1.0)) throw ConfigError("sason_raw_lb: eps outside [0,1]");
  if (eps == 1.0) return kInf;
  const double v = std::min(1.0, (1.0 - s) / s) * std::log(1.0 / (1.0 - eps)) - std::log(2.0) / s;
  return std::max(v, 0.0);
}

/// Improved closed-form lower bounds obtained by optimizing the raw bound
/// over orders.  For `below_one` the bound is on D_{1-s}; for `above_one` it
/// is [log 1/(4(1-eps))]^+, independent of s.
inline double sason_closed_lb(double eps, double s, OrderSide side) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw ConfigError("sason_closed_lb: eps outside [0,1]");
  const auto quarter_bound = [&] {
    if (eps == 1.0) return kInf;
    return std::max(std::log(1.0 / (4.0 * (1.0 - eps))), 0.0);
  };
  if (side == OrderSide::above_one) {
    if (!(s >= 0.0)) throw ConfigError("sason_closed_lb: above_one needs s >= 0");
    return quarter_bound();
  }
  if (!(s > 0.0 && s < 1.0)) throw ConfigError("sason_closed_lb: below_one needs s in (0,1)");
  if (s <= 0.5) return quarter_bound();
  if (eps <= 0.5) return 0.0;
  return sason_raw_lb(eps, s);
}

}  // namespace wynerlab
