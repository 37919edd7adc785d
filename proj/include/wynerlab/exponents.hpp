#pragma once

// Strong-converse exponent machinery.
//
// For an augmented joint Q_XYU whose XY-support lies inside supp(pi):
//
//   omega(x,y,u) = abar [log Q_XY/pi + log Q_{XY|U}/(Q_{X|U} Q_{Y|U})] + alpha log Q_{XY|U}/pi
//   Omega(Q)     = -log E_Q exp(-theta omega)
//   R^alpha(Q)   = E_Q omega
//
// and the minimized quantities Omega^(alpha,theta), R^alpha, R_sh and
//
//   F^(alpha,theta)(R) = (Omega^(alpha,theta) - theta alpha R) / (1 + (5 - 3 alpha) theta),
//   F(R)               = sup over (alpha, theta) of F^(alpha,theta)(R).
//
// omega is evaluated in the equivalent linear form
//   abar log Q_XY + log Q_XYU + (abar - alpha) log Q_U - abar log Q_XU - abar log Q_YU - log pi,
// which makes the gradients below straightforward.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "wynerlab/ci.hpp"
#include "wynerlab/error.hpp"
#include "wynerlab/parallel.hpp"
#include "wynerlab/prob.hpp"
#include "wynerlab/rng.hpp"
#include "wynerlab/simplex_opt.hpp"

namespace wynerlab {

/// Joint Q over X x Y x U.
struct AugmentedJoint {
  JointPmf joint;

  AugmentedJoint() = default;
  explicit AugmentedJoint(JointPmf j) : joint(std::move(j)) {
    if (joint.rank() != 3) throw ConfigError("AugmentedJoint: need a joint over X x Y x U");
  }
  std::size_t x_size() const { return joint.dim(0); }
  std::size_t y_size() const { return joint.dim(1); }
  std::size_t u_size() const { return joint.dim(2); }

  /// supp(Q_XY) inside supp(pi).
  bool respects(const JointPmf& pi) const {
    if (pi.rank() != 2 || pi.dim(0) != x_size() || pi.dim(1) != y_size()) return false;
    for (std::size_t x = 0; x < x_size(); ++x)
      for (std::size_t y = 0; y < y_size(); ++y)
        if (pi.at(x, y) <= 0.0)
          for (std::size_t u = 0; u < u_size(); ++u)
            if (joint.at(x, y, u) > 0.0) return false;
    return true;
  }
};

struct ExponentPoint {
  double alpha = 0.0;
  double theta = 0.0;

  ExponentPoint() = default;
  ExponentPoint(double a, double t) : alpha(a), theta(t) {
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("ExponentPoint: alpha outside [0,1]");
    if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("ExponentPoint: theta must be finite and >= 0");
  }
  double abar() const { return 1.0 - alpha; }
};

struct ExponentOptions {
  int restarts = 32;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  double theta_min = 1e-4;
  double theta_max = 10.0;
  int alpha_points = 33;
  int theta_points = 65;
  double refine_width = 1e-6;
  int refine_restarts = 8;
  CiOptions ci{};
  /// Wyner argmin used as a warm start; computed on demand when absent.
  std::optional<MarkovCoupling> wyner_argmin{};
  opt::SimplexMinOptions inner{};
};

namespace detail {

/// Raw-vector evaluation of omega, Omega and R^alpha over a flattened
/// x-major (x,y,u) mass vector.
class OmegaKernel {
 public:
  OmegaKernel(const JointPmf& pi, std::size_t nu) : nx_(pi.dim(0)), ny_(pi.dim(1)), nu_(nu) {
    if (pi.rank() != 2) throw ConfigError("exponents: pi must be a joint over X x Y");
    if (nu == 0) throw ConfigError("exponents: |U| must be positive");
    log_pi_.resize(nx_ * ny_);
    for (std::size_t i = 0; i < log_pi_.size(); ++i) log_pi_[i] = safe_log(pi.mass()[i]);
  }

  std::size_t size() const { return nx_ * ny_ * nu_; }
  std::size_t nu() const { return nu_; }

  opt::SimplexLayout layout() const {
    opt::SimplexLayout l;
    l.block_sizes = {size()};
    l.active.resize(size());
    for (std::size_t t = 0; t < size(); ++t) l.active[t] = log_pi_[t / nu_] > -kInf;
    return l;
  }

  struct Marginals {
    std::vector<double> xy, u, xu, yu;
  };

  Marginals marginals(std::span<const double> q) const {
    Marginals m{std::vector<double>(nx_ * ny_, 0.0), std::vector<double>(nu_, 0.0),
                std::vector<double>(nx_ * nu_, 0.0), std::vector<double>(ny_ * nu_, 0.0)};
    for (std::size_t x = 0; x < nx_; ++x)
      for (std::size_t y = 0; y < ny_; ++y)
        for (std::size_t u = 0; u < nu_; ++u) {
          const double v = q[(x * ny_ + y) * nu_ + u];
          m.xy[x * ny_ + y] += v;
          m.u[u] += v;
          m.xu[x * nu_ + u] += v;
          m.yu[y * nu_ + u] += v;
        }
    return m;
  }

  /// omega at cell t; requires q_t > 0 and pi(x,y) > 0.
  double omega_at(std::span<const double> q, const Marginals& m, double alpha, std::size_t t) const {
    const std::size_t xy = t / nu_, u = t % nu_, x = xy / ny_, y = xy % ny_;
    const double abar = 1.0 - alpha;
    return abar * std::log(m.xy[xy]) + std::log(q[t]) + (abar - alpha) * std::log(m.u[u]) -
           abar * std::log(m.xu[x * nu_ + u]) - abar * std::log(m.yu[y * nu_ + u]) - log_pi_[xy];
  }

  /// R^alpha(Q) = E_Q omega; gradient omega + (1 - alpha).
  double r_alpha(std::span<const double> q, double alpha, std::span<double> grad) const {
    const auto m = marginals(q);
    double r = 0.0;
    for (std::size_t t = 0; t < size(); ++t) {
      if (q[t] <= 0.0) continue;
      if (log_pi_[t / nu_] == -kInf) return kInf;
      const double w = omega_at(q, m, alpha, t);
      r += q[t] * w;
      if (!grad.empty()) grad[t] = w + (1.0 - alpha);
    }
    return r;
  }

  /// Omega(Q) = -log sum_t q_t exp(-theta omega_t), with its gradient.
  double big_omega(std::span<const double> q, double alpha, double theta, std::span<double> grad) const {
    if (theta == 0.0) {
      if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
      return 0.0;
    }
    const auto m = marginals(q);
    std::vector<double> lg(size(), -kInf);
    double mx = -kInf;
    for (std::size_t t = 0; t < size(); ++t) {
      if (q[t] <= 0.0) continue;
      if (log_pi_[t / nu_] == -kInf) return -kInf;  // outside the admissible polytope
      lg[t] = std::log(q[t]) - theta * omega_at(q, m, alpha, t);
      mx = std::max(mx, lg[t]);
    }
    double z = 0.0;
    for (std::size_t t = 0; t < size(); ++t)
      if (lg[t] > -kInf) z += std::exp(lg[t] - mx);
    const double log_z = mx + std::log(z);
    if (!grad.empty()) {
      // normalized weights ghat_t = g_t / Z and their marginal sums
      const double abar = 1.0 - alpha;
      std::vector<double> gh(size(), 0.0);
      Marginals gm{std::vector<double>(nx_ * ny_, 0.0), std::vector<double>(nu_, 0.0),
                   std::vector<double>(nx_ * nu_, 0.0), std::vector<double>(ny_ * nu_, 0.0)};
      for (std::size_t t = 0; t < size(); ++t) {
        if (lg[t] == -kInf) continue;
        gh[t] = std::exp(lg[t] - log_z);
        const std::size_t xy = t / nu_, u = t % nu_, x = xy / ny_, y = xy % ny_;
        gm.xy[xy] += gh[t];
        gm.u[u] += gh[t];
        gm.xu[x * nu_ + u] += gh[t];
        gm.yu[y * nu_ + u] += gh[t];
      }
      for (std::size_t t = 0; t < size(); ++t) {
        if (q[t] <= 0.0) {
          grad[t] = 0.0;
          continue;
        }
        const std::size_t xy = t / nu_, u = t % nu_, x = xy / ny_, y = xy % ny_;
        const double dz = (1.0 - theta) * gh[t] / q[t] - theta * abar * gm.xy[xy] / m.xy[xy] -
                          theta * (abar - alpha) * gm.u[u] / m.u[u] + theta * abar * gm.xu[x * nu_ + u] / m.xu[x * nu_ + u] +
                          theta * abar * gm.yu[y * nu_ + u] / m.yu[y * nu_ + u];
        grad[t] = -dz;
      }
    }
    return -log_z;
  }

 private:
  std::size_t nx_, ny_, nu_;
  std::vector<double> log_pi_;
};

inline std::vector<double> flatten(const AugmentedJoint& q) {
  return std::vector<double>(q.joint.mass().begin(), q.joint.mass().end());
}

inline AugmentedJoint unflatten(const JointPmf& pi, std::size_t nu, std::vector<double> q) {
  double s = 0.0;
  for (double v : q) s += v;
  for (auto& v : q) v /= s;
  return AugmentedJoint(JointPmf({pi.dim(0), pi.dim(1), nu}, std::move(q)));
}

/// Q_XYU(x,y,u) = Q_W(u) Q_{X|W}(x|u) Q_{Y|W}(y|u), restricted to supp(pi).
inline std::vector<double> lift_coupling(const MarkovCoupling& c, const JointPmf& pi) {
  const std::size_t nx = pi.dim(0), ny = pi.dim(1), nu = c.w_size();
  std::vector<double> q(nx * ny * nu, 0.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < ny; ++y) {
      if (pi.at(x, y) <= 0.0) continue;
      for (std::size_t u = 0; u < nu; ++u) q[(x * ny + y) * nu + u] = c.q_w[u] * c.x_given_w(u, x) * c.y_given_w(u, y);
    }
  return q;
}

/// pi (x) uniform(U).
inline std::vector<double> pi_times_uniform(const JointPmf& pi, std::size_t nu) {
  std::vector<double> q(pi.size() * nu);
  for (std::size_t xy = 0; xy < pi.size(); ++xy)
    for (std::size_t u = 0; u < nu; ++u) q[xy * nu + u] = pi.mass()[xy] / static_cast<double>(nu);
  return q;
}

struct InnerResult {
  double value = kInf;
  std::vector<double> q;
  bool converged = false;
};

/// Multi-start minimization of f over the admissible polytope.  Starts are
/// tried in order; the loop ends early once a value below `stop_below` is
/// found.  Serial, so the result does not depend on the thread count.
inline InnerResult minimize_polytope(const OmegaKernel& k, const opt::SimplexObjective& f,
                                     const std::vector<std::vector<double>>& fixed_starts, int random_starts,
                                     std::uint64_t seed, std::uint64_t cell, double stop_below,
                                     const opt::SimplexMinOptions& inner) {
  const auto layout = k.layout();
  std::size_t n_active = 0;
  for (std::size_t t = 0; t < k.size(); ++t) n_active += layout.is_active(t);
  InnerResult best;
  auto consider = [&](const std::vector<double>& start) {
    auto r = opt::minimize_on_simplices(f, layout, start, inner);
    if (r.value < best.value) {
      best.value = r.value;
      best.q = std::move(r.q);
      best.converged = r.converged;
    }
    return best.value < stop_below;
  };
  for (const auto& s : fixed_starts)
    if (consider(s)) return best;
  for (int i = 0; i < random_starts; ++i) {
    Rng g = make_stream(seed, cell, static_cast<std::uint64_t>(i));
    auto d = dirichlet_ones(n_active, g);
    std::vector<double> start(k.size(), 0.0);
    std::size_t j = 0;
    for (std::size_t t = 0; t < k.size(); ++t)
      if (layout.is_active(t)) start[t] = d[j++];
    if (consider(start)) return best;
  }
  return best;
}

inline std::uint64_t cell_id(double alpha, double theta) {
  // stable stream id for a grid point
  const auto a = static_cast<std::uint64_t>(std::llround(alpha * 1e9));
  const auto t = static_cast<std::uint64_t>(std::llround(std::log(std::max(theta, 1e-300)) * 1e9) + (1ll << 50));
  return a * 0x9E3779B97F4A7C15ull ^ t;
}

inline const MarkovCoupling& ensure_wyner(const JointPmf& pi, ExponentOptions& o) {
  if (!o.wyner_argmin) o.wyner_argmin = wyner_ci(pi, o.ci).argmin;
  return *o.wyner_argmin;
}

inline std::vector<std::vector<double>> standard_starts(const JointPmf& pi, std::size_t nu, ExponentOptions& o) {
  std::vector<std::vector<double>> s;
  s.push_back(pi_times_uniform(pi, nu));
  const auto& w = ensure_wyner(pi, o);
  if (w.w_size() == nu) s.push_back(lift_coupling(w, pi));
  return s;
}

}  // namespace detail

/// omega(x,y,u).  Domain error outside supp(q) or outside supp(pi).
inline double omega(const AugmentedJoint& q, const JointPmf& pi, double alpha, std::size_t x, std::size_t y,
                    std::size_t u) {
  if (!q.respects(pi)) throw ConfigError("omega: supp(Q_XY) must lie inside supp(pi)");
  if (x >= q.x_size() || y >= q.y_size() || u >= q.u_size()) throw ConfigError("omega: symbol out of range");
  if (q.joint.at(x, y, u) <= 0.0) throw DomainError("omega: (x,y,u) outside supp(Q)");
  const detail::OmegaKernel k(pi, q.u_size());
  const auto v = detail::flatten(q);
  return k.omega_at(v, k.marginals(v), alpha, (x * q.y_size() + y) * q.u_size() + u);
}

/// Omega^(alpha,theta)(Q) = -log E_Q exp(-theta omega), expectation over supp(Q).
inline double big_omega_q(const AugmentedJoint& q, const JointPmf& pi, const ExponentPoint& pt) {
  if (!q.respects(pi)) throw ConfigError("big_omega_q: supp(Q_XY) must lie inside supp(pi)");
  const detail::OmegaKernel k(pi, q.u_size());
  return k.big_omega(detail::flatten(q), pt.alpha, pt.theta, {});
}

/// R^alpha(Q) = abar (D(Q_XY||pi) + D(Q_{XY|U}||Q_{X|U}Q_{Y|U}|Q_U)) + alpha D(Q_{XY|U}||pi|Q_U).
inline double r_alpha_q(const AugmentedJoint& q, const JointPmf& pi, double alpha) {
  if (!q.respects(pi)) throw ConfigError("r_alpha_q: supp(Q_XY) must lie inside supp(pi)");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("r_alpha_q: alpha outside [0,1]");
  const detail::OmegaKernel k(pi, q.u_size());
  return k.r_alpha(detail::flatten(q), alpha, {});
}

struct OmegaMin {
  double value = kInf;
  AugmentedJoint argmin;
  bool converged = false;
};

/// Omega^(alpha,theta) = min over the admissible polytope.  |U| = |X||Y|.
inline OmegaMin big_omega_min(const JointPmf& pi, const ExponentPoint& pt, ExponentOptions opts = {},
                              const std::vector<std::vector<double>>& extra_starts = {},
                              double stop_below = -kInf) {
  const std::size_t nu = pi.dim(0) * pi.dim(1);
  const detail::OmegaKernel k(pi, nu);
  OmegaMin out;
  if (pt.theta == 0.0) {
    out.value = 0.0;
    out.argmin = detail::unflatten(pi, nu, detail::pi_times_uniform(pi, nu));
    out.converged = true;
    return out;
  }
  // Omega / theta keeps the scale of the objective near R^alpha for small theta
  const double th = pt.theta, al = pt.alpha;
  opt::SimplexObjective f = [&k, th, al](std::span<const double> q, std::span<double> g) {
    const double v = k.big_omega(q, al, th, g);
    for (auto& gi : g) gi /= th;
    return v / th;
  };
  auto starts = extra_starts;
  for (auto& s : detail::standard_starts(pi, nu, opts)) starts.push_back(std::move(s));
  auto r = detail::minimize_polytope(k, f, starts, opts.restarts, opts.seed, detail::cell_id(al, th),
                                     stop_below / th, opts.inner);
  out.value = r.value * th;
  out.argmin = detail::unflatten(pi, nu, std::move(r.q));
  out.converged = r.converged;
  return out;
}

struct RAlphaMin {
  double value = kInf;
  AugmentedJoint argmin;
};

/// R^alpha = min over the admissible polytope of R^alpha(Q).
inline RAlphaMin r_alpha_min(const JointPmf& pi, double alpha, ExponentOptions opts = {}) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("r_alpha_min: alpha outside [0,1]");
  const std::size_t nu = pi.dim(0) * pi.dim(1);
  const detail::OmegaKernel k(pi, nu);
  RAlphaMin out;
  // divide by alpha when it is positive so the objective stays O(1) as alpha -> 0
  const double scale = alpha > 0.0 ? alpha : 1.0;
  opt::SimplexObjective f = [&k, alpha, scale](std::span<const double> q, std::span<double> g) {
    const double v = k.r_alpha(q, alpha, g);
    for (auto& gi : g) gi /= scale;
    return v / scale;
  };
  auto r = detail::minimize_polytope(k, f, detail::standard_starts(pi, nu, opts), opts.restarts, opts.seed,
                                     detail::cell_id(alpha, 0.0) ^ 0x52u, -kInf, opts.inner);
  out.value = std::max(r.value * scale, 0.0);
  out.argmin = detail::unflatten(pi, nu, std::move(r.q));
  return out;
}

struct RshResult {
  double value = 0.0;
  double alpha_star = 1.0;
  std::vector<double> alphas;
  std::vector<double> ratios;  ///< R^alpha / alpha
};

/// R_sh = sup over alpha in (0,1] of R^alpha / alpha, over a log-spaced grid
/// from `alpha_min` to 1.
inline RshResult r_sh(const JointPmf& pi, ExponentOptions opts = {}, double alpha_min = 1e-3, int points = 13) {
  if (!(alpha_min > 0.0 && alpha_min <= 1.0) || points < 1) throw ConfigError("r_sh: bad alpha grid");
  detail::ensure_wyner(pi, opts);
  RshResult res;
  for (int i = 0; i < points; ++i) {
    const double a = points == 1 ? 1.0 : alpha_min * std::pow(1.0 / alpha_min, static_cast<double>(i) / (points - 1));
    res.alphas.push_back(a);
  }
  res.ratios = parallel_map<double>(res.alphas.size(), opts.threads, [&](std::size_t i) {
    return r_alpha_min(pi, res.alphas[i], opts).value / res.alphas[i];
  });
  for (std::size_t i = 0; i < res.alphas.size(); ++i)
    if (res.ratios[i] > res.value || i == 0) {
      res.value = res.ratios[i];
      res.alpha_star = res.alphas[i];
    }
  return res;
}

/// F^(alpha,theta)(R) from a known Omega^(alpha,theta).
inline double f_from_omega(double big_omega, double rate, const ExponentPoint& pt) {
  return (big_omega - pt.theta * pt.alpha * rate) / (1.0 + (5.0 - 3.0 * pt.alpha) * pt.theta);
}

inline double f_point(const JointPmf& pi, double rate, const ExponentPoint& pt, ExponentOptions opts = {}) {
  if (!(rate >= 0.0)) throw ConfigError("f_point: rate must be >= 0");
  if (pt.theta == 0.0) return 0.0;
  return f_from_omega(big_omega_min(pi, pt, std::move(opts)).value, rate, pt);
}

/// Omega^(alpha,theta) over the (alpha, theta) grid used by f_rate.  Omega
/// does not depend on R, so one table serves every rate.
struct OmegaTable {
  std::vector<double> alphas, thetas;
  std::vector<double> omega;  ///< alpha-major
  std::vector<std::vector<double>> argmin;
  double at(std::size_t i, std::size_t j) const { return omega[i * thetas.size() + j]; }
};

inline OmegaTable omega_table(const JointPmf& pi, ExponentOptions opts = {}) {
  if (opts.alpha_points < 2 || opts.theta_points < 2) throw ConfigError("omega_table: grids need >= 2 points");
  if (!(opts.theta_min > 0.0 && opts.theta_max > opts.theta_min)) throw ConfigError("omega_table: bad theta range");
  detail::ensure_wyner(pi, opts);
  OmegaTable t;
  for (int i = 0; i < opts.alpha_points; ++i) t.alphas.push_back(static_cast<double>(i) / (opts.alpha_points - 1));
  for (int j = 0; j < opts.theta_points; ++j)
    t.thetas.push_back(opts.theta_min *
                       std::pow(opts.theta_max / opts.theta_min, static_cast<double>(j) / (opts.theta_points - 1)));
  const std::size_t nt = t.thetas.size();
  struct Column {
    std::vector<double> v;
    std::vector<std::vector<double>> q;
  };
  // columns of fixed alpha run in parallel; theta ascends within a column so
  // each cell is warm-started from its predecessor.  A cell stops early once
  // Omega < 0, since then F^(alpha,theta)(R) < 0 for every R >= 0.
  auto cols = parallel_map<Column>(t.alphas.size(), opts.threads, [&](std::size_t i) {
    Column c;
    std::vector<std::vector<double>> warm;
    for (std::size_t j = 0; j < nt; ++j) {
      auto r = big_omega_min(pi, ExponentPoint(t.alphas[i], t.thetas[j]), opts, warm, -1e-9);
      auto q = detail::flatten(r.argmin);
      c.v.push_back(r.value);
      c.q.push_back(q);
      warm = {q};
    }
    return c;
  });
  for (auto& c : cols) {
    t.omega.insert(t.omega.end(), c.v.begin(), c.v.end());
    for (auto& q : c.q) t.argmin.push_back(std::move(q));
  }
  return t;
}

struct RateResult {
  double value = 0.0;  ///< F(R), clamped at 0
  double raw = 0.0;    ///< best F^(alpha,theta)(R) found, before clamping
  double alpha_star = 0.0;
  double theta_star = 0.0;
};

/// F(R) from a precomputed table: grid maximum, then coordinatewise
/// golden-section refinement (theta in log scale) within the neighbouring cells.
inline RateResult f_rate(const JointPmf& pi, double rate, const OmegaTable& table, ExponentOptions opts = {}) {
  if (!(rate >= 0.0)) throw ConfigError("f_rate: rate must be >= 0");
  const std::size_t na = table.alphas.size(), nt = table.thetas.size();
  std::size_t bi = 0, bj = 0;
  double best = -kInf;
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < nt; ++j) {
      const double v = f_from_omega(table.at(i, j), rate, ExponentPoint(table.alphas[i], table.thetas[j]));
      if (v > best) {
        best = v;
        bi = i;
        bj = j;
      }
    }
  RateResult res;
  res.raw = best;
  res.alpha_star = table.alphas[bi];
  res.theta_star = table.thetas[bj];
  if (best > 0.0) {
    detail::ensure_wyner(pi, opts);
    ExponentOptions ro = opts;
    ro.restarts = opts.refine_restarts;
    const std::vector<std::vector<double>> warm{table.argmin[bi * nt + bj]};
    auto eval = [&](double a, double th) {
      const ExponentPoint pt(std::clamp(a, 0.0, 1.0), th);
      return f_from_omega(big_omega_min(pi, pt, ro, warm).value, rate, pt);
    };
    double a = res.alpha_star, lt = std::log(res.theta_star);
    const double a_lo = table.alphas[bi == 0 ? 0 : bi - 1], a_hi = table.alphas[std::min(bi + 1, na - 1)];
    const double t_lo = std::log(table.thetas[bj == 0 ? 0 : bj - 1]);
    const double t_hi = std::log(table.thetas[std::min(bj + 1, nt - 1)]);
    for (int round = 0; round < 2; ++round) {
      double arg = a;
      const double va = -detail::golden_section_min([&](double x) { return -eval(x, std::exp(lt)); }, a_lo, a_hi,
                                                    opts.refine_width, &arg);
      if (va > res.raw) {
        res.raw = va;
        a = arg;
      }
      double targ = lt;
      const double vt = -detail::golden_section_min([&](double x) { return -eval(a, std::exp(x)); }, t_lo, t_hi,
                                                    opts.refine_width, &targ);
      if (vt > res.raw) {
        res.raw = vt;
        lt = targ;
      }
    }
    res.alpha_star = a;
    res.theta_star = std::exp(lt);
  }
  res.value = std::max(res.raw, 0.0);
  return res;
}

inline RateResult f_rate(const JointPmf& pi, double rate, ExponentOptions opts = {}) {
  detail::ensure_wyner(pi, opts);
  return f_rate(pi, rate, omega_table(pi, opts), opts);
}

struct ThetaLimitReport {
  std::vector<double> thetas;
  std::vector<double> scaled;  ///< Omega^(alpha,theta) / theta
  std::vector<double> gaps;    ///< |scaled - R^alpha|
  double r_alpha = 0.0;
  bool monotone = true;  ///< gaps non-increasing as theta decreases, up to kGapFloor
  static constexpr double kGapFloor = 1e-9;
};

/// (1/theta) Omega^(alpha,theta) against R^alpha along a descending theta list.
inline ThetaLimitReport theta_limit_check(const JointPmf& pi, double alpha, const std::vector<double>& thetas,
                                          ExponentOptions opts = {}) {
  for (double t : thetas)
    if (!(t > 0.0)) throw ConfigError("theta_limit_check: thetas must be positive");
  detail::ensure_wyner(pi, opts);
  ThetaLimitReport rep;
  rep.thetas = thetas;
  const auto ra = r_alpha_min(pi, alpha, opts);
  rep.r_alpha = ra.value;
  const std::vector<std::vector<double>> warm{detail::flatten(ra.argmin)};
  for (double t : thetas) {
    const double s = big_omega_min(pi, ExponentPoint(alpha, t), opts, warm).value / t;
    rep.scaled.push_back(s);
    rep.gaps.push_back(std::abs(s - rep.r_alpha));
  }
  for (std::size_t i = 1; i < rep.gaps.size(); ++i)
    if (thetas[i] < thetas[i - 1] && rep.gaps[i] > std::max(rep.gaps[i - 1], ThetaLimitReport::kGapFloor)) rep.monotone = false;
  return rep;
}

}  // namespace wynerlab
