#pragma once

// Wyner's common information
//
//   C(X;Y) = min I(XY;W)  over couplings with Q_XY = pi and X - W - Y,
//
// the Renyi upper bound C_{1+s}, and an independent brute-force oracle for
// binary sources.
//
// The solver works on (Q_W, Q_{X|W}, Q_{Y|W}), so the Markov chain holds by
// construction and only the marginal constraint Q_XY = pi has to be enforced.
// That is done with an augmented Lagrangian whose penalty weight follows the
// schedule 1e2 -> 1e6, followed by snapping of negligible masses to exact
// zeros and a Gauss-Newton feasibility restoration in logit space.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "wynerlab/divergence.hpp"
#include "wynerlab/error.hpp"
#include "wynerlab/parallel.hpp"
#include "wynerlab/prob.hpp"
#include "wynerlab/rng.hpp"
#include "wynerlab/simplex_opt.hpp"

namespace wynerlab {

struct CiOptions {
  std::size_t w_size = 0;  ///< 0 selects |X||Y|, the size that guarantees optimality
  int restarts = 64;
  std::uint64_t seed = 0;
  double feasibility_tol = 1e-8;  ///< TV between induced Q_XY and pi
  unsigned threads = 1;
  double mu_start = 1e2;
  double mu_max = 1e6;
  int max_outer = 40;
  double snap_tol = 1e-9;
  opt::SimplexMinOptions inner{};
};

struct CiSolution {
  double value = kInf;
  MarkovCoupling argmin;
  double constraint_residual = kInf;
  int restarts_used = 0;
  bool converged = false;  ///< a coupling within feasibility_tol was found
  int best_restart = -1;
};

namespace detail {

/// View of the concatenated parameter vector [Q_W | Q_{X|W} rows | Q_{Y|W} rows].
struct CouplingShape {
  std::size_t nw, nx, ny;

  std::size_t total() const { return nw + nw * nx + nw * ny; }
  std::size_t w(std::size_t i) const { return i; }
  std::size_t a(std::size_t w, std::size_t x) const { return nw + w * nx + x; }
  std::size_t b(std::size_t w, std::size_t y) const { return nw + nw * nx + w * ny + y; }

  opt::SimplexLayout layout() const {
    opt::SimplexLayout l;
    l.block_sizes.push_back(nw);
    for (std::size_t i = 0; i < nw; ++i) l.block_sizes.push_back(nx);
    for (std::size_t i = 0; i < nw; ++i) l.block_sizes.push_back(ny);
    return l;
  }

  std::vector<double> qxy(std::span<const double> q) const {
    std::vector<double> m(nx * ny, 0.0);
    for (std::size_t w = 0; w < nw; ++w) {
      if (q[this->w(w)] <= 0.0) continue;
      for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y) m[x * ny + y] += q[this->w(w)] * q[a(w, x)] * q[b(w, y)];
    }
    return m;
  }

  /// d f / d q given d f / d Q_XY, accumulated into grad.
  void chain_qxy(std::span<const double> q, const std::vector<double>& dqxy, std::span<double> grad) const {
    for (std::size_t w = 0; w < nw; ++w)
      for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y) {
          const double c = dqxy[x * ny + y];
          grad[this->w(w)] += c * q[a(w, x)] * q[b(w, y)];
          grad[a(w, x)] += c * q[this->w(w)] * q[b(w, y)];
          grad[b(w, y)] += c * q[this->w(w)] * q[a(w, x)];
        }
  }

  MarkovCoupling to_coupling(std::span<const double> q) const {
    std::vector<double> qw(q.begin(), q.begin() + nw);
    std::vector<std::vector<double>> ar(nw), br(nw);
    for (std::size_t w = 0; w < nw; ++w) {
      ar[w].assign(q.begin() + a(w, 0), q.begin() + a(w, 0) + nx);
      br[w].assign(q.begin() + b(w, 0), q.begin() + b(w, 0) + ny);
    }
    return MarkovCoupling(FinitePmf(qw), ConditionalPmf(ar), ConditionalPmf(br));
  }

  std::vector<double> from_coupling(const MarkovCoupling& c) const {
    std::vector<double> q(total());
    for (std::size_t w = 0; w < nw; ++w) {
      q[this->w(w)] = c.q_w[w];
      for (std::size_t x = 0; x < nx; ++x) q[a(w, x)] = c.x_given_w(w, x);
      for (std::size_t y = 0; y < ny; ++y) q[b(w, y)] = c.y_given_w(w, y);
    }
    return q;
  }
};

/// I(XY;W) of the Markov coupling encoded in q: H(Q_XY) - sum_w Q_W (H(A_w) + H(B_w)).
inline double coupling_mi(const CouplingShape& sh, std::span<const double> q) {
  double v = entropy(sh.qxy(q));
  for (std::size_t w = 0; w < sh.nw; ++w) {
    double h = 0.0;
    for (std::size_t x = 0; x < sh.nx; ++x) h -= xlogx(q[sh.a(w, x)]);
    for (std::size_t y = 0; y < sh.ny; ++y) h -= xlogx(q[sh.b(w, y)]);
    v -= q[sh.w(w)] * h;
  }
  return std::max(v, 0.0);
}

/// I(XY;W) with its gradient in q.
inline double coupling_mi_grad(const CouplingShape& sh, std::span<const double> q, std::span<double> grad) {
  const auto m = sh.qxy(q);
  if (!grad.empty()) {
    std::vector<double> d(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) d[i] = -(std::log(std::max(m[i], 1e-300)) + 1.0);
    sh.chain_qxy(q, d, grad);
    for (std::size_t w = 0; w < sh.nw; ++w) {
      double h = 0.0;
      for (std::size_t x = 0; x < sh.nx; ++x) {
        const double v = q[sh.a(w, x)];
        h -= xlogx(v);
        grad[sh.a(w, x)] += q[sh.w(w)] * (std::log(std::max(v, 1e-300)) + 1.0);
      }
      for (std::size_t y = 0; y < sh.ny; ++y) {
        const double v = q[sh.b(w, y)];
        h -= xlogx(v);
        grad[sh.b(w, y)] += q[sh.w(w)] * (std::log(std::max(v, 1e-300)) + 1.0);
      }
      grad[sh.w(w)] -= h;
    }
  }
  return coupling_mi(sh, q);
}

/// Gauss-Newton restoration of Q_XY = pi in logit space over the active
/// coordinates.  Returns the TV residual reached.
inline double restore_feasibility(const CouplingShape& sh, const opt::SimplexLayout& layout,
                                  std::span<const double> pi, std::vector<double>& q) {
  const std::size_t m = sh.nx * sh.ny;
  std::vector<std::size_t> act;
  for (std::size_t i = 0; i < sh.total(); ++i)
    if (layout.is_active(i) && q[i] > 0.0) act.push_back(i);

  auto residual = [&](const std::vector<double>& qq) {
    auto r = sh.qxy(qq);
    for (std::size_t i = 0; i < m; ++i) r[i] -= pi[i];
    return r;
  };
  auto norm1 = [](const std::vector<double>& r) {
    double s = 0.0;
    for (double v : r) s += std::abs(v);
    return 0.5 * s;
  };

  // block membership of each coordinate, for the softmax Jacobian
  std::vector<std::size_t> block_of(sh.total());
  {
    std::size_t off = 0, bi = 0;
    for (auto bs : layout.block_sizes) {
      for (std::size_t i = off; i < off + bs; ++i) block_of[i] = bi;
      off += bs;
      ++bi;
    }
  }

  auto r = residual(q);
  double res = norm1(r);
  for (int it = 0; it < 200 && res > 1e-15; ++it) {
    // J_q: d Q_XY / d q (m x total)
    Eigen::MatrixXd jq = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(sh.total()));
    for (std::size_t w = 0; w < sh.nw; ++w)
      for (std::size_t x = 0; x < sh.nx; ++x)
        for (std::size_t y = 0; y < sh.ny; ++y) {
          const auto row = static_cast<Eigen::Index>(x * sh.ny + y);
          jq(row, sh.w(w)) += q[sh.a(w, x)] * q[sh.b(w, y)];
          jq(row, sh.a(w, x)) += q[sh.w(w)] * q[sh.b(w, y)];
          jq(row, sh.b(w, y)) += q[sh.w(w)] * q[sh.a(w, x)];
        }
    // J_z = J_q * (diag(q) - q q^T) restricted to active coords of each block
    Eigen::MatrixXd jz(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(act.size()));
    for (std::size_t c = 0; c < act.size(); ++c) {
      const auto i = act[c];
      Eigen::VectorXd col = jq.col(i) * q[i];
      for (std::size_t k : act)
        if (block_of[k] == block_of[i]) col -= jq.col(k) * q[k] * q[i];
      jz.col(static_cast<Eigen::Index>(c)) = col;
    }
    Eigen::VectorXd rv(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) rv(static_cast<Eigen::Index>(i)) = r[i];
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(jz);
    cod.setThreshold(1e-12);
    Eigen::VectorXd dz = -cod.solve(rv);

    bool improved = false;
    for (double step = 1.0; step > 1e-6; step *= 0.5) {
      std::vector<double> trial = q;
      // apply logit step per block: q_i <- q_i exp(step dz_i), then renormalize
      for (std::size_t c = 0; c < act.size(); ++c)
        trial[act[c]] = q[act[c]] * std::exp(std::clamp(step * dz(static_cast<Eigen::Index>(c)), -50.0, 50.0));
      std::size_t off = 0;
      for (auto bs : layout.block_sizes) {
        double s = 0.0;
        for (std::size_t i = off; i < off + bs; ++i) s += trial[i];
        for (std::size_t i = off; i < off + bs; ++i) trial[i] /= s;
        off += bs;
      }
      auto rt = residual(trial);
      const double nt = norm1(rt);
      if (nt < res) {
        q = std::move(trial);
        r = std::move(rt);
        res = nt;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  return res;
}

/// Generic constrained minimization over Markov couplings with Q_XY = pi.
struct CouplingProblem {
  CouplingShape shape;
  std::vector<double> pi;
  opt::SimplexObjective objective;  ///< value and gradient in q
  std::function<double(std::span<const double>)> final_value;  ///< exact value at a feasible point
};

struct CouplingCandidate {
  std::vector<double> q;
  double value = kInf;
  double residual = kInf;
};

inline CouplingCandidate solve_from_schedule(const CouplingProblem& prob, std::vector<double> start,
                                             const CiOptions& o) {
  const auto& sh = prob.shape;
  const std::size_t m = sh.nx * sh.ny;
  auto layout = sh.layout();
  std::vector<double> lambda(m, 0.0);
  double mu = o.mu_start;
  std::vector<double> q = opt::conform(layout, start);

  for (int outer = 0; outer < o.max_outer; ++outer) {
    opt::SimplexObjective al = [&](std::span<const double> qq, std::span<double> g) {
      const double base = prob.objective(qq, g);
      if (!std::isfinite(base)) return base;
      auto qxy = sh.qxy(qq);
      double pen = 0.0;
      std::vector<double> d(m);
      for (std::size_t i = 0; i < m; ++i) {
        const double r = qxy[i] - prob.pi[i];
        pen += lambda[i] * r + 0.5 * mu * r * r;
        d[i] = lambda[i] + mu * r;
      }
      if (!g.empty()) sh.chain_qxy(qq, d, g);
      return base + pen;
    };
    auto res = opt::minimize_on_simplices(al, layout, q, o.inner);
    q = std::move(res.q);
    auto qxy = sh.qxy(q);
    double rmax = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double r = qxy[i] - prob.pi[i];
      rmax = std::max(rmax, std::abs(r));
      lambda[i] += mu * r;
    }
    if (rmax < 1e-11 && mu >= o.mu_max) break;
    mu = std::min(mu * 10.0, o.mu_max);
  }

  auto finish = [&](std::vector<double> qq, const opt::SimplexLayout& lay) {
    CouplingCandidate c;
    c.residual = restore_feasibility(sh, lay, prob.pi, qq);
    c.value = prob.final_value(qq);
    c.q = std::move(qq);
    return c;
  };

  // snapped variant: negligible masses become structural zeros
  opt::SimplexLayout snapped = layout;
  snapped.active.assign(sh.total(), true);
  std::vector<double> qs = q;
  std::size_t off = 0;
  for (auto bs : layout.block_sizes) {
    double keep = 0.0;
    std::size_t argmax = off;
    for (std::size_t i = off; i < off + bs; ++i)
      if (qs[i] > qs[argmax]) argmax = i;
    for (std::size_t i = off; i < off + bs; ++i) {
      if (qs[i] < o.snap_tol && i != argmax) {
        qs[i] = 0.0;
        snapped.active[i] = false;
      }
      keep += qs[i];
    }
    for (std::size_t i = off; i < off + bs; ++i) qs[i] /= keep;
    off += bs;
  }
  CouplingCandidate a = finish(std::move(qs), snapped);
  CouplingCandidate b = finish(q, layout);
  const bool a_ok = a.residual <= o.feasibility_tol && std::isfinite(a.value);
  const bool b_ok = b.residual <= o.feasibility_tol && std::isfinite(b.value);
  if (a_ok && (!b_ok || a.value <= b.value + 1e-12)) return a;
  if (b_ok) return b;
  return a.residual <= b.residual ? a : b;
}

/// Runs the penalty schedule from `start`.  A weak first penalty can let the
/// iterate collapse onto a product coupling, where the constraint gradient
/// vanishes; when the schedule ends infeasible the start is retried with the
/// final penalty weight from the outset.
inline CouplingCandidate solve_from(const CouplingProblem& prob, const std::vector<double>& start,
                                    const CiOptions& o) {
  auto c = solve_from_schedule(prob, start, o);
  if (c.residual <= o.feasibility_tol && std::isfinite(c.value)) return c;
  CiOptions stiff = o;
  stiff.mu_start = o.mu_max;
  auto d = solve_from_schedule(prob, start, stiff);
  const bool d_ok = d.residual <= o.feasibility_tol && std::isfinite(d.value);
  return d_ok || d.residual < c.residual ? d : c;
}

inline CiSolution solve_coupling_problem(const CouplingProblem& prob, const CiOptions& o,
                                         const std::vector<std::vector<double>>& extra_starts) {
  const auto& sh = prob.shape;
  const std::size_t n_starts = static_cast<std::size_t>(std::max(o.restarts, 1));
  auto starts = [&](std::size_t k) {
    if (k < extra_starts.size()) return extra_starts[k];
    Rng g = make_stream(o.seed, 0xC1, k);
    std::vector<double> q(sh.total());
    auto put = [&](std::size_t off, std::size_t len) {
      auto d = dirichlet_ones(len, g);
      std::copy(d.begin(), d.end(), q.begin() + static_cast<std::ptrdiff_t>(off));
    };
    put(0, sh.nw);
    for (std::size_t w = 0; w < sh.nw; ++w) put(sh.a(w, 0), sh.nx);
    for (std::size_t w = 0; w < sh.nw; ++w) put(sh.b(w, 0), sh.ny);
    return q;
  };
  auto cands = parallel_map<CouplingCandidate>(n_starts, o.threads, [&](std::size_t k) {
    return solve_from(prob, starts(k), o);
  });

  CiSolution sol;
  sol.restarts_used = static_cast<int>(n_starts);
  int best = -1;
  for (std::size_t k = 0; k < cands.size(); ++k) {
    const auto& c = cands[k];
    const bool feas = c.residual <= o.feasibility_tol && std::isfinite(c.value);
    if (!feas) continue;
    if (best < 0 || c.value < cands[static_cast<std::size_t>(best)].value) best = static_cast<int>(k);
  }
  if (best < 0) {
    // nothing feasible: report the least infeasible iterate, flagged
    for (std::size_t k = 0; k < cands.size(); ++k)
      if (best < 0 || cands[k].residual < cands[static_cast<std::size_t>(best)].residual) best = static_cast<int>(k);
    sol.converged = false;
  } else {
    sol.converged = true;
  }
  const auto& c = cands[static_cast<std::size_t>(best)];
  sol.value = c.value;
  sol.argmin = sh.to_coupling(c.q);
  sol.constraint_residual = c.residual;
  sol.best_restart = best;
  return sol;
}

inline std::vector<double> copy_start(const CouplingShape& sh, std::span<const double> pi) {
  // W = (X,Y): Q_W = pi flattened, deterministic conditionals.
  std::vector<double> q(sh.total(), 0.0);
  for (std::size_t x = 0; x < sh.nx; ++x)
    for (std::size_t y = 0; y < sh.ny; ++y) {
      const std::size_t w = x * sh.ny + y;
      q[sh.w(w)] = pi[w];
      q[sh.a(w, x)] = 1.0;
      q[sh.b(w, y)] = 1.0;
    }
  return q;
}

}  // namespace detail

/// Wyner's common information of a rank-2 joint pi over X x Y.
inline CiSolution wyner_ci(const JointPmf& pi, const CiOptions& opts = {}) {
  if (pi.rank() != 2) throw ConfigError("wyner_ci: pi must be a joint over X x Y");
  const std::size_t nx = pi.dim(0), ny = pi.dim(1);
  const std::size_t nw = opts.w_size ? opts.w_size : nx * ny;
  detail::CouplingShape sh{nw, nx, ny};
  detail::CouplingProblem prob;
  prob.shape = sh;
  prob.pi.assign(pi.mass().begin(), pi.mass().end());
  prob.objective = [sh](std::span<const double> q, std::span<double> g) {
    return detail::coupling_mi_grad(sh, q, g);
  };
  prob.final_value = [sh](std::span<const double> q) { return detail::coupling_mi(sh, q); };
  std::vector<std::vector<double>> extra;
  if (nw == nx * ny) extra.push_back(detail::copy_start(sh, prob.pi));
  return detail::solve_coupling_problem(prob, opts, extra);
}

/// Independent grid oracle for binary sources with binary W.
///
/// Parameterizes the feasible set by (a0, a1) = (Q_{X|W}(0|0), Q_{X|W}(0|1));
/// Q_W and Q_{Y|W} then follow from the three marginal equations in closed
/// form, so every grid point is exactly feasible or rejected.  The grid is
/// refined by repeated zooming around the best point.
inline double wyner_ci_oracle(const JointPmf& pi, int grid = 400, int zooms = 6) {
  if (pi.rank() != 2 || pi.dim(0) != 2 || pi.dim(1) != 2)
    throw ConfigError("wyner_ci_oracle: binary sources only");
  const double p00 = pi.at(0, 0);
  const double px0 = pi.at(0, 0) + pi.at(0, 1);
  const double py0 = pi.at(0, 0) + pi.at(1, 0);
  const double hxy = entropy(pi);
  if (mutual_information(pi) <= 1e-15) return 0.0;  // constant W is feasible

  auto h2 = [](double p) { return -xlogx(p) - xlogx(1.0 - p); };
  constexpr double kSlack = 1e-12;
  auto value_at = [&](double a0, double a1) -> double {
    if (a0 == a1) return kInf;
    const double p = (px0 - a1) / (a0 - a1);
    if (p < -kSlack || p > 1.0 + kSlack) return kInf;
    const double pc = std::clamp(p, 0.0, 1.0);
    const double det = pc * (1.0 - pc) * (a1 - a0);
    if (std::abs(det) < 1e-300) return kInf;
    // [pc, 1-pc; pc a0, (1-pc) a1] [b0; b1] = [py0; p00]
    const double b0 = (py0 * (1.0 - pc) * a1 - (1.0 - pc) * p00) / det;
    const double b1 = (pc * p00 - pc * a0 * py0) / det;
    if (b0 < -kSlack || b0 > 1.0 + kSlack || b1 < -kSlack || b1 > 1.0 + kSlack) return kInf;
    const double bb0 = std::clamp(b0, 0.0, 1.0), bb1 = std::clamp(b1, 0.0, 1.0);
    // reject points the clamping moved off the constraint set
    const double r00 = pc * a0 * bb0 + (1.0 - pc) * a1 * bb1 - p00;
    const double rx = pc * a0 + (1.0 - pc) * a1 - px0;
    const double ry = pc * bb0 + (1.0 - pc) * bb1 - py0;
    if (std::abs(r00) + std::abs(rx) + std::abs(ry) > 1e-9) return kInf;
    return hxy - pc * (h2(a0) + h2(bb0)) - (1.0 - pc) * (h2(a1) + h2(bb1));
  };

  struct Box {
    double lo0, hi0, lo1, hi1;
  };
  struct Hit {
    double v, a0, a1;
  };
  auto scan = [&](const Box& b) {
    std::vector<Hit> hits;
    for (int i = 0; i <= grid; ++i) {
      const double a0 = b.lo0 + (b.hi0 - b.lo0) * i / grid;
      for (int j = 0; j <= grid; ++j) {
        const double a1 = b.lo1 + (b.hi1 - b.lo1) * j / grid;
        const double v = value_at(a0, a1);
        if (v < kInf) hits.push_back({v, a0, a1});
      }
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& x, const Hit& y) { return x.v < y.v; });
    return hits;
  };
  auto shrink = [&](const Box& b, const Hit& h) {
    const double w0 = 4.0 * (b.hi0 - b.lo0) / grid, w1 = 4.0 * (b.hi1 - b.lo1) / grid;
    return Box{std::max(0.0, h.a0 - w0), std::min(1.0, h.a0 + w0), std::max(0.0, h.a1 - w1),
               std::min(1.0, h.a1 + w1)};
  };

  double best = hxy;  // W = (X,Y) is always feasible
  const Box whole{0.0, 1.0, 0.0, 1.0};
  const auto first = scan(whole);
  // zoom separately around a few well-separated coarse candidates; thin
  // feasible slivers near the boundary are easy to miss with a single zoom
  std::vector<Hit> seeds;
  const double sep = 10.0 / grid;
  for (const auto& h : first) {
    bool far = true;
    for (const auto& s : seeds) far = far && (std::abs(h.a0 - s.a0) > sep || std::abs(h.a1 - s.a1) > sep);
    if (far) seeds.push_back(h);
    if (seeds.size() == 6) break;
  }
  for (const auto& seed : seeds) {
    best = std::min(best, seed.v);
    Box box = shrink(whole, seed);
    for (int z = 0; z < zooms; ++z) {
      const auto hits = scan(box);
      if (hits.empty()) break;
      best = std::min(best, hits.front().v);
      box = shrink(box, hits.front());
    }
  }
  return std::max(best, 0.0);
}

/// C_{1+s}(X;Y) = min sum_w Q_W(w) D_{1+s}(Q_{X|W=w} Q_{Y|W=w} || pi) over the
/// same feasible set, s in (0,1].  An upper bound on the achievable rate of
/// memoryless resolvability codes; never below Wyner's common information.
inline double renyi_ci_upper(const JointPmf& pi, double s, const CiOptions& opts = {}) {
  if (!(s > 0.0 && s <= 1.0)) throw ConfigError("renyi_ci_upper: s must lie in (0,1]");
  if (pi.rank() != 2) throw ConfigError("renyi_ci_upper: pi must be a joint over X x Y");
  const std::size_t nx = pi.dim(0), ny = pi.dim(1);
  const std::size_t nw = opts.w_size ? opts.w_size : nx * ny;
  detail::CouplingShape sh{nw, nx, ny};
  std::vector<double> pim(pi.mass().begin(), pi.mass().end());
  // log pi with a floor so that infeasible intermediate iterates stay finite
  std::vector<double> log_pi_floor(pim.size()), log_pi(pim.size());
  for (std::size_t i = 0; i < pim.size(); ++i) {
    log_pi_floor[i] = std::log(std::max(pim[i], 1e-8));
    log_pi[i] = safe_log(pim[i]);
  }

  auto eval = [sh, s](std::span<const double> q, std::span<double> g, const std::vector<double>& lp) {
    double total = 0.0;
    for (std::size_t w = 0; w < sh.nw; ++w) {
      if (q[sh.w(w)] <= 0.0) continue;
      // S_w = sum_xy (A B)^{1+s} pi^{-s}
      LogSumExp acc;
      for (std::size_t x = 0; x < sh.nx; ++x)
        for (std::size_t y = 0; y < sh.ny; ++y) {
          const double ab = q[sh.a(w, x)] * q[sh.b(w, y)];
          if (ab <= 0.0) continue;
          if (lp[x * sh.ny + y] == -kInf) return kInf;
          acc.add((1.0 + s) * std::log(ab) - s * lp[x * sh.ny + y]);
        }
      const double log_s = acc.value();
      const double dw = log_s / s;
      total += q[sh.w(w)] * dw;
      if (!g.empty()) {
        g[sh.w(w)] += dw;
        const double qw = q[sh.w(w)];
        for (std::size_t x = 0; x < sh.nx; ++x)
          for (std::size_t y = 0; y < sh.ny; ++y) {
            const double av = q[sh.a(w, x)], bv = q[sh.b(w, y)];
            if (av <= 0.0 || bv <= 0.0) continue;
            const double t = std::exp((1.0 + s) * std::log(av * bv) - s * lp[x * sh.ny + y] - log_s);
            g[sh.a(w, x)] += qw * (1.0 + s) / s * t / av;
            g[sh.b(w, y)] += qw * (1.0 + s) / s * t / bv;
          }
      }
    }
    return total;
  };

  detail::CouplingProblem prob;
  prob.shape = sh;
  prob.pi = pim;
  prob.objective = [eval, log_pi_floor](std::span<const double> q, std::span<double> g) {
    return eval(q, g, log_pi_floor);
  };
  prob.final_value = [eval, log_pi](std::span<const double> q) { return eval(q, {}, log_pi); };

  std::vector<std::vector<double>> extra;
  if (nw == nx * ny) extra.push_back(detail::copy_start(sh, pim));
  CiOptions o = opts;
  const auto wyner = wyner_ci(pi, opts);
  if (wyner.converged && wyner.argmin.w_size() == nw) extra.push_back(sh.from_coupling(wyner.argmin));
  return detail::solve_coupling_problem(prob, o, extra).value;
}

}  // namespace wynerlab
