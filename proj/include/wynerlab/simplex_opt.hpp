#pragma once

// Smooth minimization over a product of probability simplices.
//
// Each block of the variable is a pmf.  Blocks are parameterized by softmax
// logits and the resulting unconstrained problem is handed to the Ceres
// line-search solver (L-BFGS).  Coordinates marked inactive are held at
// exactly zero, which is how structural zeros (support restrictions, snapped
// deterministic rows) are expressed.

#include <ceres/ceres.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "wynerlab/error.hpp"
#include "wynerlab/prob.hpp"

namespace wynerlab::opt {

/// Objective on the concatenated block vector.  Writes d f / d q into `grad`
/// when it is non-empty.  May return +inf for points outside the domain.
using SimplexObjective = std::function<double(std::span<const double> q, std::span<double> grad)>;

struct SimplexLayout {
  std::vector<std::size_t> block_sizes;
  std::vector<bool> active;  ///< empty means every coordinate is active

  std::size_t total() const {
    std::size_t t = 0;
    for (auto b : block_sizes) t += b;
    return t;
  }
  bool is_active(std::size_t i) const { return active.empty() || active[i]; }
};

struct SimplexMinOptions {
  int max_iterations = 1000;
  double function_tolerance = 1e-15;
  double gradient_tolerance = 1e-13;
  double parameter_tolerance = 1e-14;
  /// Logit assigned to active coordinates that start at zero mass.
  double zero_logit = -30.0;
};

struct SimplexMinResult {
  std::vector<double> q;
  double value = kInf;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

// The line search emits glog warnings on flat directions; they are benign here.
inline void quiet_solver_logs() {
  static const bool once = [] {
    FLAGS_minloglevel = 2;
    return true;
  }();
  (void)once;
}

class SoftmaxMap {
 public:
  explicit SoftmaxMap(const SimplexLayout& layout) : layout_(layout) {
    std::size_t off = 0;
    for (auto b : layout_.block_sizes) {
      Block blk{off, {}};
      for (std::size_t i = off; i < off + b; ++i)
        if (layout_.is_active(i)) blk.active.push_back(i);
      if (blk.active.empty()) throw ConfigError("simplex layout: block without active coordinates");
      blocks_.push_back(std::move(blk));
      off += b;
    }
    for (const auto& blk : blocks_) n_params_ += blk.active.size();
  }

  int num_params() const { return static_cast<int>(n_params_); }
  std::size_t total() const { return layout_.total(); }

  void to_q(const double* z, std::vector<double>& q) const {
    q.assign(total(), 0.0);
    std::size_t p = 0;
    for (const auto& blk : blocks_) {
      double m = -kInf;
      for (std::size_t k = 0; k < blk.active.size(); ++k) m = std::max(m, z[p + k]);
      double s = 0.0;
      for (std::size_t k = 0; k < blk.active.size(); ++k) {
        const double e = std::exp(z[p + k] - m);
        q[blk.active[k]] = e;
        s += e;
      }
      for (auto i : blk.active) q[i] /= s;
      p += blk.active.size();
    }
  }

  std::vector<double> to_z(std::span<const double> q, double zero_logit) const {
    std::vector<double> z;
    for (const auto& blk : blocks_)
      for (auto i : blk.active) z.push_back(q[i] > 0.0 ? std::log(q[i]) : zero_logit);
    return z;
  }

  /// Chain rule through the softmax: dz_i = q_i (g_i - sum_j q_j g_j).
  void pull_back(const std::vector<double>& q, const std::vector<double>& g, double* gz) const {
    std::size_t p = 0;
    for (const auto& blk : blocks_) {
      double mean = 0.0;
      for (auto i : blk.active)
        if (q[i] > 0.0) mean += q[i] * g[i];
      for (std::size_t k = 0; k < blk.active.size(); ++k) {
        const auto i = blk.active[k];
        gz[p + k] = q[i] > 0.0 ? q[i] * (g[i] - mean) : 0.0;
      }
      p += blk.active.size();
    }
  }

 private:
  struct Block {
    std::size_t offset;
    std::vector<std::size_t> active;
  };
  SimplexLayout layout_;
  std::vector<Block> blocks_;
  std::size_t n_params_ = 0;
};

class LogitProblem final : public ceres::FirstOrderFunction {
 public:
  LogitProblem(const SoftmaxMap& map, const SimplexObjective& f) : map_(map), f_(f) {}

  bool Evaluate(const double* z, double* cost, double* gradient) const override {
    map_.to_q(z, q_);
    g_.assign(q_.size(), 0.0);
    const double v = f_(q_, gradient ? std::span<double>(g_) : std::span<double>());
    if (!std::isfinite(v)) return false;
    if (gradient) {
      for (double gi : g_)
        if (std::isnan(gi)) return false;
      map_.pull_back(q_, g_, gradient);
      for (int i = 0; i < map_.num_params(); ++i)
        if (!std::isfinite(gradient[i])) return false;
    }
    *cost = v;
    return true;
  }
  int NumParameters() const override { return map_.num_params(); }

 private:
  const SoftmaxMap& map_;
  const SimplexObjective& f_;
  mutable std::vector<double> q_, g_;
};

}  // namespace detail

/// Project a start vector onto the layout: zero inactive coordinates and
/// renormalize each block.
inline std::vector<double> conform(const SimplexLayout& layout, std::span<const double> q) {
  if (q.size() != layout.total()) throw ConfigError("simplex start has the wrong length");
  std::vector<double> out(q.begin(), q.end());
  std::size_t off = 0;
  for (auto b : layout.block_sizes) {
    double s = 0.0;
    for (std::size_t i = off; i < off + b; ++i) {
      if (!layout.is_active(i) || !(out[i] > 0.0)) out[i] = 0.0;
      s += out[i];
    }
    if (s <= 0.0) {
      std::size_t n_act = 0;
      for (std::size_t i = off; i < off + b; ++i) n_act += layout.is_active(i);
      for (std::size_t i = off; i < off + b; ++i)
        out[i] = layout.is_active(i) ? 1.0 / static_cast<double>(n_act) : 0.0;
    } else {
      for (std::size_t i = off; i < off + b; ++i) out[i] /= s;
    }
    off += b;
  }
  return out;
}

/// Minimize `f` from `start`.  The returned point is the better of the
/// conformed start and the solver's final iterate, so the result never
/// exceeds the objective at the start.
inline SimplexMinResult minimize_on_simplices(const SimplexObjective& f, const SimplexLayout& layout,
                                              std::span<const double> start,
                                              const SimplexMinOptions& opts = {}) {
  detail::quiet_solver_logs();
  const detail::SoftmaxMap map(layout);
  SimplexMinResult best;
  best.q = conform(layout, start);
  best.value = f(best.q, {});
  if (std::isnan(best.value)) best.value = kInf;

  std::vector<double> z = map.to_z(best.q, opts.zero_logit);
  std::vector<double> q0;
  map.to_q(z.data(), q0);
  if (!std::isfinite(f(q0, {}))) return best;

  ceres::GradientProblem problem(new detail::LogitProblem(map, f));
  ceres::GradientProblemSolver::Options o;
  o.logging_type = ceres::SILENT;
  o.minimizer_progress_to_stdout = false;
  o.line_search_direction_type = ceres::LBFGS;
  o.max_num_iterations = opts.max_iterations;
  o.function_tolerance = opts.function_tolerance;
  o.gradient_tolerance = opts.gradient_tolerance;
  o.parameter_tolerance = opts.parameter_tolerance;
  ceres::GradientProblemSolver::Summary summary;
  ceres::Solve(o, problem, z.data(), &summary);

  std::vector<double> q;
  map.to_q(z.data(), q);
  const double v = f(q, {});
  best.iterations = static_cast<int>(summary.iterations.size());
  best.converged = summary.termination_type == ceres::CONVERGENCE;
  if (std::isfinite(v) && v < best.value) {
    best.q = std::move(q);
    best.value = v;
  }
  return best;
}

}  // namespace wynerlab::opt
