#pragma once

// Seeded random streams.  Every stream is identified by (master, cell,
// stream) so results never depend on which thread ran which task.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "wynerlab/prob.hpp"

namespace wynerlab {

using Rng = std::mt19937_64;

inline Rng make_stream(std::uint64_t master, std::uint64_t cell = 0, std::uint64_t stream = 0) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(master), hi(master), lo(cell), hi(cell), lo(stream), hi(stream), 0x9e3779b9u};
  return Rng(seq);
}

/// Uniform on [0,1) from the top 53 bits.
inline double uniform01(Rng& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

/// Inverse-CDF draw from a mass vector (which need not be normalized exactly).
inline std::size_t sample_index(std::span<const double> p, Rng& g) {
  double total = 0.0;
  for (double v : p) total += v;
  double u = uniform01(g) * total;
  std::size_t last = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    last = i;
    if (u < p[i]) return i;
    u -= p[i];
  }
  return last;
}

/// Dirichlet(1,...,1) on `k` coordinates.
inline std::vector<double> dirichlet_ones(std::size_t k, Rng& g) {
  std::vector<double> v(k);
  double s = 0.0;
  for (auto& x : v) {
    x = -std::log1p(-uniform01(g));
    s += x;
  }
  for (auto& x : v) x /= s;
  return v;
}

inline FinitePmf random_pmf(std::size_t k, Rng& g) { return FinitePmf(dirichlet_ones(k, g)); }

inline JointPmf random_joint(std::size_t a, std::size_t b, Rng& g) {
  return JointPmf({a, b}, dirichlet_ones(a * b, g));
}

inline ConditionalPmf random_conditional(std::size_t rows, std::size_t cols, Rng& g) {
  std::vector<std::vector<double>> r;
  for (std::size_t i = 0; i < rows; ++i) r.push_back(dirichlet_ones(cols, g));
  return ConditionalPmf(r);
}

}  // namespace wynerlab
