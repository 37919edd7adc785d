#pragma once

// Finite probability primitives: pmfs, joints, conditionals, Markov couplings
// and sequence types.  Natural logarithms throughout; 0 log 0 = 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "wynerlab/error.hpp"

namespace wynerlab {

inline constexpr double kNormTol = 1e-12;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

using Symbol = std::uint16_t;
using Sequence = std::vector<Symbol>;

// ---------------------------------------------------------------------------
// small numeric helpers

/// x log x with the 0 log 0 = 0 convention.
inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

/// log(x) that maps 0 to -inf without raising.
inline double safe_log(double x) { return x > 0.0 ? std::log(x) : -kInf; }

/// log sum exp over a range; -inf for an empty or all -inf range.
inline double log_sum_exp(std::span<const double> v) {
  double m = -kInf;
  for (double x : v) m = std::max(m, x);
  if (m == -kInf) return -kInf;
  if (m == kInf) return kInf;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

/// Streaming log-sum-exp accumulator.
class LogSumExp {
 public:
  void add(double x) {
    if (x == -kInf) return;
    if (x <= max_) {
      sum_ += std::exp(x - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - x) + 1.0;
      max_ = x;
    }
  }
  double value() const { return max_ == -kInf ? -kInf : max_ + std::log(sum_); }

 private:
  double max_ = -kInf;
  double sum_ = 0.0;
};

namespace detail {

inline void check_mass(std::span<const double> mass, const char* what) {
  require(!mass.empty(), std::string(what) + ": empty mass vector");
  double total = 0.0;
  for (double m : mass) {
    require(std::isfinite(m) && m >= 0.0,
            std::string(what) + ": entries must be finite and nonnegative");
    total += m;
  }
  require(std::abs(total - 1.0) <= kNormTol,
          std::string(what) + ": mass sums to " + std::to_string(total) + ", not 1");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// FinitePmf

class FinitePmf {
 public:
  FinitePmf() = default;
  explicit FinitePmf(std::vector<double> mass) : mass_(std::move(mass)) {
    detail::check_mass(mass_, "FinitePmf");
  }

  static FinitePmf uniform(std::size_t k) {
    detail::require(k > 0, "FinitePmf::uniform: empty alphabet");
    return FinitePmf(std::vector<double>(k, 1.0 / static_cast<double>(k)));
  }
  static FinitePmf point(std::size_t k, std::size_t at) {
    detail::require(at < k, "FinitePmf::point: symbol out of range");
    std::vector<double> m(k, 0.0);
    m[at] = 1.0;
    return FinitePmf(std::move(m));
  }
  static FinitePmf bernoulli(double p_one) {
    detail::require(p_one >= 0.0 && p_one <= 1.0, "FinitePmf::bernoulli: p outside [0,1]");
    return FinitePmf({1.0 - p_one, p_one});
  }

  std::size_t size() const { return mass_.size(); }
  double operator[](std::size_t i) const { return mass_[i]; }
  std::span<const double> mass() const { return mass_; }

  std::vector<std::size_t> support() const {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < mass_.size(); ++i)
      if (mass_[i] > 0.0) s.push_back(i);
    return s;
  }
  /// Smallest positive mass.
  double min_positive() const {
    double m = kInf;
    for (double v : mass_)
      if (v > 0.0) m = std::min(m, v);
    return m;
  }

  friend bool operator==(const FinitePmf&, const FinitePmf&) = default;

 private:
  std::vector<double> mass_;
};

// ---------------------------------------------------------------------------
// JointPmf: dense 2- or 3-axis array, row-major.

class JointPmf {
 public:
  JointPmf() = default;
  JointPmf(std::vector<std::size_t> dims, std::vector<double> mass)
      : dims_(std::move(dims)), mass_(std::move(mass)) {
    detail::require(dims_.size() == 2 || dims_.size() == 3, "JointPmf: need 2 or 3 axes");
    std::size_t total = 1;
    for (std::size_t d : dims_) {
      detail::require(d > 0, "JointPmf: zero-length axis");
      total *= d;
    }
    detail::require(total == mass_.size(), "JointPmf: mass size does not match dims");
    detail::check_mass(mass_, "JointPmf");
  }

  /// Joint from a rectangular matrix (rows = first axis).
  static JointPmf from_matrix(const std::vector<std::vector<double>>& rows) {
    detail::require(!rows.empty() && !rows.front().empty(), "JointPmf: empty matrix");
    std::vector<double> m;
    for (const auto& r : rows) {
      detail::require(r.size() == rows.front().size(), "JointPmf: ragged matrix");
      m.insert(m.end(), r.begin(), r.end());
    }
    return JointPmf({rows.size(), rows.front().size()}, std::move(m));
  }

  std::size_t rank() const { return dims_.size(); }
  std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
  const std::vector<std::size_t>& dims() const { return dims_; }
  std::span<const double> mass() const { return mass_; }
  std::size_t size() const { return mass_.size(); }

  double at(std::size_t i, std::size_t j) const { return mass_[i * dims_[1] + j]; }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return mass_[(i * dims_[1] + j) * dims_[2] + k];
  }

  /// Flat index -> per-axis indices.
  std::vector<std::size_t> unravel(std::size_t flat) const {
    std::vector<std::size_t> idx(dims_.size());
    for (std::size_t a = dims_.size(); a-- > 0;) {
      idx[a] = flat % dims_[a];
      flat /= dims_[a];
    }
    return idx;
  }

  std::vector<std::vector<double>> to_matrix() const {
    detail::require(rank() == 2, "JointPmf::to_matrix: rank-2 joints only");
    std::vector<std::vector<double>> rows(dims_[0], std::vector<double>(dims_[1]));
    for (std::size_t i = 0; i < dims_[0]; ++i)
      for (std::size_t j = 0; j < dims_[1]; ++j) rows[i][j] = at(i, j);
    return rows;
  }

  friend bool operator==(const JointPmf&, const JointPmf&) = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<double> mass_;
};

// ---------------------------------------------------------------------------
// ConditionalPmf: one valid pmf row per conditioning symbol.

class ConditionalPmf {
 public:
  ConditionalPmf() = default;
  explicit ConditionalPmf(const std::vector<std::vector<double>>& rows) {
    detail::require(!rows.empty(), "ConditionalPmf: no rows");
    cols_ = rows.front().size();
    for (const auto& r : rows) {
      detail::require(r.size() == cols_, "ConditionalPmf: ragged rows");
      detail::check_mass(r, "ConditionalPmf row");
      mass_.insert(mass_.end(), r.begin(), r.end());
    }
    rows_ = rows.size();
  }

  /// The same pmf for every conditioning symbol.
  static ConditionalPmf constant(std::size_t rows, const FinitePmf& p) {
    return ConditionalPmf(std::vector<std::vector<double>>(
        rows, std::vector<double>(p.mass().begin(), p.mass().end())));
  }
  /// Binary symmetric channel with crossover `p`.
  static ConditionalPmf bsc(double p) { return ConditionalPmf({{1.0 - p, p}, {p, 1.0 - p}}); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t given, std::size_t out) const { return mass_[given * cols_ + out]; }
  std::span<const double> row(std::size_t given) const {
    return std::span<const double>(mass_).subspan(given * cols_, cols_);
  }
  FinitePmf row_pmf(std::size_t given) const {
    auto r = row(given);
    return FinitePmf(std::vector<double>(r.begin(), r.end()));
  }
  /// Smallest positive entry over all rows.
  double min_positive() const {
    double m = kInf;
    for (double v : mass_)
      if (v > 0.0) m = std::min(m, v);
    return m;
  }
  std::vector<std::vector<double>> to_matrix() const {
    std::vector<std::vector<double>> out;
    for (std::size_t r = 0; r < rows_; ++r) out.emplace_back(row(r).begin(), row(r).end());
    return out;
  }

  friend bool operator==(const ConditionalPmf&, const ConditionalPmf&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> mass_;
};

// ---------------------------------------------------------------------------
// MarkovCoupling: Q_W Q_{X|W} Q_{Y|W}, so X - W - Y holds by construction.

struct MarkovCoupling {
  FinitePmf q_w;
  ConditionalPmf x_given_w;
  ConditionalPmf y_given_w;

  MarkovCoupling() = default;
  MarkovCoupling(FinitePmf w, ConditionalPmf xw, ConditionalPmf yw)
      : q_w(std::move(w)), x_given_w(std::move(xw)), y_given_w(std::move(yw)) {
    detail::require(x_given_w.rows() == q_w.size() && y_given_w.rows() == q_w.size(),
                    "MarkovCoupling: conditional rows must match |W|");
  }

  std::size_t w_size() const { return q_w.size(); }
  std::size_t x_size() const { return x_given_w.cols(); }
  std::size_t y_size() const { return y_given_w.cols(); }
};

// ---------------------------------------------------------------------------
// SequenceType

struct SequenceType {
  std::size_t n = 0;
  std::vector<std::size_t> counts;

  static SequenceType of(std::span<const Symbol> seq, std::size_t alphabet) {
    SequenceType t{seq.size(), std::vector<std::size_t>(alphabet, 0)};
    for (Symbol s : seq) {
      detail::require(s < alphabet, "SequenceType: symbol outside alphabet");
      ++t.counts[s];
    }
    return t;
  }

  FinitePmf empirical() const {
    detail::require(n > 0, "SequenceType: empty sequence has no empirical pmf");
    std::vector<double> m(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
      m[i] = static_cast<double>(counts[i]) / static_cast<double>(n);
    return FinitePmf(std::move(m));
  }
};

// ---------------------------------------------------------------------------
// operations

/// Marginal over a single axis.
inline FinitePmf marginal(const JointPmf& joint, std::size_t axis) {
  if (axis >= joint.rank()) throw ConfigError("marginal: axis out of range");
  std::vector<double> out(joint.dim(axis), 0.0);
  for (std::size_t f = 0; f < joint.size(); ++f) out[joint.unravel(f)[axis]] += joint.mass()[f];
  return FinitePmf(std::move(out));
}

/// Marginal keeping `axes` (in the given order).  A single axis yields a
/// rank-2 result only through the FinitePmf overload, so at least two axes
/// are required here.
inline JointPmf marginal(const JointPmf& joint, std::span<const std::size_t> axes) {
  if (axes.size() < 2) throw ConfigError("marginal: use the single-axis overload for one axis");
  std::vector<std::size_t> dims;
  for (std::size_t a : axes) {
    if (a >= joint.rank()) throw ConfigError("marginal: axis out of range");
    if (std::count(axes.begin(), axes.end(), a) != 1) throw ConfigError("marginal: repeated axis");
    dims.push_back(joint.dim(a));
  }
  std::size_t total = 1;
  for (std::size_t d : dims) total *= d;
  std::vector<double> out(total, 0.0);
  for (std::size_t f = 0; f < joint.size(); ++f) {
    auto idx = joint.unravel(f);
    std::size_t g = 0;
    for (std::size_t k = 0; k < axes.size(); ++k) g = g * dims[k] + idx[axes[k]];
    out[g] += joint.mass()[f];
  }
  return JointPmf(std::move(dims), std::move(out));
}

inline JointPmf marginal(const JointPmf& joint, std::initializer_list<std::size_t> axes) {
  return marginal(joint, std::span<const std::size_t>(axes.begin(), axes.size()));
}

/// Product joint p (x) q.
inline JointPmf product(const FinitePmf& p, const FinitePmf& q) {
  std::vector<double> m;
  m.reserve(p.size() * q.size());
  for (double a : p.mass())
    for (double b : q.mass()) m.push_back(a * b);
  return JointPmf({p.size(), q.size()}, std::move(m));
}

/// Conditional of axis 1 given axis 0 of a rank-2 joint.  Rows whose
/// conditioning symbol has zero mass are set to uniform.
inline ConditionalPmf conditional(const JointPmf& joint) {
  detail::require(joint.rank() == 2, "conditional: rank-2 joints only");
  std::vector<std::vector<double>> rows(joint.dim(0), std::vector<double>(joint.dim(1)));
  for (std::size_t i = 0; i < joint.dim(0); ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < joint.dim(1); ++j) z += joint.at(i, j);
    for (std::size_t j = 0; j < joint.dim(1); ++j)
      rows[i][j] = z > 0.0 ? joint.at(i, j) / z : 1.0 / static_cast<double>(joint.dim(1));
    // exact renormalization keeps rows inside the 1e-12 tolerance
    double s = std::accumulate(rows[i].begin(), rows[i].end(), 0.0);
    for (double& v : rows[i]) v /= s;
  }
  return ConditionalPmf(rows);
}

/// Q(w,x,y) = Q_W(w) Q_{X|W}(x|w) Q_{Y|W}(y|w) over W x X x Y.
inline JointPmf induced_joint(const MarkovCoupling& c) {
  const std::size_t nw = c.w_size(), nx = c.x_size(), ny = c.y_size();
  std::vector<double> m(nw * nx * ny);
  for (std::size_t w = 0; w < nw; ++w)
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t y = 0; y < ny; ++y)
        m[(w * nx + x) * ny + y] = c.q_w[w] * c.x_given_w(w, x) * c.y_given_w(w, y);
  return JointPmf({nw, nx, ny}, std::move(m));
}

/// The X x Y marginal of a coupling.
inline JointPmf xy_marginal(const MarkovCoupling& c) {
  const std::size_t nx = c.x_size(), ny = c.y_size();
  std::vector<double> m(nx * ny, 0.0);
  for (std::size_t w = 0; w < c.w_size(); ++w)
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t y = 0; y < ny; ++y)
        m[x * ny + y] += c.q_w[w] * c.x_given_w(w, x) * c.y_given_w(w, y);
  return JointPmf({nx, ny}, std::move(m));
}

inline double entropy(std::span<const double> mass) {
  double h = 0.0;
  for (double m : mass) h -= xlogx(m);
  return h;
}
inline double entropy(const FinitePmf& p) { return entropy(p.mass()); }
inline double entropy(const JointPmf& j) { return entropy(j.mass()); }

/// I(A;B) for a rank-2 joint over A x B, computed as a relative entropy
/// against the product of marginals.
inline double mutual_information(const JointPmf& joint) {
  detail::require(joint.rank() == 2, "mutual_information: rank-2 joint expected");
  const FinitePmf a = marginal(joint, 0), b = marginal(joint, 1);
  double mi = 0.0;
  for (std::size_t i = 0; i < joint.dim(0); ++i)
    for (std::size_t j = 0; j < joint.dim(1); ++j) {
      const double q = joint.at(i, j);
      if (q > 0.0) mi += q * std::log(q / (a[i] * b[j]));
    }
  return std::max(mi, 0.0);
}

/// I(axis ; remaining axes) for a joint of any supported rank.
inline double mutual_information(const JointPmf& joint, std::size_t axis) {
  if (axis >= joint.rank()) throw ConfigError("mutual_information: axis out of range");
  const FinitePmf a = marginal(joint, axis);
  std::size_t rest = joint.size() / joint.dim(axis);
  std::vector<double> b(rest, 0.0);
  auto rest_index = [&](const std::vector<std::size_t>& idx) {
    std::size_t g = 0;
    for (std::size_t k = 0; k < joint.rank(); ++k)
      if (k != axis) g = g * joint.dim(k) + idx[k];
    return g;
  };
  for (std::size_t f = 0; f < joint.size(); ++f) b[rest_index(joint.unravel(f))] += joint.mass()[f];
  double mi = 0.0;
  for (std::size_t f = 0; f < joint.size(); ++f) {
    const double q = joint.mass()[f];
    if (q <= 0.0) continue;
    auto idx = joint.unravel(f);
    mi += q * std::log(q / (a[idx[axis]] * b[rest_index(idx)]));
  }
  return std::max(mi, 0.0);
}

/// sum_i log p(seq_i); -inf as soon as a zero-mass symbol appears.
inline double log_product_mass(const FinitePmf& p, std::span<const Symbol> seq) {
  double acc = 0.0;
  for (Symbol s : seq) {
    if (s >= p.size()) throw ConfigError("log_product_mass: symbol outside alphabet");
    if (p[s] <= 0.0) return -kInf;
    acc += std::log(p[s]);
  }
  return acc;
}

/// sum_i log q(seq_i | given_i).
inline double log_product_mass(const ConditionalPmf& q, std::span<const Symbol> given,
                               std::span<const Symbol> seq) {
  detail::require(given.size() == seq.size(), "log_product_mass: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (given[i] >= q.rows() || seq[i] >= q.cols())
      throw ConfigError("log_product_mass: symbol outside alphabet");
    const double v = q(given[i], seq[i]);
    if (v <= 0.0) return -kInf;
    acc += std::log(v);
  }
  return acc;
}

// ---------------------------------------------------------------------------
// plain-text numeric format: one row per line, whitespace separated; '#'
// starts a comment.

inline std::vector<std::vector<double>> parse_matrix(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        throw ConfigError("parse_matrix: not a number: '" + tok + "'");
      }
      if (used != tok.size()) throw ConfigError("parse_matrix: not a number: '" + tok + "'");
      row.push_back(v);
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("parse_matrix: no numeric rows");
  return rows;
}

inline std::vector<std::vector<double>> parse_matrix(const std::string& text) {
  std::istringstream in(text);
  return parse_matrix(in);
}

inline std::vector<std::vector<double>> read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return parse_matrix(in);
}

inline std::string format_matrix(const std::vector<std::vector<double>>& rows) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < r.size(); ++j) out << (j ? " " : "") << r[j];
    out << '\n';
  }
  return out.str();
}

}  // namespace wynerlab
