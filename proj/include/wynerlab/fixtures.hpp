#pragma once

// Named sources and couplings used by the tests, the plan runner and the CLI.

#include <cmath>
#include <string>

#include "wynerlab/error.hpp"
#include "wynerlab/prob.hpp"

namespace wynerlab::fixtures {

/// Doubly symmetric binary source: uniform X, Y = X through BSC(p).
inline JointPmf dsbs(double p) {
  if (!(p >= 0.0 && p <= 0.5)) throw ConfigError("dsbs: crossover must lie in [0, 0.5]");
  return JointPmf::from_matrix({{(1.0 - p) / 2.0, p / 2.0}, {p / 2.0, (1.0 - p) / 2.0}});
}

inline JointPmf copy() { return JointPmf::from_matrix({{0.5, 0.0}, {0.0, 0.5}}); }

inline JointPmf product() { return JointPmf::from_matrix({{0.24, 0.36}, {0.16, 0.24}}); }

/// Closed-form Wyner CI of DSBS(p): 1 + h(p) - 2 h(a) in bits, a = (1 - sqrt(1-2p))/2.
inline double dsbs_wyner_ci(double p) {
  auto h = [](double q) { return -xlogx(q) - xlogx(1.0 - q); };
  const double a = (1.0 - std::sqrt(1.0 - 2.0 * p)) / 2.0;
  return std::log(2.0) + h(p) - 2.0 * h(a);
}

/// The optimal coupling of DSBS(p): W uniform, X and Y each W through BSC(a).
inline MarkovCoupling dsbs_wyner_coupling(double p) {
  const double a = (1.0 - std::sqrt(1.0 - 2.0 * p)) / 2.0;
  return MarkovCoupling(FinitePmf::uniform(2), ConditionalPmf::bsc(a), ConditionalPmf::bsc(a));
}

/// A ternary coupling of DSBS(0.1): W in {0,1} pins X = Y = W, W = 2 makes
/// X and Y independent fair bits.
inline MarkovCoupling dsbs_ternary_coupling() {
  const ConditionalPmf c({{1.0, 0.0}, {0.0, 1.0}, {0.5, 0.5}});
  return MarkovCoupling(FinitePmf({0.4, 0.4, 0.2}), c, c);
}

/// W uniform, X and Y each W through BSC(q).
inline MarkovCoupling bsc_coupling(double q) {
  return MarkovCoupling(FinitePmf::uniform(2), ConditionalPmf::bsc(q), ConditionalPmf::bsc(q));
}

/// Resolves "dsbs:<p>", "copy", "product", "file:<path>" or an inline
/// matrix such as "0.45 0.05; 0.05 0.45".
inline JointPmf parse_source(const std::string& spec) {
  if (spec == "copy") return copy();
  if (spec == "product") return product();
  if (spec == "dsbs") return dsbs(0.1);
  if (spec.rfind("dsbs:", 0) == 0) {
    std::size_t used = 0;
    double p = 0.0;
    try {
      p = std::stod(spec.substr(5), &used);
    } catch (const std::exception&) {
      throw ConfigError("bad dsbs crossover in '" + spec + "'");
    }
    if (used != spec.size() - 5) throw ConfigError("bad dsbs crossover in '" + spec + "'");
    return dsbs(p);
  }
  if (spec.rfind("file:", 0) == 0) return JointPmf::from_matrix(read_matrix_file(spec.substr(5)));
  std::string text = spec;
  for (auto& c : text)
    if (c == ';') c = '\n';
  if (text.find_first_of("0123456789") == std::string::npos) throw ConfigError("unknown source '" + spec + "'");
  return JointPmf::from_matrix(parse_matrix(text));
}

}  // namespace wynerlab::fixtures
