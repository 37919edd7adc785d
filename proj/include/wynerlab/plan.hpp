#pragma once

// Declarative experiment plans.
//
//   seed = 7
//   threads = 1
//
//   [ci]
//   sources = product, copy, dsbs:0.1
//
//   [exponent]
//   sources = dsbs:0.1
//   rates = 0.5c, 0.9c, 1.2c
//
//   [simulate]
//   kind = renyi
//   sources = dsbs:0.1
//   s = 1
//   rates = 1.2c
//   n = 4, 6, 8
//   seeds = 0..2
//
// A trailing "c" scales a rate by the source's computed Wyner CI.  Every
// section may repeat; each repetition is an independent cell list.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wynerlab/ci.hpp"
#include "wynerlab/error.hpp"
#include "wynerlab/exponents.hpp"
#include "wynerlab/fixtures.hpp"
#include "wynerlab/parallel.hpp"
#include "wynerlab/synthesis.hpp"

namespace wynerlab {

struct RateSpec {
  double value = 0.0;
  bool relative = false;  ///< value is a multiple of C_Wyner
  std::string text;
};

struct PlanSection {
  std::string kind;  ///< ci, exponent, simulate
  std::map<std::string, std::string> values;
  int line = 0;
};

struct ExperimentPlan {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::vector<PlanSection> sections;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

inline double parse_double(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("bad number '" + s + "' for " + what);
  }
  if (used != s.size()) throw ConfigError("bad number '" + s + "' for " + what);
  return v;
}

inline std::uint64_t parse_uint(const std::string& s, const std::string& what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError("bad integer '" + s + "' for " + what);
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw ConfigError("bad integer '" + s + "' for " + what);
  }
}

/// "0..3, 7" -> 0 1 2 3 7
inline std::vector<std::uint64_t> parse_uint_list(const std::string& s, const std::string& what) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(s)) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_uint(item, what));
      continue;
    }
    const auto lo = parse_uint(trim(item.substr(0, dots)), what);
    const auto hi = parse_uint(trim(item.substr(dots + 2)), what);
    if (hi < lo || hi - lo > 100000) throw ConfigError("bad range '" + item + "' for " + what);
    for (auto v = lo; v <= hi; ++v) out.push_back(v);
  }
  return out;
}

inline std::vector<double> parse_double_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(parse_double(item, what));
  return out;
}

inline std::vector<RateSpec> parse_rates(const std::string& s) {
  std::vector<RateSpec> out;
  for (const auto& item : split_list(s)) {
    RateSpec r;
    r.text = item;
    if (item.back() == 'c' || item.back() == 'C') {
      r.relative = true;
      r.value = parse_double(item.substr(0, item.size() - 1), "rates");
    } else {
      r.value = parse_double(item, "rates");
    }
    if (!(r.value >= 0.0) || !std::isfinite(r.value)) throw ConfigError("rates must be finite and >= 0");
    out.push_back(r);
  }
  return out;
}

}  // namespace detail

inline ExperimentPlan parse_plan(std::istream& in) {
  ExperimentPlan plan;
  std::string line;
  int lineno = 0;
  std::optional<std::size_t> cur;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
      const auto kind = detail::trim(line.substr(1, line.size() - 2));
      if (kind != "ci" && kind != "exponent" && kind != "simulate")
        throw ConfigError("line " + std::to_string(lineno) + ": unknown section [" + kind + "]");
      plan.sections.push_back({kind, {}, lineno});
      cur = plan.sections.size() - 1;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (!cur) {
      if (key == "seed")
        plan.seed = detail::parse_uint(value, "seed");
      else if (key == "threads")
        plan.threads = static_cast<unsigned>(std::max<std::uint64_t>(1, detail::parse_uint(value, "threads")));
      else
        throw ConfigError("line " + std::to_string(lineno) + ": unknown global key '" + key + "'");
    } else {
      plan.sections[*cur].values[key] = value;
    }
  }
  return plan;
}

inline ExperimentPlan parse_plan_text(const std::string& text) {
  std::istringstream in(text);
  return parse_plan(in);
}

inline ExperimentPlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open plan '" + path + "'");
  return parse_plan(in);
}

struct SweepRow {
  std::string kind;
  std::string source;
  double s = std::nan("");
  double rate = std::nan("");
  std::string rate_spec;
  long n = -1;
  long long seed = -1;
  double value = std::nan("");
  double std_error = std::nan("");
  std::string method;
  double reference = std::nan("");
  std::string reference_kind;
  std::string status = "ok";
  double wall_seconds = 0.0;  ///< JSON only; never in the CSV
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.status != "ok"; }));
  }
};

namespace detail {

struct Cell {
  SweepRow row;
  const PlanSection* section = nullptr;
  RateSpec rate;
  std::uint64_t seed_index = 0;
};

inline std::string get(const PlanSection& sec, const std::string& key, const std::string& fallback) {
  auto it = sec.values.find(key);
  return it == sec.values.end() ? fallback : it->second;
}

inline void check_keys(const PlanSection& sec, std::initializer_list<const char*> allowed) {
  for (const auto& [k, v] : sec.values) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw ConfigError("section [" + sec.kind + "] at line " + std::to_string(sec.line) + ": unknown key '" + k + "'");
  }
}

inline CiOptions ci_options_of(const PlanSection* sec, std::uint64_t seed) {
  CiOptions o;
  o.seed = seed;
  o.threads = 1;
  if (sec) o.restarts = static_cast<int>(parse_uint(get(*sec, "ci_restarts", "64"), "ci_restarts"));
  return o;
}

inline ExponentOptions exponent_options_of(const PlanSection& sec, std::uint64_t seed) {
  ExponentOptions o;
  o.seed = seed;
  o.threads = 1;
  o.restarts = static_cast<int>(parse_uint(get(sec, "exponent_restarts", get(sec, "restarts", "32")), "restarts"));
  o.alpha_points = static_cast<int>(parse_uint(get(sec, "alpha_points", "33"), "alpha_points"));
  o.theta_points = static_cast<int>(parse_uint(get(sec, "theta_points", "65"), "theta_points"));
  o.ci = ci_options_of(&sec, seed);
  return o;
}

inline std::string error_status(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return std::string("config_error: ") + e.what();
  if (dynamic_cast<const ResourceError*>(&e)) return std::string("resource_error: ") + e.what();
  if (dynamic_cast<const DomainError*>(&e)) return std::string("domain_error: ") + e.what();
  return std::string("error: ") + e.what();
}

/// Plan-wide memo of C_Wyner and exponent tables, shared across cells.
class PlanCache {
 public:
  explicit PlanCache(std::uint64_t seed) : seed_(seed) {}

  CiSolution wyner(const std::string& source, const CiOptions& o) {
    const std::string key = source + "|" + std::to_string(o.restarts);
    std::shared_ptr<Slot<CiSolution>> slot;
    {
      std::lock_guard<std::mutex> g(mu_);
      auto& s = ci_[key];
      if (!s) s = std::make_shared<Slot<CiSolution>>();
      slot = s;
    }
    std::call_once(slot->once, [&] { slot->value = wyner_ci(fixtures::parse_source(source), o); });
    return slot->value;
  }

  double f_value(const std::string& source, double rate, const ExponentOptions& o) {
    const std::string key = source + "|" + std::to_string(o.restarts) + "|" + std::to_string(o.alpha_points) + "x" +
                            std::to_string(o.theta_points);
    std::shared_ptr<Slot<OmegaTable>> slot;
    {
      std::lock_guard<std::mutex> g(mu_);
      auto& s = tables_[key];
      if (!s) s = std::make_shared<Slot<OmegaTable>>();
      slot = s;
    }
    const JointPmf pi = fixtures::parse_source(source);
    ExponentOptions oo = o;
    if (!oo.wyner_argmin) oo.wyner_argmin = wyner(source, o.ci).argmin;
    std::call_once(slot->once, [&] { slot->value = omega_table(pi, oo); });
    return f_rate(pi, rate, slot->value, oo).value;
  }

  double resolve(const RateSpec& r, const std::string& source, const CiOptions& o) {
    return r.relative ? r.value * wyner(source, o).value : r.value;
  }

  std::uint64_t seed() const { return seed_; }

 private:
  template <typename T>
  struct Slot {
    std::once_flag once;
    T value{};
  };
  std::uint64_t seed_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Slot<CiSolution>>> ci_;
  std::map<std::string, std::shared_ptr<Slot<OmegaTable>>> tables_;
};

inline std::vector<Cell> expand_cells(const ExperimentPlan& plan) {
  std::vector<Cell> cells;
  for (const auto& sec : plan.sections) {
    const auto sources = split_list(get(sec, "sources", ""));
    for (const auto& src : sources) fixtures::parse_source(src);  // fail early on bad fixtures
    if (sec.kind == "ci") {
      check_keys(sec, {"sources", "ci_restarts"});
      for (const auto& src : sources) {
        Cell c;
        c.section = &sec;
        c.row.kind = "ci";
        c.row.source = src;
        cells.push_back(c);
      }
    } else if (sec.kind == "exponent") {
      check_keys(sec, {"sources", "rates", "restarts", "exponent_restarts", "alpha_points", "theta_points", "ci_restarts"});
      const auto rates = parse_rates(get(sec, "rates", ""));
      for (const auto& src : sources)
        for (const auto& r : rates) {
          Cell c;
          c.section = &sec;
          c.rate = r;
          c.row.kind = "exponent";
          c.row.source = src;
          c.row.rate_spec = r.text;
          cells.push_back(c);
        }
    } else {
      check_keys(sec, {"kind", "sources", "s", "rates", "n", "seeds", "samples", "truncation", "eps", "eps_prime",
                       "exponent_restarts", "alpha_points", "theta_points", "ci_restarts", "coupling", "force_mc"});
      const auto kind = get(sec, "kind", "renyi");
      if (kind != "renyi" && kind != "tv") throw ConfigError("simulate: kind must be renyi or tv");
      const auto trunc = get(sec, "truncation", "typical");
      if (trunc != "typical" && trunc != "none") throw ConfigError("simulate: truncation must be typical or none");
      const auto rates = parse_rates(get(sec, "rates", ""));
      const auto ns = parse_uint_list(get(sec, "n", ""), "n");
      const auto seeds = parse_uint_list(get(sec, "seeds", "0"), "seeds");
      std::vector<double> s_list{std::nan("")};
      if (kind == "renyi") {
        s_list = parse_double_list(get(sec, "s", "1"), "s");
        for (double s : s_list)
          if (!(s >= -1.0 && s <= 1.0)) throw ConfigError("simulate: s must lie in [-1, 1]");
      }
      for (const auto& src : sources)
        for (double s : s_list)
          for (const auto& r : rates)
            for (auto n : ns)
              for (auto sd : seeds) {
                Cell c;
                c.section = &sec;
                c.rate = r;
                c.seed_index = sd;
                c.row.kind = kind;
                c.row.source = src;
                c.row.s = s;
                c.row.rate_spec = r.text;
                c.row.n = static_cast<long>(n);
                c.row.seed = static_cast<long long>(sd);
                cells.push_back(c);
              }
    }
  }
  return cells;
}

/// The coupling a simulate cell builds its code from: the solver's argmin
/// unless the section names a fixture coupling.
inline MarkovCoupling simulate_coupling(const Cell& c, PlanCache& cache) {
  const auto name = get(*c.section, "coupling", "wyner");
  if (name == "wyner") {
    auto sol = cache.wyner(c.row.source, ci_options_of(c.section, cache.seed()));
    // drop unused W symbols so typical-set counting stays within budget
    std::vector<std::size_t> keep;
    for (std::size_t w = 0; w < sol.argmin.w_size(); ++w)
      if (sol.argmin.q_w[w] > 0.0) keep.push_back(w);
    std::vector<double> qw;
    std::vector<std::vector<double>> a, b;
    for (auto w : keep) {
      qw.push_back(sol.argmin.q_w[w]);
      a.emplace_back(sol.argmin.x_given_w.row(w).begin(), sol.argmin.x_given_w.row(w).end());
      b.emplace_back(sol.argmin.y_given_w.row(w).begin(), sol.argmin.y_given_w.row(w).end());
    }
    return MarkovCoupling(FinitePmf(qw), ConditionalPmf(a), ConditionalPmf(b));
  }
  if (name == "dsbs") return fixtures::dsbs_wyner_coupling(0.1);
  if (name == "dsbs_ternary") return fixtures::dsbs_ternary_coupling();
  throw ConfigError("simulate: unknown coupling '" + name + "'");
}

inline void run_cell(Cell& c, PlanCache& cache) {
  auto& row = c.row;
  const auto master = cache.seed();
  if (row.kind == "ci") {
    const auto o = ci_options_of(c.section, master);
    const auto sol = cache.wyner(row.source, o);
    row.value = sol.value;
    row.std_error = 0.0;
    row.method = "augmented_lagrangian";
    const JointPmf pi = fixtures::parse_source(row.source);
    if (pi.dim(0) == 2 && pi.dim(1) == 2) {
      row.reference = wyner_ci_oracle(pi);
      row.reference_kind = "grid_oracle";
    }
    if (!sol.converged) row.status = "not_converged";
    return;
  }
  const auto ci_o = ci_options_of(c.section, master);
  row.rate = cache.resolve(c.rate, row.source, ci_o);
  if (row.kind == "exponent") {
    const auto eo = exponent_options_of(*c.section, master);
    row.value = cache.f_value(row.source, row.rate, eo);
    row.std_error = 0.0;
    row.method = "omega_table";
    row.reference = cache.wyner(row.source, ci_o).value;
    row.reference_kind = "wyner_ci";
    return;
  }
  const auto& sec = *c.section;
  const auto base = simulate_coupling(c, cache);
  const auto trunc = get(sec, "truncation", "typical") == "none" ? Truncation::none : Truncation::typical;
  const double eps = parse_double(get(sec, "eps", "0.6"), "eps");
  const double eps_prime = parse_double(get(sec, "eps_prime", "0.3"), "eps_prime");
  const auto samples = static_cast<std::size_t>(parse_uint(get(sec, "samples", "4000"), "samples"));
  const bool force_mc = get(sec, "force_mc", "false") == "true";
  Rng seeder = make_stream(master, static_cast<std::uint64_t>(row.n), c.seed_index);
  const std::uint64_t code_seed = seeder();
  const std::uint64_t est_seed = seeder();
  const auto code = build_code(base, static_cast<std::size_t>(row.n), row.rate, eps, eps_prime, code_seed, trunc);
  DivergenceEstimate e;
  if (row.kind == "tv") {
    e = estimate_tv(code, samples, est_seed, force_mc);
    const auto wci = cache.wyner(row.source, ci_o).value;
    if (row.rate < wci) {
      const double f = cache.f_value(row.source, row.rate, exponent_options_of(sec, master));
      row.reference = 1.0 - 4.0 * std::exp(-static_cast<double>(row.n) * f);
      row.reference_kind = "tv_lower_bound";
    }
  } else {
    e = estimate_renyi(code, row.s, samples, est_seed, force_mc);
    if (e.structural_zeros > 0 && e.method == Method::exact && row.s > 0.0) row.reference_kind = "structurally_infinite";
  }
  row.value = e.point;
  row.std_error = e.std_error;
  row.method = to_string(e.method);
}

}  // namespace detail

/// Runs every cell; a failing cell records its error in the status column
/// and the run carries on.  Rows come back in plan order whatever the
/// thread count.
inline SweepResult run_plan(const ExperimentPlan& plan) {
  auto cells = detail::expand_cells(plan);
  detail::PlanCache cache(plan.seed);
  const std::function<SweepRow(std::size_t)> task = [&](std::size_t i) {
    auto c = cells[i];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      detail::run_cell(c, cache);
    } catch (const std::exception& e) {
      c.row.status = detail::error_status(e);
    }
    c.row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return c.row;
  };
  SweepResult res;
  res.rows = parallel_map<SweepRow>(cells.size(), plan.threads, task);
  return res;
}

namespace detail {

inline std::string fmt_num(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline const char* kCsvHeader = "kind,source,s,rate,rate_spec,n,seed,value,std_error,method,reference,reference_kind,status";

inline std::string to_csv(const SweepResult& r) {
  using detail::csv_field;
  using detail::fmt_num;
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& row : r.rows) {
    out += csv_field(row.kind) + "," + csv_field(row.source) + "," + fmt_num(row.s) + "," + fmt_num(row.rate) + "," +
           csv_field(row.rate_spec) + "," + (row.n >= 0 ? std::to_string(row.n) : "") + "," +
           (row.seed >= 0 ? std::to_string(row.seed) : "") + "," + fmt_num(row.value) + "," + fmt_num(row.std_error) +
           "," + csv_field(row.method) + "," + fmt_num(row.reference) + "," + csv_field(row.reference_kind) + "," +
           csv_field(row.status) + "\n";
  }
  return out;
}

/// Least-squares slope of y against x.
inline double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  if (x.size() < 2) return std::nan("");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0 ? sxy / sxx : std::nan("");
}

struct SeriesSummary {
  std::string kind, source, rate_spec;
  double s = std::nan(""), rate = std::nan("");
  std::vector<long> n;
  std::vector<double> mean, reference;
  double slope = std::nan("");  ///< d log(mean) / dn
};

/// Groups simulate rows by (kind, source, s, R), averages over seeds per n
/// and fits the log-linear decay rate.
inline std::vector<SeriesSummary> summarize(const SweepResult& r) {
  std::vector<SeriesSummary> out;
  std::map<std::tuple<std::string, std::string, std::string, std::string>, std::size_t> index;
  std::vector<std::map<long, std::pair<double, std::size_t>>> acc;
  std::vector<std::map<long, double>> refs;
  for (const auto& row : r.rows) {
    if (row.status != "ok" || (row.kind != "renyi" && row.kind != "tv")) continue;
    const auto key = std::make_tuple(row.kind, row.source, detail::fmt_num(row.s), row.rate_spec);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      SeriesSummary s;
      s.kind = row.kind;
      s.source = row.source;
      s.rate_spec = row.rate_spec;
      s.s = row.s;
      s.rate = row.rate;
      out.push_back(s);
      acc.emplace_back();
      refs.emplace_back();
    }
    auto& cell = acc[it->second][row.n];
    cell.first += row.value;
    cell.second += 1;
    refs[it->second][row.n] = row.reference;
  }
  for (std::size_t g = 0; g < out.size(); ++g) {
    std::vector<double> xs, ys;
    for (const auto& [n, sum] : acc[g]) {
      const double m = sum.first / static_cast<double>(sum.second);
      out[g].n.push_back(n);
      out[g].mean.push_back(m);
      out[g].reference.push_back(refs[g][n]);
      if (m > 0 && std::isfinite(m)) {
        xs.push_back(static_cast<double>(n));
        ys.push_back(std::log(m));
      }
    }
    out[g].slope = fitted_slope(xs, ys);
  }
  return out;
}

inline std::string render_summary(const SweepResult& r) {
  std::ostringstream os;
  for (const auto& row : r.rows)
    if (row.kind == "ci" || row.kind == "exponent")
      os << row.kind << " " << row.source << (row.rate_spec.empty() ? "" : " R=" + row.rate_spec) << ": "
         << detail::fmt_num(row.value) << (row.status == "ok" ? "" : "  [" + row.status + "]") << "\n";
  for (const auto& s : summarize(r)) {
    os << s.kind << " " << s.source;
    if (!std::isnan(s.s)) os << " s=" << s.s;
    os << " R=" << s.rate_spec << " (" << detail::fmt_num(s.rate) << ")\n";
    os << "  n      mean                    reference\n";
    for (std::size_t i = 0; i < s.n.size(); ++i) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "  %-6ld %-23.15g %s\n", s.n[i], s.mean[i], detail::fmt_num(s.reference[i]).c_str());
      os << buf;
    }
    os << "  log-linear slope " << detail::fmt_num(s.slope);
    if (s.kind == "renyi" && s.slope < 0) os << "  (decaying)";
    os << "\n";
  }
  const auto f = r.failures();
  if (f) os << f << " cell(s) failed\n";
  return os.str();
}

}  // namespace wynerlab
