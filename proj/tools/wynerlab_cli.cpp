#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "wynerlab/wynerlab.hpp"

#ifndef WYNERLAB_DEFAULT_PLAN
#define WYNERLAB_DEFAULT_PLAN "plans/paper_suite.plan"
#endif

namespace {

using namespace wynerlab;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitCells = 3;

struct Common {
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string out;
};

nlohmann::json to_json(const SweepResult& r, std::uint64_t seed) {
  nlohmann::json rows = nlohmann::json::array();
  auto num = [](double v) -> nlohmann::json {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
  };
  for (const auto& row : r.rows) {
    rows.push_back({{"kind", row.kind},
                    {"source", row.source},
                    {"s", num(row.s)},
                    {"rate", num(row.rate)},
                    {"rate_spec", row.rate_spec},
                    {"n", row.n >= 0 ? nlohmann::json(row.n) : nlohmann::json(nullptr)},
                    {"seed", row.seed >= 0 ? nlohmann::json(row.seed) : nlohmann::json(nullptr)},
                    {"value", num(row.value)},
                    {"std_error", num(row.std_error)},
                    {"method", row.method},
                    {"reference", num(row.reference)},
                    {"reference_kind", row.reference_kind},
                    {"status", row.status},
                    {"wall_seconds", row.wall_seconds}});
  }
  return {{"master_seed", seed}, {"rows", rows}, {"failures", r.failures()}};
}

std::string json_path_for(const std::string& csv) {
  const auto dot = csv.rfind('.');
  const auto slash = csv.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return csv + ".json";
  return csv.substr(0, dot) + ".json";
}

int emit(const SweepResult& r, const ExperimentPlan& plan, const Common& c, bool summary) {
  const auto csv = to_csv(r);
  if (c.out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream f(c.out, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + c.out + "'");
    f << csv;
    std::ofstream j(json_path_for(c.out));
    j << to_json(r, plan.seed).dump(2) << "\n";
  }
  if (summary) std::cerr << render_summary(r);
  return r.failures() ? kExitCells : kExitOk;
}

int run_single_section(const std::string& kind, const std::map<std::string, std::string>& values, const Common& c) {
  ExperimentPlan plan;
  plan.seed = c.seed.value_or(0);
  plan.threads = c.threads;
  plan.sections.push_back({kind, values, 0});
  return emit(run_plan(plan), plan, c, false);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wyner common information, Renyi synthesis and strong-converse exponents"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "master seed")->expected(1);
  app.add_option("--threads", common.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", common.out, "CSV output path (a .json mirror is written next to it)");

  std::string source = "dsbs:0.1";
  std::string rates = "1.2c", ns = "4,6,8", seeds = "0", s_list = "1", sim_kind = "renyi", truncation = "typical";
  std::string coupling = "wyner";
  std::size_t samples = 4000;
  int restarts = 0;

  auto* ci = app.add_subcommand("ci", "Wyner common information of a source");
  ci->add_option("source", source, "dsbs:<p>, copy, product, file:<path> or an inline matrix \"a b; c d\"");
  ci->add_option("--restarts", restarts, "multi-start count");

  auto* ex = app.add_subcommand("exponent", "strong-converse exponent F(R)");
  ex->add_option("source", source);
  ex->add_option("--rates", rates, "comma list; a trailing c scales by C_Wyner");
  ex->add_option("--restarts", restarts);

  auto* sim = app.add_subcommand("simulate", "synthesis code divergences");
  sim->add_option("source", source);
  sim->add_option("--kind", sim_kind)->check(CLI::IsMember({"renyi", "tv"}));
  sim->add_option("--rates", rates);
  sim->add_option("--n", ns, "block lengths, e.g. 4,6,8 or 4..8");
  sim->add_option("--s", s_list, "Renyi orders minus one");
  sim->add_option("--seeds", seeds, "code seeds, e.g. 0..9");
  sim->add_option("--samples", samples);
  sim->add_option("--truncation", truncation)->check(CLI::IsMember({"typical", "none"}));
  sim->add_option("--coupling", coupling)->check(CLI::IsMember({"wyner", "dsbs", "dsbs_ternary"}));

  std::string plan_path = WYNERLAB_DEFAULT_PLAN;
  std::vector<int> only;
  auto* ver = app.add_subcommand("verify", "run the acceptance criteria");
  ver->add_option("--plan", plan_path, "plan for the reproducibility criterion");
  ver->add_option("--only", only, "criterion ids")->delimiter(',');

  std::string sweep_path;
  auto* sw = app.add_subcommand("sweep", "run an experiment plan");
  sw->add_option("plan", sweep_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  if (*seed_opt) common.seed = seed_value;

  try {
    if (*ci) {
      std::map<std::string, std::string> v{{"sources", source}};
      if (restarts > 0) v["ci_restarts"] = std::to_string(restarts);
      return run_single_section("ci", v, common);
    }
    if (*ex) {
      std::map<std::string, std::string> v{{"sources", source}, {"rates", rates}};
      if (restarts > 0) v["exponent_restarts"] = std::to_string(restarts);
      return run_single_section("exponent", v, common);
    }
    if (*sim) {
      std::map<std::string, std::string> v{{"sources", source},   {"kind", sim_kind},
                                           {"rates", rates},      {"n", ns},
                                           {"seeds", seeds},      {"samples", std::to_string(samples)},
                                           {"truncation", truncation}, {"coupling", coupling}};
      if (sim_kind == "renyi") v["s"] = s_list;
      return run_single_section("simulate", v, common);
    }
    if (*ver) {
      acceptance::AcceptanceOptions o;
      o.plan_path = plan_path;
      o.threads = common.threads;
      o.only = only;
      bool all = true;
      acceptance::run_acceptance(o, [&](const acceptance::CriterionResult& r) {
        all = all && r.passed;
        std::cout << acceptance::format_result(r) << std::endl;
      });
      return all ? kExitOk : kExitCells;
    }
    if (*sw) {
      auto plan = load_plan(sweep_path);
      if (common.seed) plan.seed = *common.seed;
      if (app.count("--threads")) plan.threads = common.threads;
      return emit(run_plan(plan), plan, common, true);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCells;
  }
  return kExitOk;
}
