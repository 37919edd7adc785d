#include "testing.hpp"

#include <cstdlib>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "wynerlab/plan.hpp"

using namespace wynerlab;
using Catch::Approx;

#ifndef WYNERLAB_CLI_PATH
#error "WYNERLAB_CLI_PATH must be defined"
#endif

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(WYNERLAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string temp_file(const std::string& name, const std::string& body) {
  const std::string path = std::string("/tmp/wynerlab_test_") + name;
  std::ofstream(path) << body;
  return path;
}

}  // namespace

TEST_CASE("plan parsing", "[plan]") {
  const auto p = parse_plan_text("seed = 11\nthreads = 2\n# note\n[ci]\nsources = copy, product\n\n[simulate]\nn = 4..6\n");
  CHECK(p.seed == 11);
  CHECK(p.threads == 2);
  REQUIRE(p.sections.size() == 2);
  CHECK(p.sections[0].kind == "ci");
  CHECK(p.sections[0].values.at("sources") == "copy, product");
  CHECK(p.sections[1].line == 7);

  CHECK(parse_plan_text("").sections.empty());
  CHECK_THROWS_AS(parse_plan_text("[bogus]\n"), ConfigError);
  CHECK_THROWS_AS(parse_plan_text("[ci\n"), ConfigError);
  CHECK_THROWS_AS(parse_plan_text("color = red\n"), ConfigError);
  CHECK_THROWS_AS(parse_plan_text("[ci]\nsources\n"), ConfigError);
  CHECK_THROWS_AS(parse_plan_text("seed = -3\n"), ConfigError);
  CHECK_THROWS_AS(load_plan("/nonexistent/plan"), ConfigError);
}

TEST_CASE("list and rate syntax", "[plan]") {
  const auto r = detail::parse_uint_list("0..3, 7", "seeds");
  CHECK(r == std::vector<std::uint64_t>{0, 1, 2, 3, 7});
  const auto rates = detail::parse_rates("0.5c, 0.25");
  REQUIRE(rates.size() == 2);
  CHECK(rates[0].relative);
  CHECK(rates[0].value == 0.5);
  CHECK_FALSE(rates[1].relative);
  CHECK_THROWS_AS(detail::parse_rates("abc"), ConfigError);
}

TEST_CASE("empty plan runs to an empty result", "[plan]") {
  const auto r = run_plan(parse_plan_text("seed = 1\n"));
  CHECK(r.rows.empty());
  CHECK(r.failures() == 0);
  CHECK(to_csv(r) == std::string(kCsvHeader) + "\n");
}

TEST_CASE("ci cell on the product source", "[plan]") {
  const auto r = run_plan(parse_plan_text("[ci]\nsources = product\nci_restarts = 4\n"));
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].status == "ok");
  CHECK(r.rows[0].value == Approx(0.0).margin(1e-6));
  CHECK(r.rows[0].kind == "ci");
}

TEST_CASE("unknown keys are config errors", "[plan]") {
  CHECK_THROWS_AS(run_plan(parse_plan_text("[ci]\nsources = copy\nspeed = 3\n")), ConfigError);
  CHECK_THROWS_AS(run_plan(parse_plan_text("[ci]\nsources = nonsense\n")), ConfigError);
}

TEST_CASE("sweep is deterministic and fail-soft", "[plan]") {
  // no typical W type exists at n = 4, so those cells fail without stopping the sweep
  const std::string text =
      "seed = 5\n[simulate]\nkind = tv\nsources = dsbs\ncoupling = dsbs_ternary\ntruncation = typical\neps = 0.6\n"
      "eps_prime = 0.3\nrates = 0.3\nn = 4, 8\nseeds = 0..1\nsamples = 500\nforce_mc = true\n"
      "exponent_restarts = 2\nalpha_points = 5\ntheta_points = 9\nci_restarts = 4\n";
  const auto plan = parse_plan_text(text);
  const auto a = run_plan(plan);
  REQUIRE(a.rows.size() == 4);
  CHECK(a.failures() == 2);
  for (const auto& row : a.rows) {
    if (row.n == 4) CHECK(row.status.rfind("resource_error", 0) == 0);
    if (row.n == 8) CHECK(row.status == "ok");
  }
  auto threaded = plan;
  threaded.threads = 3;
  CHECK(to_csv(run_plan(threaded)) == to_csv(a));
}

TEST_CASE("fitted slope and summary", "[plan]") {
  CHECK(fitted_slope({1, 2, 3}, {5, 3, 1}) == Approx(-2.0));
  CHECK(std::isnan(fitted_slope({1}, {1})));

  SweepResult r;
  for (long n : {4, 6, 8})
    for (int seed = 0; seed < 2; ++seed) {
      SweepRow row;
      row.kind = "renyi";
      row.source = "dsbs";
      row.s = 1;
      row.rate = 0.7;
      row.rate_spec = "1.2c";
      row.n = n;
      row.seed = seed;
      row.value = std::exp(-0.3 * static_cast<double>(n)) * (seed ? 1.1 : 0.9);
      r.rows.push_back(row);
    }
  const auto s = summarize(r);
  REQUIRE(s.size() == 1);
  CHECK(s[0].n == std::vector<long>{4, 6, 8});
  CHECK(s[0].slope == Approx(-0.3));
  CHECK(render_summary(r).find("decaying") != std::string::npos);
}

TEST_CASE("cli exit codes", "[plan][cli]") {
  CHECK(run_cli("--bogus-flag ci copy") == 2);
  CHECK(run_cli("") == 2);
  CHECK(run_cli("sweep /nonexistent/plan") == 2);
  CHECK(run_cli("sweep " + temp_file("bad.plan", "[nope]\n")) == 2);
  CHECK(run_cli("ci product --restarts 2") == 0);
  CHECK(run_cli("ci \"0.5 0.5; 0.2\"") == 2);
  const auto failing = temp_file("fail.plan",
                                 "[simulate]\nkind = tv\nsources = dsbs\ncoupling = dsbs\nrates = 0.5\nn = 4\n"
                                 "samples = 100\nexponent_restarts = 2\nalpha_points = 5\ntheta_points = 9\n"
                                 "ci_restarts = 4\n");
  CHECK(run_cli("sweep " + failing) == 3);
  const std::string out = "/tmp/wynerlab_test_ci.csv";
  CHECK(run_cli("--out " + out + " ci copy --restarts 2") == 0);
  std::ifstream csv(out), json("/tmp/wynerlab_test_ci.json");
  CHECK(csv.good());
  CHECK(json.good());
}
