// Acceptance driver: one line per criterion, nonzero exit if any fails.

#include <iostream>

#include "wynerlab/acceptance.hpp"

#ifndef WYNERLAB_DEFAULT_PLAN
#error "WYNERLAB_DEFAULT_PLAN must be defined"
#endif

int main(int argc, char** argv) {
  wynerlab::acceptance::AcceptanceOptions o;
  o.plan_path = WYNERLAB_DEFAULT_PLAN;
  for (int i = 1; i < argc; ++i) o.only.push_back(std::atoi(argv[i]));
  bool all = true;
  wynerlab::acceptance::run_acceptance(o, [&](const wynerlab::acceptance::CriterionResult& r) {
    all = all && r.passed;
    std::cout << wynerlab::acceptance::format_result(r) << std::endl;
  });
  std::cout << (all ? "all criteria passed" : "some criteria failed") << std::endl;
  return all ? 0 : 1;
}
