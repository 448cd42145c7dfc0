#pragma once
#include <string>
#include <vector>

namespace bohlkit {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::vector<int> only;  // empty: all ten
};

// Property suites 1..10; every check compares library output with an independent computation.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt = {});
CriterionResult run_criterion(int id);

}  // namespace bohlkit
