// Acceptance checks behind `collcal verify` and the acceptance test binary.
// Each check runs at its stated tolerance and fails when it exceeds its
// runtime budget.
#ifndef COLLCAL_TOOLS_ACCEPTANCE_H_
#define COLLCAL_TOOLS_ACCEPTANCE_H_

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace collcal::tools {

struct CheckInfo {
  std::string id;
  std::string title;
  double budget_seconds = 60.0;
};

struct CheckResult {
  CheckInfo info;
  bool passed = false;
  bool within_budget = true;
  std::string detail;  // measured values behind the verdict
  double seconds = 0.0;
};

struct CheckOptions {
  int threads = 1;
};

// All checks in execution order.
const std::vector<CheckInfo>& acceptance_checks();

// Throws InvalidArgument for an unknown id.
CheckResult run_check(std::string_view id, const CheckOptions& options);

// "PASS  id  title: detail (1.2s)".
std::string format_check_line(const CheckResult& result);
nlohmann::json check_to_json(const CheckResult& result);

}  // namespace collcal::tools

#endif  // COLLCAL_TOOLS_ACCEPTANCE_H_
