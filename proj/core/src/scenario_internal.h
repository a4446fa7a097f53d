// Shared between the scenario config parser and the runner.
#ifndef COLLCAL_SRC_SCENARIO_INTERNAL_H_
#define COLLCAL_SRC_SCENARIO_INTERNAL_H_

#include <string>
#include <vector>

#include "collcal/scenarios.h"

namespace collcal::internal {

// Result fields emitted by a scenario kind, in output order. Sweep axes and
// `seed` come first and are not listed here.
std::vector<std::string> kind_fields(ScenarioKind kind);

}  // namespace collcal::internal

#endif  // COLLCAL_SRC_SCENARIO_INTERNAL_H_
