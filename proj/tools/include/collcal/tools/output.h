// Result writers: a flat CSV table and a structured JSON record.
#ifndef COLLCAL_TOOLS_OUTPUT_H_
#define COLLCAL_TOOLS_OUTPUT_H_

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "collcal/scenarios.h"

namespace collcal::tools {

// Up to 6 significant digits, C locale, no trailing zeros. Non-finite values
// print as nan, inf or -inf; negative zero prints as 0.
std::string format_csv_number(double value);

// Quotes a field when it contains a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);

std::string format_csv_field(const FieldValue& value);

// Header plus one line per row, LF line endings. `columns` selects and orders
// fields; empty selects every field. Throws InvalidArgument for an unknown
// column.
std::string render_csv(const ResultTable& table, const std::vector<std::string>& columns);

// Converts a YAML document to JSON. Plain scalars become integers, reals,
// booleans or null where they parse as such; quoted scalars stay strings.
nlohmann::json yaml_to_json(std::string_view yaml);

nlohmann::json field_to_json(const FieldValue& value);

struct RunRecord {
  std::string scenario;
  std::string version;
  const ScenarioConfig* config = nullptr;
  const ScenarioResult* result = nullptr;
  double duration_seconds = 0.0;
  int threads = 1;
};

// {"scenario", "version", "config", "fields", "rows", "summary", "metadata",
// "duration_seconds", "threads"}; rows hold every field at full precision.
// The "config" member re-runs the scenario when the file is passed back to
// `run`.
nlohmann::json render_json(const RunRecord& record);

}  // namespace collcal::tools

#endif  // COLLCAL_TOOLS_OUTPUT_H_
