#include "collcal/tools/output.h"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <system_error>
#include <variant>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace collcal::tools {

std::string format_csv_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";
  return fmt::format("{:.6g}", value);
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_csv_field(const FieldValue& value) {
  struct Visitor {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const { return format_csv_number(v); }
    std::string operator()(const std::string& v) const { return csv_escape(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
  };
  return std::visit(Visitor{}, value);
}

std::string render_csv(const ResultTable& table, const std::vector<std::string>& columns) {
  std::vector<std::size_t> picked;
  if (columns.empty()) {
    for (std::size_t i = 0; i < table.fields.size(); ++i) picked.push_back(i);
  } else {
    for (const auto& name : columns) {
      const auto index = table.FieldIndex(name);
      if (!index) throw InvalidArgument(fmt::format("unknown column '{}'", name));
      picked.push_back(*index);
    }
  }
  std::string out;
  for (std::size_t c = 0; c < picked.size(); ++c) {
    if (c > 0) out += ',';
    out += csv_escape(table.fields[picked[c]]);
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < picked.size(); ++c) {
      if (c > 0) out += ',';
      out += format_csv_field(row[picked[c]]);
    }
    out += '\n';
  }
  return out;
}

namespace {

nlohmann::json ScalarToJson(const YAML::Node& node) {
  const std::string& text = node.Scalar();
  if (node.Tag() == "!") return text;  // quoted
  if (text.empty() || text == "~" || text == "null") return nullptr;
  if (text == "true") return true;
  if (text == "false") return false;
  const char* begin = text.data();
  const char* end = begin + text.size();
  std::int64_t i = 0;
  if (auto [p, ec] = std::from_chars(begin, end, i); ec == std::errc{} && p == end) return i;
  double d = 0.0;
  if (auto [p, ec] = std::from_chars(begin, end, d);
      ec == std::errc{} && p == end && std::isfinite(d)) {
    return d;
  }
  return text;
}

nlohmann::json NodeToJson(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Map: {
      nlohmann::json out = nlohmann::json::object();
      for (const auto& kv : node) out[kv.first.as<std::string>()] = NodeToJson(kv.second);
      return out;
    }
    case YAML::NodeType::Sequence: {
      nlohmann::json out = nlohmann::json::array();
      for (const auto& item : node) out.push_back(NodeToJson(item));
      return out;
    }
    case YAML::NodeType::Scalar:
      return ScalarToJson(node);
    default:
      return nullptr;
  }
}

}  // namespace

nlohmann::json yaml_to_json(std::string_view yaml) {
  return NodeToJson(YAML::Load(std::string(yaml)));
}

nlohmann::json field_to_json(const FieldValue& value) {
  struct Visitor {
    nlohmann::json operator()(std::monostate) const { return nullptr; }
    nlohmann::json operator()(std::int64_t v) const { return v; }
    nlohmann::json operator()(double v) const {
      if (!std::isfinite(v)) return format_csv_number(v);
      return v;
    }
    nlohmann::json operator()(const std::string& v) const { return v; }
    nlohmann::json operator()(bool v) const { return v; }
  };
  return std::visit(Visitor{}, value);
}

nlohmann::json render_json(const RunRecord& record) {
  if (record.config == nullptr || record.result == nullptr) {
    throw InvalidArgument("render_json needs a config and a result");
  }
  const ResultTable& table = record.result->table;
  nlohmann::json out;
  out["scenario"] = record.scenario;
  out["version"] = record.version;
  out["config"] = yaml_to_json(record.config->ToYaml());
  out["fields"] = table.fields;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t f = 0; f < table.fields.size(); ++f) {
      obj[table.fields[f]] = field_to_json(row[f]);
    }
    rows.push_back(std::move(obj));
  }
  out["rows"] = std::move(rows);
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& s : record.result->summary) {
    nlohmann::json obj;
    for (const auto& [axis, value] : s.coords) obj["coords"][axis] = value;
    obj["seeds"] = s.seeds;
    for (const auto& [field, stat] : s.stats) {
      obj["mean"][field] = stat.first;
      obj["std"][field] = stat.second;
    }
    summary.push_back(std::move(obj));
  }
  out["summary"] = std::move(summary);
  out["metadata"] = record.result->metadata;
  out["duration_seconds"] = record.duration_seconds;
  out["threads"] = record.threads;
  return out;
}

}  // namespace collcal::tools
