#include "collcal/tools/cli.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iterator>
#include <ostream>
#include <string>
#include <system_error>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "collcal/tools/acceptance.h"
#include "collcal/tools/output.h"

#ifndef COLLCAL_VERSION_STRING
#define COLLCAL_VERSION_STRING "unknown"
#endif

namespace collcal::tools {

namespace {

constexpr const char* kThreadsEnv = "COLLECTIVE_CALIB_THREADS";

std::string ReadText(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("scenario", fmt::format("cannot read '{}'", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
}

}  // namespace

std::string version_string() { return COLLCAL_VERSION_STRING; }

int resolve_threads(std::optional<int> requested) {
  if (requested) {
    if (*requested < 1) throw ConfigError("--threads", "must be at least 1");
    return *requested;
  }
  if (const char* env = std::getenv(kThreadsEnv); env != nullptr && *env != '\0') {
    const std::string_view text(env);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || value < 1) {
      throw ConfigError(kThreadsEnv, fmt::format("expected a positive integer, got '{}'", text));
    }
    return value;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

ScenarioConfig resolve_scenario(const std::string& name_or_path) {
  if (auto builtin = find_builtin(name_or_path)) return *builtin;
  const std::filesystem::path path(name_or_path);
  std::error_code ec;
  if (std::filesystem::is_regular_file(path, ec)) return ScenarioConfig::FromYaml(ReadText(path));
  throw ConfigError("scenario", fmt::format("unknown scenario '{}' (not a builtin or a file; "
                                            "see `collcal list`)",
                                            name_or_path));
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  ScenarioConfig scratch;
  scratch.Override("seeds", text);
  return scratch.seeds;
}

int cmd_run(const RunRequest& request, std::ostream& out, std::ostream& err) {
  ScenarioConfig cfg;
  int threads = 1;
  try {
    cfg = resolve_scenario(request.scenario);
    for (const auto& item : request.overrides) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(item, "--set expects key=value");
      }
      cfg.Override(item.substr(0, eq), item.substr(eq + 1));
    }
    if (request.seed && request.seeds) {
      throw ConfigError("--seed", "give either --seed or --seeds, not both");
    }
    if (request.seed) cfg.seeds = {*request.seed};
    if (request.seeds) cfg.seeds = parse_seed_list(*request.seeds);
    cfg.Validate();
    threads = resolve_threads(request.threads);
  } catch (const std::exception& e) {
    // ConfigError messages lead with the offending key.
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  const std::string name = cfg.name.empty() ? "run" : cfg.name;
  const std::filesystem::path dir =
      request.out_dir ? *request.out_dir : std::filesystem::path("runs") / name;
  try {
    const auto start = std::chrono::steady_clock::now();
    const ScenarioResult result = run_scenario(cfg, RunOptions{threads});
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::filesystem::create_directories(dir);
    WriteText(dir / "results.csv", render_csv(result.table, cfg.columns));
    RunRecord record{name, version_string(), &cfg, &result, seconds, threads};
    WriteText(dir / "results.json", render_json(record).dump(2) + "\n");
    out << fmt::format("{}: {} rows in {:.1f}s -> {}\n", name, result.table.rows.size(), seconds,
                       dir.string());
  } catch (const std::exception& e) {
    err << "run failed: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_verify(const VerifyRequest& request, std::ostream& out, std::ostream& err) {
  std::vector<std::string> ids;
  const auto& checks = acceptance_checks();
  if (request.only.empty()) {
    for (const auto& c : checks) ids.push_back(c.id);
  } else {
    for (const auto& id : request.only) {
      const bool known =
          std::any_of(checks.begin(), checks.end(), [&](const CheckInfo& c) { return c.id == id; });
      if (!known) {
        err << fmt::format("config error: --only: unknown check '{}'; known checks:", id);
        for (const auto& c : checks) err << " " << c.id;
        err << "\n";
        return kExitConfig;
      }
      ids.push_back(id);
    }
  }
  CheckOptions options;
  try {
    options.threads = resolve_threads(request.threads);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  int passed = 0;
  nlohmann::json report = nlohmann::json::array();
  for (const auto& id : ids) {
    const CheckResult result = run_check(id, options);
    if (result.passed) ++passed;
    if (request.json) {
      report.push_back(check_to_json(result));
    } else {
      out << format_check_line(result) << std::endl;
    }
  }
  const bool all = passed == static_cast<int>(ids.size());
  if (request.json) {
    out << nlohmann::json{{"version", version_string()},
                          {"passed", all},
                          {"passed_count", passed},
                          {"total", ids.size()},
                          {"checks", report}}
               .dump(2)
        << "\n";
  } else {
    out << fmt::format("{} of {} checks passed\n", passed, ids.size());
  }
  return all ? kExitOk : kExitFailure;
}

int cmd_list(const ListRequest& request, std::ostream& out) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& b : builtin_scenarios()) {
    if (!request.filter.empty() && b.name.find(request.filter) == std::string::npos &&
        b.description.find(request.filter) == std::string::npos &&
        b.reproduces.find(request.filter) == std::string::npos) {
      continue;
    }
    if (request.json) {
      items.push_back({{"name", b.name}, {"description", b.description},
                       {"reproduces", b.reproduces}});
    } else {
      out << fmt::format("{:<24} {}\n{:<24} reproduces: {}\n", b.name, b.description, "",
                         b.reproduces);
    }
  }
  if (request.json) out << items.dump(2) << "\n";
  return kExitOk;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Collective calibration experiments: run scenarios, verify, list"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  RunRequest run;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string seeds;
  int run_threads = 0;
  auto* run_cmd = app.add_subcommand("run", "Run a builtin scenario or a config file");
  run_cmd->add_option("scenario", run.scenario, "Builtin name, YAML config or results.json")
      ->required();
  run_cmd->add_option("--set", run.overrides, "Override key=value (repeatable)");
  auto* seed_opt = run_cmd->add_option("--seed", seed, "Run a single seed");
  auto* seeds_opt = run_cmd->add_option("--seeds", seeds, "Seed list, e.g. 0,3,7 or 0..9");
  auto* out_opt = run_cmd->add_option("--out", out_dir, "Output directory (default runs/<name>)");
  auto* run_threads_opt = run_cmd->add_option("--threads", run_threads, "Worker threads");

  VerifyRequest verify;
  int verify_threads = 0;
  auto* verify_cmd = app.add_subcommand("verify", "Run the acceptance checks");
  verify_cmd->add_option("--only", verify.only, "Check ids to run (comma-separated)")
      ->delimiter(',');
  verify_cmd->add_flag("--json", verify.json, "Machine-readable report");
  auto* verify_threads_opt =
      verify_cmd->add_option("--threads", verify_threads, "Worker threads");

  ListRequest list;
  auto* list_cmd = app.add_subcommand("list", "List builtin scenarios");
  list_cmd->add_option("filter", list.filter, "Substring filter");
  list_cmd->add_flag("--json", list.json, "Machine-readable list");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (run_cmd->parsed()) {
    if (seed_opt->count() > 0) run.seed = seed;
    if (seeds_opt->count() > 0) run.seeds = seeds;
    if (out_opt->count() > 0) run.out_dir = out_dir;
    if (run_threads_opt->count() > 0) run.threads = run_threads;
    return cmd_run(run, out, err);
  }
  if (verify_cmd->parsed()) {
    if (verify_threads_opt->count() > 0) verify.threads = verify_threads;
    return cmd_verify(verify, out, err);
  }
  return cmd_list(list, out);
}

}  // namespace collcal::tools
