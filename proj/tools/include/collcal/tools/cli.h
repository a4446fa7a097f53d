// The `collcal` command line: run, verify and list.
#ifndef COLLCAL_TOOLS_CLI_H_
#define COLLCAL_TOOLS_CLI_H_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "collcal/scenarios.h"

namespace collcal::tools {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

// Version echoed into results.json.
std::string version_string();

// Worker count: the explicit value, else COLLECTIVE_CALIB_THREADS, else the
// number of hardware threads. Throws ConfigError for a nonpositive or
// malformed value.
int resolve_threads(std::optional<int> requested);

// A builtin name, a YAML config file, or a results.json written by `run`.
// Throws ConfigError (key "scenario") when nothing matches.
ScenarioConfig resolve_scenario(const std::string& name_or_path);

// Parses "0,1,5" or "0..9" (or a mix) into seeds.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

struct RunRequest {
  std::string scenario;
  std::vector<std::string> overrides;  // key=value
  std::optional<std::uint64_t> seed;
  std::optional<std::string> seeds;
  std::optional<std::filesystem::path> out_dir;  // default runs/<name>
  std::optional<int> threads;
};

// Writes results.csv and results.json. Exit 0 on success, 2 on a config
// error (the message names the key), 1 on a runtime failure.
int cmd_run(const RunRequest& request, std::ostream& out, std::ostream& err);

struct VerifyRequest {
  std::vector<std::string> only;  // check ids; empty runs all
  bool json = false;
  std::optional<int> threads;
};

// Runs the acceptance checks; exit 0 iff all selected checks pass.
int cmd_verify(const VerifyRequest& request, std::ostream& out, std::ostream& err);

struct ListRequest {
  std::string filter;  // substring of the name or description
  bool json = false;
};

int cmd_list(const ListRequest& request, std::ostream& out);

// Full argument parsing and dispatch for the `collcal` binary.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace collcal::tools

#endif  // COLLCAL_TOOLS_CLI_H_
