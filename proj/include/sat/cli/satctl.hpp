#pragma once

#include <nlohmann/json.hpp>

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sat::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;

struct CommandResult {
  int exit_code = kExitOk;
  nlohmann::ordered_json summary;
};

// Every option any subcommand may declare. --seed, --config and --out are
// registered on all of them.
struct Options {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;

  std::string path;
  std::string schema = "emotion";
  std::string revision = "base";
  std::string prism_src;
  std::string reference;
  std::string model;
  std::string testset;
  std::string text;
  int base = -1;
  std::string teacher;
  std::string student;
  std::string inputs;
  int warmup = 2;
  int repeats = 10;
  int n_per_base = 3;
  std::string generator;
  std::string lang = "en";
  double temperature = 1.0;
  std::string pool;
  long id = 0;
  std::string decision;
  std::string reviewer;
  std::string note;
  bool approved = false;
  int k = 3;
};

// Streams line records (epoch logs, step logs) before the final summary.
using RecordSink = std::function<void(const nlohmann::ordered_json&)>;

struct CommandContext {
  const Options& opts;
  nlohmann::json config;  // {} without --config
  std::string config_sha256;  // empty without --config
  RecordSink emit;
};

enum class OptionSet : unsigned {
  none = 0,
  path = 1u << 0,
  schema = 1u << 1,
  revision = 1u << 2,
  prism_src = 1u << 3,
  reference = 1u << 4,
  model = 1u << 5,
  testset = 1u << 6,
  text = 1u << 7,
  base = 1u << 8,
  teacher = 1u << 9,
  student = 1u << 10,
  inputs = 1u << 11,
  bench = 1u << 12,
  n_per_base = 1u << 13,
  generator = 1u << 14,
  lang = 1u << 15,
  temperature = 1u << 16,
  pool = 1u << 17,
  id = 1u << 18,
  decision = 1u << 19,
  reviewer = 1u << 20,
  note = 1u << 21,
  approved = 1u << 22,
  k = 1u << 23,
};
constexpr OptionSet operator|(OptionSet a, OptionSet b) {
  return static_cast<OptionSet>(static_cast<unsigned>(a) | static_cast<unsigned>(b));
}
constexpr bool has(OptionSet set, OptionSet o) {
  return (static_cast<unsigned>(set) & static_cast<unsigned>(o)) != 0;
}

struct CommandSpec {
  std::string group;
  std::string name;
  std::string description;
  OptionSet options = OptionSet::none;
  bool requires_config = false;
  // Library operations this subcommand is the entry point for.
  std::vector<std::string> operations;
  std::function<nlohmann::ordered_json(CommandContext&)> run;
};

const std::vector<CommandSpec>& registry();

// Every library operation that must be reachable from the command line.
const std::vector<std::string>& module_operations();

// Parses argv (without the program name), runs one subcommand and writes
// line records plus a final summary record to `out`; usage and errors go to
// `err`. Exit codes: 0 ok, 1 operational error, 2 usage error.
CommandResult dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main_entry(int argc, char** argv);

}  // namespace sat::cli
