#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sat/classify/text_classifier.hpp"
#include "sat/cli/satctl.hpp"
#include "sat/error.hpp"

namespace sat::cli {

using nlohmann::json;
using nlohmann::ordered_json;

// Missing or contradictory arguments; exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

void register_data_commands(std::vector<CommandSpec>& out);
void register_generation_commands(std::vector<CommandSpec>& out);
void register_store_commands(std::vector<CommandSpec>& out);

const std::string& need(const std::string& value, const char* flag);

// Paths in a config file resolve against the config file's directory.
std::filesystem::path config_path(const CommandContext& ctx, const char* key);
std::filesystem::path optional_config_path(const CommandContext& ctx, const char* key);
std::filesystem::path resolve(const CommandContext& ctx, const std::string& p);

// --seed, when given, replaces every seed in the config; `offset` keeps the
// seeds of independent components distinct.
std::uint64_t seed_for(const CommandContext& ctx, const json& node, std::uint64_t fallback,
                       std::uint64_t offset);

classify::TrainStage train_stage(const CommandContext& ctx, const json& node, std::uint64_t offset);

ordered_json metrics_json(const classify::ClassifierMetrics& m);
ordered_json epoch_json(const classify::EpochLog& e);

std::filesystem::path out_dir(const CommandContext& ctx);

}  // namespace sat::cli
