#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace sat::io {

nlohmann::json read_json(const std::filesystem::path& p);
void write_json(const std::filesystem::path& p, const nlohmann::json& j);
std::string read_text(const std::filesystem::path& p);
void write_text(const std::filesystem::path& p, const std::string& s);

}  // namespace sat::io
