#include "sat/io.hpp"

#include <fstream>
#include <sstream>

#include "sat/error.hpp"

namespace sat::io {

nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw NotFoundError("cannot open " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& p, const nlohmann::json& j) {
  write_text(p, j.dump() + "\n");
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw NotFoundError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& p, const std::string& s) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << s;
  if (!out) throw Error("write failed: " + p.string());
}

}  // namespace sat::io
