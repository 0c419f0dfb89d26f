#include "sat/dataset/records.hpp"

#include <fstream>
#include <sstream>

#include "sat/error.hpp"

namespace sat::dataset {
using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train:
      return "train";
    case Split::dev:
      return "dev";
    case Split::test:
      return "test";
  }
  return "train";
}

std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::crowd:
      return "crowd";
    case Origin::translated:
      return "translated";
    case Origin::native:
      return "native";
  }
  return "crowd";
}

std::string_view to_string(Revision r) {
  switch (r) {
    case Revision::base:
      return "base";
    case Revision::v1:
      return "v1";
    case Revision::v2:
      return "v2";
  }
  return "base";
}

Split split_from_string(std::string_view s) {
  for (Split v : {Split::train, Split::dev, Split::test}) {
    if (s == to_string(v)) return v;
  }
  throw ValidationError("unknown split '" + std::string(s) + "'");
}

Origin origin_from_string(std::string_view s) {
  for (Origin v : {Origin::crowd, Origin::translated, Origin::native}) {
    if (s == to_string(v)) return v;
  }
  throw ValidationError("unknown origin '" + std::string(s) + "'");
}

Revision revision_from_string(std::string_view s) {
  for (Revision v : {Revision::base, Revision::v1, Revision::v2}) {
    if (s == to_string(v)) return v;
  }
  throw ValidationError("unknown revision '" + std::string(s) + "'");
}

ClassCounts EmotionDataset::class_counts() const {
  ClassCounts c{};
  for (const auto& ex : examples) ++c[static_cast<std::size_t>(index_of(ex.label))];
  return c;
}

EmotionDataset EmotionDataset::filter(Split split) const {
  EmotionDataset out;
  for (const auto& ex : examples) {
    if (ex.split == split) out.examples.push_back(ex);
  }
  return out;
}

std::array<std::size_t, 3> RewritingDataset::empathy_counts() const {
  std::array<std::size_t, 3> c{};
  for (const auto& ex : examples) {
    if (ex.empathy_label) ++c[static_cast<std::size_t>(*ex.empathy_label)];
  }
  return c;
}

std::size_t RewritingDataset::num_annotated() const {
  const auto c = empathy_counts();
  return c[0] + c[1] + c[2];
}

ordered_json to_record(const EmotionExample& ex) {
  ordered_json j;
  j["text"] = ex.text;
  j["language"] = to_string(ex.language);
  j["label"] = to_string(ex.label);
  j["split"] = to_string(ex.split);
  j["origin"] = to_string(ex.origin);
  if (ex.revision) j["revision"] = to_string(*ex.revision);
  return j;
}

ordered_json to_record(const RewritingExample& ex) {
  ordered_json j;
  j["base_id"] = ex.base_id;
  j["base_text"] = ex.base_text;
  j["rewriting"] = ex.rewriting;
  j["language"] = to_string(ex.language);
  if (ex.empathy_label) j["empathy_label"] = *ex.empathy_label;
  if (ex.revision) j["revision"] = to_string(*ex.revision);
  return j;
}

namespace {

std::string required_string(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw ValidationError(std::string("missing or non-string field '") + key + "'");
  }
  return j.at(key).get<std::string>();
}

}  // namespace

EmotionExample emotion_from_record(const json& j) {
  EmotionExample ex;
  ex.text = required_string(j, "text");
  if (ex.text.empty()) throw ValidationError("empty text");
  ex.language = language_from_string(required_string(j, "language"));
  if (!j.contains("label") || j.at("label").is_null()) {
    throw ValidationError("unlabeled record");
  }
  ex.label = emotion_from_string(required_string(j, "label"));
  ex.split = split_from_string(j.value("split", "train"));
  ex.origin = origin_from_string(j.value("origin", "crowd"));
  if (j.contains("revision")) ex.revision = revision_from_string(required_string(j, "revision"));
  return ex;
}

RewritingExample rewriting_from_record(const json& j) {
  RewritingExample ex;
  if (!j.contains("base_id") || !j.at("base_id").is_number_integer()) {
    throw ValidationError("missing integer field 'base_id'");
  }
  ex.base_id = j.at("base_id").get<int>();
  if (ex.base_id < 0 || ex.base_id >= kNumSemanticClasses) {
    throw ValidationError("base_id out of range: " + std::to_string(ex.base_id));
  }
  ex.base_text = required_string(j, "base_text");
  ex.rewriting = required_string(j, "rewriting");
  if (ex.rewriting.empty()) throw ValidationError("empty rewriting");
  ex.language = language_from_string(required_string(j, "language"));
  if (j.contains("empathy_label") && !j.at("empathy_label").is_null()) {
    if (!j.at("empathy_label").is_number_integer()) {
      throw ValidationError("empathy_label must be an integer");
    }
    const int e = j.at("empathy_label").get<int>();
    if (e < 0 || e > 2) throw ValidationError("empathy_label out of range: " + std::to_string(e));
    ex.empathy_label = e;
  }
  if (j.contains("revision")) ex.revision = revision_from_string(required_string(j, "revision"));
  return ex;
}

namespace {

template <typename Example, typename Parse>
std::vector<Example> parse_lines(std::istream& in, Parse parse) {
  std::vector<Example> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(lineno, std::string("malformed record: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(lineno, "record is not an object");
    try {
      out.push_back(parse(j));
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (out.empty()) throw ValidationError("no records");
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open " + path.string());
  return in;
}

}  // namespace

EmotionDataset parse_emotion_records(std::istream& in) {
  return {parse_lines<EmotionExample>(in, emotion_from_record)};
}

RewritingDataset parse_rewriting_records(std::istream& in) {
  return {parse_lines<RewritingExample>(in, rewriting_from_record)};
}

EmotionDataset load_emotion_dataset(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_emotion_records(in);
}

RewritingDataset load_rewriting_dataset(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_rewriting_records(in);
}

Dataset load_ep_dataset(const std::filesystem::path& path, Schema schema) {
  if (schema == Schema::emotion) return load_emotion_dataset(path);
  return load_rewriting_dataset(path);
}

void write_records(const EmotionDataset& ds, std::ostream& out) {
  for (const auto& ex : ds.examples) out << to_record(ex).dump() << '\n';
}

void write_records(const RewritingDataset& ds, std::ostream& out) {
  for (const auto& ex : ds.examples) out << to_record(ex).dump() << '\n';
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  std::visit([&](const auto& d) { write_records(d, out); }, ds);
}

}  // namespace sat::dataset
