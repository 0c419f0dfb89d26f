#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sat/types.hpp"

namespace sat::dataset {

enum class Split { train, dev, test };
enum class Origin { crowd, translated, native };

// Edit lineage of a translated utterance: machine output, then two human
// post-editing passes. Declaration order is the lineage order.
enum class Revision { base = 0, v1 = 1, v2 = 2 };

std::string_view to_string(Split s);
std::string_view to_string(Origin o);
std::string_view to_string(Revision r);
Split split_from_string(std::string_view s);
Origin origin_from_string(std::string_view s);
Revision revision_from_string(std::string_view s);

struct EmotionExample {
  std::string text;
  Language language = Language::EN;
  EmotionLabel label = EmotionLabel::sadness;
  Split split = Split::train;
  Origin origin = Origin::crowd;
  std::optional<Revision> revision;

  friend bool operator==(const EmotionExample&, const EmotionExample&) = default;
};

struct RewritingExample {
  int base_id = 0;
  std::string base_text;
  std::string rewriting;
  Language language = Language::EN;
  std::optional<int> empathy_label;
  std::optional<Revision> revision;

  friend bool operator==(const RewritingExample&, const RewritingExample&) = default;
};

using ClassCounts = std::array<std::size_t, kNumEmotions>;

struct EmotionDataset {
  std::vector<EmotionExample> examples;

  ClassCounts class_counts() const;
  EmotionDataset filter(Split split) const;
  friend bool operator==(const EmotionDataset&, const EmotionDataset&) = default;
};

struct RewritingDataset {
  std::vector<RewritingExample> examples;

  // Counts of annotated examples per empathy label 0..2.
  std::array<std::size_t, 3> empathy_counts() const;
  std::size_t num_annotated() const;
  friend bool operator==(const RewritingDataset&, const RewritingDataset&) = default;
};

enum class Schema { emotion, rewriting };
using Dataset = std::variant<EmotionDataset, RewritingDataset>;

// Line-delimited JSON records. Malformed lines raise ParseError with the
// 1-based line number; semantic violations raise ValidationError.
Dataset load_ep_dataset(const std::filesystem::path& path, Schema schema);
EmotionDataset load_emotion_dataset(const std::filesystem::path& path);
RewritingDataset load_rewriting_dataset(const std::filesystem::path& path);
EmotionDataset parse_emotion_records(std::istream& in);
RewritingDataset parse_rewriting_records(std::istream& in);

void save_dataset(const Dataset& ds, const std::filesystem::path& path);
void write_records(const EmotionDataset& ds, std::ostream& out);
void write_records(const RewritingDataset& ds, std::ostream& out);

nlohmann::ordered_json to_record(const EmotionExample& ex);
nlohmann::ordered_json to_record(const RewritingExample& ex);
EmotionExample emotion_from_record(const nlohmann::json& j);
RewritingExample rewriting_from_record(const nlohmann::json& j);

}  // namespace sat::dataset
