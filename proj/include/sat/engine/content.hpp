#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sat/types.hpp"

namespace sat::engine {

struct Bilingual {
  std::string en;
  std::string zh;
  const std::string& in(Language lang) const { return lang == Language::EN ? en : zh; }
};

struct Protocol {
  int id = 0;
  int group = 0;
  Bilingual title;
  Bilingual body;
};

struct BranchQuestion {
  std::string id;
  Bilingual text;
  std::vector<int> exclude_on_yes;
};

struct Branch {
  std::vector<int> protocols;
  std::vector<BranchQuestion> questions;
};

struct BaseUtteranceEntry {
  int class_id = 0;
  EmotionLabel emotion = EmotionLabel::sadness;
  Bilingual text;
};

enum class Feedback { better, same_or_worse };

// Everything the engine says or recommends, loaded from reviewable files.
struct ContentBundle {
  std::vector<Protocol> protocols;                   // ids 1..20
  std::map<int, std::vector<int>> groups;            // group -> protocol ids
  int fallback_group = 1;
  std::map<EmotionLabel, Branch> branches;
  std::map<EmotionLabel, int> acknowledgement;       // emotion -> semantic class
  std::map<EmotionLabel, std::array<int, 2>> cells;  // [better, same_or_worse] -> class
  std::map<std::string, Bilingual> script;
  std::map<EmotionLabel, Bilingual> emotion_names;
  std::array<std::vector<std::string>, 2> yes_words;  // by language index
  std::array<std::vector<std::string>, 2> no_words;
  std::vector<BaseUtteranceEntry> base_utterances;    // 45, by class id

  // Reads the directory; with `verify`, every file must match manifest.json.
  static ContentBundle load(const std::filesystem::path& dir, bool verify = true);
  static ContentBundle shipped();
  static std::filesystem::path shipped_dir();

  // Structural checks: 20 protocols with both languages, protocol references
  // in range, 45 base utterances, both languages for every script entry.
  void validate() const;

  const Protocol& protocol(int id) const;
  const std::string& line(const std::string& key, Language lang) const;
  const BaseUtteranceEntry& base(int class_id) const;
  int cell(EmotionLabel e, Feedback f) const;
};

// Verifies each file listed in `dir/manifest.json`; throws ValidationError on
// a mismatch or a missing file.
void verify_manifest(const std::filesystem::path& dir);

}  // namespace sat::engine
