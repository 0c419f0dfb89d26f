#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>

#include "sat/rewriting/breakdown.hpp"
#include "sat/types.hpp"

namespace sat::store {

enum class Source { translated_v1, translated_v2, rl_generated, sl_generated };
enum class Status { pending, approved, rejected };
enum class Decision { approve, reject };

std::string_view to_string(Source s);
std::string_view to_string(Status s);
std::string_view to_string(Decision d);
Source source_from_string(std::string_view s);
Status status_from_string(std::string_view s);
Decision decision_from_string(std::string_view s);

struct Utterance {
  std::string text;
  Language language = Language::EN;
  SemanticClass base;
  Source source = Source::translated_v1;
};

// Fluency and empathy scores are fixed when the candidate is produced and are
// what serving ranks on; they default to the reward components when present.
struct ResponseCandidate {
  long id = 0;  // assigned by the store; 0 before ingest
  Utterance utterance;
  std::optional<rewriting::RewardBreakdown> reward;
  double fluency_score = 0.0;
  double empathy_score = 0.0;
  Status status = Status::pending;
  std::string reviewer_note;

  static ResponseCandidate pending(Utterance u, std::optional<rewriting::RewardBreakdown> reward);
  nlohmann::json to_json() const;
  static ResponseCandidate from_json(const nlohmann::json& j);
};

}  // namespace sat::store
