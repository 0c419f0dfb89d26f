#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sat/dataset/fluency.hpp"
#include "sat/rewriting/breakdown.hpp"
#include "sat/empathy/scoring.hpp"
#include "sat/types.hpp"

namespace sat::rewriting {

// Per-language stopword list. The hash covers the sorted word list, so two
// sets hash equal iff they hold the same words.
class StopwordSet {
 public:
  StopwordSet() = default;
  explicit StopwordSet(std::vector<std::string> words);
  // {"en": [...], "zh": [...]} file; `lang` picks one list.
  static StopwordSet load(const std::filesystem::path& path, Language lang);
  static StopwordSet shipped(Language lang);

  bool contains(const std::string& token) const { return words_.count(token) != 0; }
  std::size_t size() const { return words_.size(); }
  std::string hash() const;

 private:
  std::set<std::string> words_;
};

// unit_penalty * sum over non-stopword tokens of max(0, count - 1).
double repetition_penalty(std::string_view text, const StopwordSet& stopwords, double unit_penalty);
double repetition_penalty(const std::vector<std::string>& tokens, const StopwordSet& stopwords,
                          double unit_penalty);

// 1/PPL - RP; the first term is 0 when PPL is infinite.
double fluency_reward(std::string_view text, const dataset::LanguageModel& lm,
                      const StopwordSet& stopwords, double unit_penalty = 0.1);

// The three reward signals for one rewriting.
class RewardComponents {
 public:
  virtual ~RewardComponents() = default;
  virtual double empathy(std::string_view text) const = 0;
  virtual double fluency(std::string_view text) const = 0;
  virtual double semantic(std::string_view text, SemanticClass base) const = 0;
};

// Frozen empathy and semantic classifiers plus a fluency LM. Holds references.
class ModelRewards final : public RewardComponents {
 public:
  ModelRewards(const empathy::EmpathyScorer& empathy, const dataset::LanguageModel& lm,
               const empathy::SemanticScorer& semantic, StopwordSet stopwords,
               double unit_penalty = 0.1);
  double empathy(std::string_view text) const override;
  double fluency(std::string_view text) const override;
  double semantic(std::string_view text, SemanticClass base) const override;

 private:
  const empathy::EmpathyScorer& empathy_;
  const dataset::LanguageModel& lm_;
  const empathy::SemanticScorer& semantic_;
  StopwordSet stopwords_;
  double unit_penalty_;
};

RewardBreakdown total_reward(std::string_view text, SemanticClass base,
                             const RewardWeights& weights, const RewardComponents& models);

}  // namespace sat::rewriting
