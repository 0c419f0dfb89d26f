#include "sat/rewriting/reward.hpp"

#include <cmath>
#include <map>

#include "sat/error.hpp"
#include "sat/hash.hpp"
#include "sat/io.hpp"
#include "sat/text.hpp"

namespace sat::rewriting {

StopwordSet::StopwordSet(std::vector<std::string> words) {
  for (auto& w : words) {
    for (auto& t : text::pretokenize(w)) words_.insert(std::move(t));
  }
}

StopwordSet StopwordSet::load(const std::filesystem::path& path, Language lang) {
  const auto j = io::read_json(path);
  const std::string key(to_string(lang));
  if (!j.contains(key)) throw ValidationError(path.string() + " has no stopwords for " + key);
  return StopwordSet(j.at(key).get<std::vector<std::string>>());
}

StopwordSet StopwordSet::shipped(Language lang) {
  return load(std::filesystem::path(SAT_CONTENT_DIR) / "stopwords.json", lang);
}

std::string StopwordSet::hash() const {
  std::string joined;
  for (const auto& w : words_) {
    joined += w;
    joined += '\n';
  }
  return sha256_hex(joined);
}

double repetition_penalty(const std::vector<std::string>& tokens, const StopwordSet& stopwords,
                          double unit_penalty) {
  if (!(unit_penalty >= 0.0) || !std::isfinite(unit_penalty)) {
    throw DomainError("unit_penalty must be finite and >= 0");
  }
  std::map<std::string, long> counts;
  for (const auto& t : tokens) {
    if (!stopwords.contains(t)) ++counts[t];
  }
  long repeats = 0;
  for (const auto& [_, c] : counts) repeats += c - 1;
  return unit_penalty * static_cast<double>(repeats);
}

double repetition_penalty(std::string_view text, const StopwordSet& stopwords, double unit_penalty) {
  return repetition_penalty(text::pretokenize(text), stopwords, unit_penalty);
}

double fluency_reward(std::string_view text, const dataset::LanguageModel& lm,
                      const StopwordSet& stopwords, double unit_penalty) {
  const double ppl = dataset::compute_perplexity(text, lm);
  const double first = std::isinf(ppl) ? 0.0 : 1.0 / ppl;
  return first - repetition_penalty(lm.tokenize(text), stopwords, unit_penalty);
}

ModelRewards::ModelRewards(const empathy::EmpathyScorer& empathy, const dataset::LanguageModel& lm,
                           const empathy::SemanticScorer& semantic, StopwordSet stopwords,
                           double unit_penalty)
    : empathy_(empathy), lm_(lm), semantic_(semantic), stopwords_(std::move(stopwords)),
      unit_penalty_(unit_penalty) {}

double ModelRewards::empathy(std::string_view text) const {
  return empathy::empathy_reward(empathy_, text);
}

double ModelRewards::fluency(std::string_view text) const {
  return fluency_reward(text, lm_, stopwords_, unit_penalty_);
}

double ModelRewards::semantic(std::string_view text, SemanticClass base) const {
  return empathy::semantic_reward(semantic_, text, base);
}

RewardBreakdown total_reward(std::string_view text, SemanticClass base,
                             const RewardWeights& weights, const RewardComponents& models) {
  weights.validate();
  return RewardBreakdown::make(models.empathy(text), models.fluency(text),
                               models.semantic(text, base), weights);
}

}  // namespace sat::rewriting
