#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "sat/classify/text_classifier.hpp"
#include "sat/dataset/records.hpp"

namespace sat::empathy {

using classify::TextClassifier;

inline constexpr int kNumEmpathyLevels = 3;
inline constexpr int kHighEmpathy = 2;

struct EmpathyScore {
  std::array<double, kNumEmpathyLevels> logits{};
  int label = 0;  // argmax(logits)
};

// Frozen empathy model: raw logits over {0, 1, 2}.
class EmpathyScorer {
 public:
  virtual ~EmpathyScorer() = default;
  virtual std::array<double, kNumEmpathyLevels> logits(std::string_view text) const = 0;
};

// Frozen semantic model: raw logits over the 45 base utterances.
class SemanticScorer {
 public:
  virtual ~SemanticScorer() = default;
  virtual std::vector<double> logits(std::string_view text) const = 0;
};

class ClassifierEmpathyScorer final : public EmpathyScorer {
 public:
  explicit ClassifierEmpathyScorer(std::shared_ptr<const TextClassifier> model);
  std::array<double, kNumEmpathyLevels> logits(std::string_view text) const override;
  const TextClassifier& model() const { return *model_; }

 private:
  std::shared_ptr<const TextClassifier> model_;
};

class ClassifierSemanticScorer final : public SemanticScorer {
 public:
  explicit ClassifierSemanticScorer(std::shared_ptr<const TextClassifier> model);
  std::vector<double> logits(std::string_view text) const override;
  const TextClassifier& model() const { return *model_; }

 private:
  std::shared_ptr<const TextClassifier> model_;
};

std::vector<std::string> empathy_class_names();
std::vector<std::string> semantic_class_names();

// Uses the annotated subset; every level 0..2 must occur.
TextClassifier train_empathy_classifier(const classify::TextEncoder& encoder,
                                        std::span<const dataset::RewritingExample> annotated,
                                        const classify::TrainStage& hyper,
                                        std::uint64_t head_seed = 5);

// Labels are base_id; all 45 classes must occur.
TextClassifier train_semantic_classifier(const classify::TextEncoder& encoder,
                                         std::span<const dataset::RewritingExample> rewritings,
                                         const classify::TrainStage& hyper,
                                         std::uint64_t head_seed = 6);

std::vector<classify::LabeledText> empathy_examples(
    std::span<const dataset::RewritingExample> rewritings);
std::vector<classify::LabeledText> semantic_examples(
    std::span<const dataset::RewritingExample> rewritings);

EmpathyScore score_empathy(const EmpathyScorer& scorer, std::string_view text);

// Raw (pre-softmax) logit of the highly empathetic class.
double empathy_reward(const EmpathyScorer& scorer, std::string_view text);

// Raw logit at the base utterance's class; DomainError if out of range.
double semantic_reward(const SemanticScorer& scorer, std::string_view text, SemanticClass base);

// Deterministic 80/10/10 partition by seeded shuffle.
template <typename T>
struct SplitSets {
  std::vector<T> train, dev, test;
};
SplitSets<classify::LabeledText> split_80_10_10(std::vector<classify::LabeledText> data,
                                                std::uint64_t seed);

}  // namespace sat::empathy
