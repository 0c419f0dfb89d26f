#include "sat/empathy/scoring.hpp"

#include <algorithm>
#include <random>

#include "sat/error.hpp"

namespace sat::empathy {

ClassifierEmpathyScorer::ClassifierEmpathyScorer(std::shared_ptr<const TextClassifier> model)
    : model_(std::move(model)) {
  if (!model_ || model_->num_classes() != kNumEmpathyLevels) {
    throw ConfigurationError("empathy scorer needs a three-class model");
  }
}

std::array<double, kNumEmpathyLevels> ClassifierEmpathyScorer::logits(std::string_view text) const {
  const auto l = model_->logits(text);
  return {l[0], l[1], l[2]};
}

ClassifierSemanticScorer::ClassifierSemanticScorer(std::shared_ptr<const TextClassifier> model)
    : model_(std::move(model)) {
  if (!model_ || model_->num_classes() != static_cast<std::size_t>(kNumSemanticClasses)) {
    throw ConfigurationError("semantic scorer needs a 45-class model");
  }
}

std::vector<double> ClassifierSemanticScorer::logits(std::string_view text) const {
  return model_->logits(text);
}

std::vector<std::string> empathy_class_names() { return {"0", "1", "2"}; }

std::vector<std::string> semantic_class_names() {
  std::vector<std::string> v;
  for (int i = 0; i < kNumSemanticClasses; ++i) v.push_back("base_" + std::to_string(i));
  return v;
}

std::vector<classify::LabeledText> empathy_examples(
    std::span<const dataset::RewritingExample> rewritings) {
  std::vector<classify::LabeledText> out;
  for (const auto& r : rewritings) {
    if (r.empathy_label) out.push_back({r.rewriting, *r.empathy_label});
  }
  return out;
}

std::vector<classify::LabeledText> semantic_examples(
    std::span<const dataset::RewritingExample> rewritings) {
  std::vector<classify::LabeledText> out;
  out.reserve(rewritings.size());
  for (const auto& r : rewritings) out.push_back({r.rewriting, r.base_id});
  return out;
}

TextClassifier train_empathy_classifier(const classify::TextEncoder& encoder,
                                        std::span<const dataset::RewritingExample> annotated,
                                        const classify::TrainStage& hyper,
                                        std::uint64_t head_seed) {
  const auto data = empathy_examples(annotated);
  classify::require_all_classes(data, kNumEmpathyLevels, "empathy classifier");
  TextClassifier model(encoder.clone(), empathy_class_names(), head_seed);
  classify::train_classifier(model, data, hyper);
  return model;
}

TextClassifier train_semantic_classifier(const classify::TextEncoder& encoder,
                                         std::span<const dataset::RewritingExample> rewritings,
                                         const classify::TrainStage& hyper,
                                         std::uint64_t head_seed) {
  const auto data = semantic_examples(rewritings);
  classify::require_all_classes(data, kNumSemanticClasses, "semantic classifier");
  TextClassifier model(encoder.clone(), semantic_class_names(), head_seed);
  classify::train_classifier(model, data, hyper);
  return model;
}

EmpathyScore score_empathy(const EmpathyScorer& scorer, std::string_view text) {
  if (text.empty()) throw ValidationError("empathy score of empty text");
  EmpathyScore s;
  s.logits = scorer.logits(text);
  s.label = static_cast<int>(std::max_element(s.logits.begin(), s.logits.end()) - s.logits.begin());
  return s;
}

double empathy_reward(const EmpathyScorer& scorer, std::string_view text) {
  if (text.empty()) throw ValidationError("empathy reward of empty text");
  return scorer.logits(text)[kHighEmpathy];
}

double semantic_reward(const SemanticScorer& scorer, std::string_view text, SemanticClass base) {
  if (base.class_id < 0 || base.class_id >= kNumSemanticClasses) {
    throw DomainError("semantic class out of range: " + std::to_string(base.class_id));
  }
  const auto l = scorer.logits(text);
  if (static_cast<int>(l.size()) != kNumSemanticClasses) {
    throw ConfigurationError("semantic scorer returned the wrong number of logits");
  }
  return l[static_cast<std::size_t>(base.class_id)];
}

SplitSets<classify::LabeledText> split_80_10_10(std::vector<classify::LabeledText> data,
                                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::shuffle(data.begin(), data.end(), rng);
  const std::size_t n = data.size();
  const std::size_t n_train = n * 8 / 10;
  const std::size_t n_dev = n / 10;
  SplitSets<classify::LabeledText> out;
  out.train.assign(data.begin(), data.begin() + static_cast<long>(n_train));
  out.dev.assign(data.begin() + static_cast<long>(n_train),
                 data.begin() + static_cast<long>(n_train + n_dev));
  out.test.assign(data.begin() + static_cast<long>(n_train + n_dev), data.end());
  return out;
}

}  // namespace sat::empathy
