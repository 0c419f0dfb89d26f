#include "sat/emotion/emotion.hpp"

#include <algorithm>
#include <cmath>

#include "sat/error.hpp"

namespace sat::emotion {

EmotionLabel EmotionDistribution::argmax() const {
  const auto it = std::max_element(probs.begin(), probs.end());
  return emotion_at(static_cast<int>(it - probs.begin()));
}

bool EmotionDistribution::valid() const {
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) return false;
    total += p;
  }
  return std::abs(total - 1.0) <= 1e-6;
}

void FinetuneConfig::validate() const {
  if (stages.empty() || stages.size() > 2) {
    throw ConfigurationError("finetuning takes one or two stages");
  }
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto& st = stages[i];
    if (st.hyper.epochs < 0) throw ConfigurationError("epochs must be >= 0");
    // A stage with no epochs is elided and may carry no data.
    if (st.hyper.epochs == 0) continue;
    if (st.data.empty()) {
      throw ValidationError("finetune stage " + std::to_string(i + 1) + " has no data");
    }
    classify::require_all_classes(st.data, kNumEmotions,
                                  "finetune stage " + std::to_string(i + 1));
  }
}

std::vector<std::string> emotion_class_names() {
  std::vector<std::string> names;
  for (EmotionLabel e : kEmotionOrder) names.emplace_back(to_string(e));
  return names;
}

std::vector<LabeledText> to_labeled(std::span<const dataset::EmotionExample> examples) {
  std::vector<LabeledText> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back({ex.text, index_of(ex.label)});
  return out;
}

FinetuneResult finetune(const TextEncoder& encoder, const FinetuneConfig& config) {
  config.validate();
  FinetuneResult result{TextClassifier(encoder.clone(), emotion_class_names(), config.head_seed),
                        {}};
  for (std::size_t i = 0; i < config.stages.size(); ++i) {
    const auto& st = config.stages[i];
    auto log = classify::train_classifier(result.model, st.data, st.hyper, static_cast<int>(i));
    result.log.insert(result.log.end(), log.begin(), log.end());
  }
  return result;
}

Prediction classify(const TextClassifier& model, std::string_view text) {
  if (text.empty()) throw ValidationError("classify: empty text");
  if (model.num_classes() != kNumEmotions) {
    throw ConfigurationError("model is not a four-class emotion classifier");
  }
  Prediction p;
  nn::NoGradGuard guard;
  const auto ids = model.prepare(text, &p.truncated);
  const auto out = model.forward_ids(ids);
  const auto& l = out.logits.value();
  const double m = l.maxCoeff();
  double z = 0.0;
  for (std::size_t c = 0; c < kNumEmotions; ++c) {
    p.logits[c] = l(0, static_cast<Eigen::Index>(c));
    p.distribution.probs[c] = std::exp(p.logits[c] - m);
    z += p.distribution.probs[c];
  }
  for (double& v : p.distribution.probs) v /= z;
  return p;
}

ClassifierMetrics evaluate(const TextClassifier& model, std::span<const LabeledText> testset) {
  return classify::evaluate_classifier(model, testset);
}

ClassifierMetrics evaluate(const TextClassifier& model, const dataset::EmotionDataset& testset) {
  const auto labeled = to_labeled(testset.examples);
  return evaluate(model, labeled);
}

ClassifierDetector::ClassifierDetector(TextClassifier model) : model_(std::move(model)) {
  if (model_.num_classes() != kNumEmotions) {
    throw ConfigurationError("emotion detector needs a four-class model");
  }
}

EmotionDistribution ClassifierDetector::detect(std::string_view text) const {
  return classify(model_, text).distribution;
}

}  // namespace sat::emotion
