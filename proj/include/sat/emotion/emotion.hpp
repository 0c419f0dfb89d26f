#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sat/classify/text_classifier.hpp"
#include "sat/dataset/records.hpp"

namespace sat::emotion {

using classify::ClassifierMetrics;
using classify::EpochLog;
using classify::LabeledText;
using classify::TextClassifier;
using classify::TextEncoder;

struct EmotionDistribution {
  std::array<double, kNumEmotions> probs{};

  EmotionLabel argmax() const;
  double operator[](EmotionLabel e) const { return probs[static_cast<std::size_t>(index_of(e))]; }
  // probs in [0,1] summing to 1 within 1e-6.
  bool valid() const;
};

struct Prediction {
  EmotionDistribution distribution;
  std::array<double, kNumEmotions> logits{};
  bool truncated = false;

  EmotionLabel label() const { return distribution.argmax(); }
};

struct FinetuneStage {
  std::string name;
  std::vector<LabeledText> data;
  classify::TrainStage hyper;
};

// One stage = single finetuning; two stages = double finetuning where stage 2
// starts from the stage-1 weights.
struct FinetuneConfig {
  std::vector<FinetuneStage> stages;
  // Seed for the classification head; the encoder brings its own weights.
  std::uint64_t head_seed = 7;

  void validate() const;
};

struct FinetuneResult {
  TextClassifier model;
  std::vector<EpochLog> log;
};

// The emotion class order as classifier label strings.
std::vector<std::string> emotion_class_names();

std::vector<LabeledText> to_labeled(std::span<const dataset::EmotionExample> examples);

FinetuneResult finetune(const TextEncoder& encoder, const FinetuneConfig& config);

Prediction classify(const TextClassifier& model, std::string_view text);

ClassifierMetrics evaluate(const TextClassifier& model, std::span<const LabeledText> testset);
ClassifierMetrics evaluate(const TextClassifier& model, const dataset::EmotionDataset& testset);

// Interface the conversation engine consumes.
class EmotionDetector {
 public:
  virtual ~EmotionDetector() = default;
  virtual EmotionDistribution detect(std::string_view text) const = 0;
};

class ClassifierDetector final : public EmotionDetector {
 public:
  explicit ClassifierDetector(TextClassifier model);
  EmotionDistribution detect(std::string_view text) const override;

 private:
  TextClassifier model_;
};

}  // namespace sat::emotion
