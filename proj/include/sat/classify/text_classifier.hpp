#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sat/classify/encoder.hpp"

namespace sat::classify {

struct ClassifierOutput {
  Tensor hidden;  // 1 x H, sequence-start state
  Tensor logits;  // 1 x C
};

// Encoder + linear head over the sequence-start state. Copies are deep.
class TextClassifier {
 public:
  TextClassifier(std::unique_ptr<TextEncoder> encoder, std::vector<std::string> labels,
                 std::uint64_t head_seed);
  TextClassifier(const TextClassifier& other);
  TextClassifier& operator=(const TextClassifier& other);
  TextClassifier(TextClassifier&&) noexcept = default;
  TextClassifier& operator=(TextClassifier&&) noexcept = default;

  // [CLS] + token ids, tail-truncated to the encoder's max length.
  // `truncated` (optional) reports whether tokens were dropped.
  std::vector<int> prepare(std::string_view text, bool* truncated = nullptr) const;

  ClassifierOutput forward_ids(std::span<const int> ids) const;
  ClassifierOutput forward(std::string_view text) const;
  // Input rows are distributions over the classifier vocabulary; the
  // sequence-start token is prepended here.
  ClassifierOutput forward_soft(const Tensor& token_weights) const;

  // Inference helpers; do not record a graph.
  std::vector<double> logits(std::string_view text) const;
  int predict(std::string_view text) const;

  std::size_t num_classes() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const TextEncoder& encoder() const { return *encoder_; }
  const nn::Tokenizer& tokenizer() const { return *encoder_->tokenizer(); }

  void visit_params(const nn::ParamVisitor& v);
  std::string weights_hash() const;

  // Directory layout: config.json, classes.json, vocab.json, weights.json.
  void save(const std::filesystem::path& dir) const;
  static TextClassifier load(const std::filesystem::path& dir);

 private:
  std::unique_ptr<TextEncoder> encoder_;
  nn::Linear head_;
  std::vector<std::string> labels_;
};

struct LabeledText {
  std::string text;
  int label = -1;  // -1 = unlabeled
};

struct TrainStage {
  int epochs = 5;
  double learning_rate = 1e-3;
  int batch_size = 16;
  std::uint64_t seed = 1;
};

struct EpochLog {
  int stage = 0;
  int epoch = 0;
  double mean_loss = 0.0;
};

// Mini-batch Adam over `n` examples; `example_loss(i)` builds the scalar loss
// for example i. Examples are visited in a seed-determined shuffled order.
std::vector<EpochLog> run_epochs(nn::NamedParams params, std::size_t n, const TrainStage& stage,
                                 int stage_index,
                                 const std::function<Tensor(std::size_t)>& example_loss,
                                 const std::function<void(const EpochLog&)>& on_epoch_end = {});

// Cross-entropy training of `model` on labelled data.
std::vector<EpochLog> train_classifier(TextClassifier& model, std::span<const LabeledText> data,
                                       const TrainStage& stage, int stage_index = 0);

// Throws ValidationError unless every class in [0, num_classes) occurs.
void require_all_classes(std::span<const LabeledText> data, std::size_t num_classes,
                         std::string_view what);

struct ClassifierMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  std::vector<double> per_class_f1;
  std::vector<std::vector<long>> confusion;  // [truth][prediction]
  long total = 0;
};

ClassifierMetrics compute_metrics(std::span<const int> truth, std::span<const int> predicted,
                                  std::size_t num_classes);
ClassifierMetrics evaluate_classifier(const TextClassifier& model,
                                      std::span<const LabeledText> testset);

}  // namespace sat::classify
