#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sat/classify/text_classifier.hpp"
#include "sat/dataset/records.hpp"
#include "sat/rewriting/generator.hpp"

namespace sat::rewriting {

inline const std::string kEmoToken = "[EMO]";
inline const std::string kLowToken = "[LOW]";
inline const std::string kHighToken = "[HIGH]";

// `[EMO] <label> [LOW] text-tokens [HIGH]`. Distinct (emotion, normalised
// text) pairs render distinctly.
struct SlPrompt {
  EmotionLabel emotion = EmotionLabel::sadness;
  std::string low_text;
  std::vector<std::string> rendered;
};

SlPrompt render_prompt(EmotionLabel emotion, std::string_view low_text);
// Inverse of render_prompt; ValidationError on anything else.
SlPrompt parse_prompt(std::span<const std::string> rendered);
// Generator ids for the prompt, text truncated to half the context.
std::vector<int> prompt_ids(const nn::Tokenizer& tok, const SlPrompt& prompt, int max_len);

// Two-way empathy view: {0, 1} -> low, {2} -> high.
class BinaryEmpathyView {
 public:
  virtual ~BinaryEmpathyView() = default;
  // Input rows are distributions over `tokenizer()`; returns 1x1 P(high).
  virtual Tensor high_probability(const Tensor& token_weights) const = 0;
  virtual double high_probability(std::string_view text) const = 0;
  virtual const nn::Tokenizer& tokenizer() const = 0;
};

// A two-class head trained on the frozen encoder of the 3-class classifier.
class ReheadedEmpathyView final : public BinaryEmpathyView {
 public:
  explicit ReheadedEmpathyView(classify::TextClassifier binary);

  static ReheadedEmpathyView train(const classify::TextClassifier& three_class,
                                   std::span<const dataset::RewritingExample> annotated,
                                   const classify::TrainStage& hyper, std::uint64_t head_seed = 9);

  Tensor high_probability(const Tensor& token_weights) const override;
  double high_probability(std::string_view text) const override;
  const nn::Tokenizer& tokenizer() const override { return model_.tokenizer(); }
  const classify::TextClassifier& model() const { return model_; }

 private:
  classify::TextClassifier model_;
};

int binary_empathy_label(int three_class_label);

// (Vg x Vc) 0/1 matrix sending each generator token to the classifier token
// with the same surface form (UNK when absent).
nn::Matrix vocabulary_bridge(const nn::Tokenizer& generator, const nn::Tokenizer& classifier);

// Mean -log P(high); throws on an empty batch. Probabilities are floored.
double ec_loss(std::span<const double> high_probs);
Tensor ec_loss(const std::vector<Tensor>& high_probs);

struct SlBatchLoss {
  double l_lm = 0.0;
  double l_ec = 0.0;
  double l_total = 0.0;  // l_lm + l_ec
};

struct SlExample {
  SlPrompt prompt;
  std::string target;
};

struct SlStepLog {
  int step = 0;
  int epoch = 0;
  SlBatchLoss loss;
  nlohmann::json to_json() const;
};

struct SlResult {
  Generator generator;
  std::vector<SlStepLog> log;
};

// prompt_ids + target + [EOS]; `prefix_len` receives the prompt length.
std::vector<int> sl_sequence(const nn::Tokenizer& tok, const SlExample& ex, int max_len,
                             std::size_t& prefix_len);

struct SlLossTerms {
  Tensor lm;
  Tensor ec;
  Tensor total;  // lm + ec
};

// Per-example objective. `bridge` is vocabulary_bridge(generator, ec) as a
// constant; ignored when `ec` is null, in which case the ec term is 0.
SlLossTerms sl_example_loss(const Generator& gen, std::span<const int> seq, std::size_t prefix_len,
                            const BinaryEmpathyView* ec, const Tensor& bridge);

// Teacher-forced LM loss plus the classifier loss on the soft token mixture.
// `ec == nullptr` trains the LM term alone.
SlResult sl_train(const Generator& start, std::span<const SlExample> data,
                  const BinaryEmpathyView* ec, const classify::TrainStage& hyper,
                  const std::function<void(const SlStepLog&)>& on_step = {});

std::string sl_generate(const Generator& generator, const SlPrompt& prompt,
                        const SamplingConfig& sampling, nn::Rng& rng);

// Mean P(high) over greedy generations for the prompts.
double mean_high_probability(const Generator& generator, std::span<const SlPrompt> prompts,
                             const BinaryEmpathyView& ec, int max_new_tokens = 24);

}  // namespace sat::rewriting
