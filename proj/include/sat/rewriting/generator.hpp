#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sat/classify/text_classifier.hpp"
#include "sat/dataset/records.hpp"
#include "sat/nn/layers.hpp"
#include "sat/nn/tokenizer.hpp"
#include "sat/nn/transformer.hpp"

namespace sat::rewriting {

using nn::Tensor;

struct SamplingConfig {
  double temperature = 1.0;  // 0 = greedy
  int max_new_tokens = 24;
};

struct Generation {
  std::vector<int> tokens;  // generated ids, EOS excluded
  std::string text;
  bool finished = false;   // stopped on EOS
  bool truncated = false;  // ran out of budget; cut at a sentence boundary
};

// Causal transformer language model. Reserved ids other than EOS and UNK are
// masked out of every output distribution, so prompt delimiters can never be
// produced. Copies are deep.
class Generator {
 public:
  Generator(std::shared_ptr<const nn::Tokenizer> tokenizer, nn::TransformerConfig cfg);
  Generator(const Generator& other);
  Generator& operator=(const Generator& other);
  Generator(Generator&&) noexcept = default;
  Generator& operator=(Generator&&) noexcept = default;

  const nn::Tokenizer& tokenizer() const { return *tokenizer_; }
  std::shared_ptr<const nn::Tokenizer> shared_tokenizer() const { return tokenizer_; }
  const nn::TransformerConfig& config() const { return stack_.config(); }
  int max_len() const { return stack_.config().max_len; }

  // Next-token logits at every position, (n x V).
  Tensor logits(std::span<const int> ids) const;
  // log p(seq[t] | seq[<t]) for t >= prefix_len at the given temperature, (m x 1).
  Tensor continuation_log_probs(std::span<const int> seq, std::size_t prefix_len,
                                double temperature = 1.0) const;
  // Softmax rows predicting seq[prefix_len..], (m x V).
  Tensor continuation_distributions(std::span<const int> seq, std::size_t prefix_len) const;
  // Mean negative log-likelihood of the continuation.
  Tensor lm_loss(std::span<const int> seq, std::size_t prefix_len) const;

  Generation generate(std::span<const int> prompt, const SamplingConfig& sampling,
                      nn::Rng& rng) const;

  void visit_params(const nn::ParamVisitor& v);
  std::string weights_hash() const;

  void save(const std::filesystem::path& dir) const;
  static Generator load(const std::filesystem::path& dir);

 private:
  std::shared_ptr<const nn::Tokenizer> tokenizer_;
  nn::TransformerStack stack_;
  nn::Linear head_;
  Tensor mask_;  // 1 x V, 0 or a large negative
};

// Generator vocabulary over both sides of the rewriting corpus.
nn::Tokenizer build_generator_tokenizer(std::span<const dataset::RewritingExample> corpus);

// [BOS] base [SEP], base truncated so the prompt fits in half the context.
std::vector<int> render_rewrite_prompt(const nn::Tokenizer& tok, std::string_view base,
                                       int max_len);
// prompt + target + [EOS], target truncated to the context.
std::vector<int> append_target(std::vector<int> prompt, const nn::Tokenizer& tok,
                               std::string_view target, int max_len);

struct RewritePair {
  std::string source;
  std::string target;
  int base_id = -1;
};

// Pairs (base -> high-empathy rewriting) for the supervised warm start.
std::vector<RewritePair> high_empathy_pairs(std::span<const dataset::RewritingExample> data);

// Teacher-forced LM finetuning on pairs; throws on an empty set.
std::vector<classify::EpochLog> warm_start(Generator& generator, std::span<const RewritePair> pairs,
                                           const classify::TrainStage& stage);

double mean_lm_loss(const Generator& generator, std::span<const RewritePair> pairs);

std::string greedy_rewrite(const Generator& generator, std::string_view base,
                           int max_new_tokens = 24);

}  // namespace sat::rewriting
