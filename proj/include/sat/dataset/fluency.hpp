#pragma once

#include <nlohmann/json.hpp>

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sat/dataset/records.hpp"

namespace sat::dataset {

// Autoregressive language model: natural-log probability of each token given
// its prefix.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  // Identifies the tokenisation scheme; SLOR requires both models to agree.
  virtual std::string tokenizer_id() const = 0;
  virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
  virtual std::vector<double> token_log_probs(std::span<const std::string> tokens) const = 0;
};

class UnigramModel {
 public:
  virtual ~UnigramModel() = default;
  virtual std::string tokenizer_id() const = 0;
  virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
  virtual double log_prob(const std::string& token) const = 0;
};

// exp(-(1/n) Σ log p(token_i | prefix)). Returns +infinity when any token has
// probability zero. Throws ValidationError when the text has no tokens.
double compute_perplexity(std::string_view text, const LanguageModel& lm);

// (log P_lm(text) - log P_unigram(text)) / n.
double compute_slor(std::string_view text, const LanguageModel& lm, const UnigramModel& unigram);

inline constexpr const char* kPretokenizerId = "sat.pretokenize.v1";

// Add-one smoothed unigram estimate; also usable as a (context-free)
// language model.
class AddOneUnigramModel final : public UnigramModel, public LanguageModel {
 public:
  explicit AddOneUnigramModel(std::span<const std::string> corpus);

  std::string tokenizer_id() const override { return kPretokenizerId; }
  std::vector<std::string> tokenize(std::string_view text) const override;
  double log_prob(const std::string& token) const override;
  std::vector<double> token_log_probs(std::span<const std::string> tokens) const override;

 private:
  std::map<std::string, std::size_t> counts_;
  std::size_t total_ = 0;
};

// Add-k smoothed bigram model with a sentence-start context.
class BigramLanguageModel final : public LanguageModel {
 public:
  explicit BigramLanguageModel(std::span<const std::string> corpus, double k = 0.1);

  std::string tokenizer_id() const override { return kPretokenizerId; }
  std::vector<std::string> tokenize(std::string_view text) const override;
  std::vector<double> token_log_probs(std::span<const std::string> tokens) const override;

 private:
  std::map<std::string, std::map<std::string, std::size_t>> bigrams_;
  std::map<std::string, std::size_t> context_totals_;
  std::size_t vocab_size_ = 0;
  double k_;
};

// One real-valued score per sentence.
class SentenceScorer {
 public:
  virtual ~SentenceScorer() = default;
  virtual double score(std::string_view sentence) const = 0;
  virtual std::vector<double> score_batch(std::span<const std::string> sentences) const;
};

class PerplexityScorer final : public SentenceScorer {
 public:
  explicit PerplexityScorer(std::shared_ptr<const LanguageModel> lm) : lm_(std::move(lm)) {}
  double score(std::string_view s) const override { return compute_perplexity(s, *lm_); }

 private:
  std::shared_ptr<const LanguageModel> lm_;
};

class SlorScorer final : public SentenceScorer {
 public:
  SlorScorer(std::shared_ptr<const LanguageModel> lm, std::shared_ptr<const UnigramModel> uni)
      : lm_(std::move(lm)), unigram_(std::move(uni)) {}
  double score(std::string_view s) const override { return compute_slor(s, *lm_, *unigram_); }

 private:
  std::shared_ptr<const LanguageModel> lm_;
  std::shared_ptr<const UnigramModel> unigram_;
};

// External PRISM-SRC service. POSTs {"sentences": [...]} to the endpoint and
// expects {"scores": [...]} (negative log-likelihood per sentence).
class HttpSentenceScorer final : public SentenceScorer {
 public:
  explicit HttpSentenceScorer(std::string endpoint);
  double score(std::string_view sentence) const override;
  std::vector<double> score_batch(std::span<const std::string> sentences) const override;

 private:
  std::string base_;
  std::string path_;
};

struct ScorerSet {
  std::shared_ptr<const SentenceScorer> perplexity;
  std::shared_ptr<const SentenceScorer> slor;
  std::shared_ptr<const SentenceScorer> prism_src;  // optional
};

struct FluencyReport {
  Revision revision = Revision::base;
  double mean_slor = 0.0;
  std::optional<double> mean_prism_src;
  double mean_ppl = 1.0;
  std::size_t n_sentences = 0;

  nlohmann::ordered_json to_json() const;
};

// Sentence-level arithmetic means of every configured metric.
FluencyReport evaluate_revision(std::span<const std::string> corpus, Revision revision,
                                const ScorerSet& scorers);

}  // namespace sat::dataset
