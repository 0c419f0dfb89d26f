#include "sat/dataset/fluency.hpp"

#include <httplib.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "sat/error.hpp"
#include "sat/text.hpp"

namespace sat::dataset {

double compute_perplexity(std::string_view text, const LanguageModel& lm) {
  const auto tokens = lm.tokenize(text);
  if (tokens.empty()) throw ValidationError("perplexity: text has no tokens");
  const auto lps = lm.token_log_probs(tokens);
  if (lps.size() != tokens.size()) throw ConfigurationError("lm returned wrong number of scores");
  double total = 0.0;
  for (double lp : lps) {
    if (!(lp > -std::numeric_limits<double>::infinity())) {
      return std::numeric_limits<double>::infinity();
    }
    total += lp;
  }
  const double ppl = std::exp(-total / static_cast<double>(tokens.size()));
  return std::max(ppl, 1.0);
}

double compute_slor(std::string_view text, const LanguageModel& lm, const UnigramModel& unigram) {
  if (lm.tokenizer_id() != unigram.tokenizer_id()) {
    throw ConfigurationError("SLOR: language model and unigram model use different tokenizers");
  }
  const auto tokens = lm.tokenize(text);
  if (tokens != unigram.tokenize(text)) {
    throw ConfigurationError("SLOR: tokenizations disagree");
  }
  if (tokens.empty()) throw ValidationError("SLOR: text has no tokens");
  const auto lps = lm.token_log_probs(tokens);
  double lm_total = 0.0;
  double uni_total = 0.0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    lm_total += lps[i];
    uni_total += unigram.log_prob(tokens[i]);
  }
  return (lm_total - uni_total) / static_cast<double>(tokens.size());
}

AddOneUnigramModel::AddOneUnigramModel(std::span<const std::string> corpus) {
  for (const auto& line : corpus) {
    for (auto& t : text::pretokenize(line)) {
      ++counts_[t];
      ++total_;
    }
  }
}

std::vector<std::string> AddOneUnigramModel::tokenize(std::string_view s) const {
  return text::pretokenize(s);
}

double AddOneUnigramModel::log_prob(const std::string& token) const {
  // One extra type reserved for unseen tokens.
  const double v = static_cast<double>(counts_.size() + 1);
  auto it = counts_.find(token);
  const double c = it == counts_.end() ? 0.0 : static_cast<double>(it->second);
  return std::log((c + 1.0) / (static_cast<double>(total_) + v));
}

std::vector<double> AddOneUnigramModel::token_log_probs(std::span<const std::string> tokens) const {
  std::vector<double> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(log_prob(t));
  return out;
}

namespace {
const std::string kStart = "<s>";
}

BigramLanguageModel::BigramLanguageModel(std::span<const std::string> corpus, double k) : k_(k) {
  std::map<std::string, bool> types;
  for (const auto& line : corpus) {
    std::string prev = kStart;
    for (auto& t : text::pretokenize(line)) {
      ++bigrams_[prev][t];
      ++context_totals_[prev];
      types[t] = true;
      prev = t;
    }
  }
  vocab_size_ = types.size() + 1;
}

std::vector<std::string> BigramLanguageModel::tokenize(std::string_view s) const {
  return text::pretokenize(s);
}

std::vector<double> BigramLanguageModel::token_log_probs(std::span<const std::string> tokens) const {
  std::vector<double> out;
  out.reserve(tokens.size());
  std::string prev = kStart;
  const double v = static_cast<double>(vocab_size_);
  for (const auto& t : tokens) {
    double c = 0.0;
    double total = 0.0;
    if (auto it = bigrams_.find(prev); it != bigrams_.end()) {
      if (auto jt = it->second.find(t); jt != it->second.end()) c = static_cast<double>(jt->second);
      total = static_cast<double>(context_totals_.at(prev));
    }
    out.push_back(std::log((c + k_) / (total + k_ * v)));
    prev = t;
  }
  return out;
}

std::vector<double> SentenceScorer::score_batch(std::span<const std::string> sentences) const {
  std::vector<double> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(score(s));
  return out;
}

HttpSentenceScorer::HttpSentenceScorer(std::string endpoint) {
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) throw ConfigurationError("endpoint must be an http URL");
  const auto slash = endpoint.find('/', scheme + 3);
  base_ = endpoint.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : endpoint.substr(slash);
}

double HttpSentenceScorer::score(std::string_view sentence) const {
  const std::string s(sentence);
  return score_batch(std::span<const std::string>(&s, 1)).at(0);
}

std::vector<double> HttpSentenceScorer::score_batch(std::span<const std::string> sentences) const {
  httplib::Client client(base_);
  client.set_connection_timeout(10);
  client.set_read_timeout(60);
  const nlohmann::json body = {
      {"sentences", std::vector<std::string>(sentences.begin(), sentences.end())}};
  auto res = client.Post(path_, body.dump(), "application/json");
  if (!res) throw Error("PRISM-SRC scorer unreachable at " + base_ + path_);
  if (res->status != 200) {
    throw Error("PRISM-SRC scorer returned HTTP " + std::to_string(res->status));
  }
  const auto reply = nlohmann::json::parse(res->body);
  auto scores = reply.at("scores").get<std::vector<double>>();
  if (scores.size() != sentences.size()) throw Error("PRISM-SRC scorer returned wrong count");
  return scores;
}

nlohmann::ordered_json FluencyReport::to_json() const {
  nlohmann::ordered_json j;
  j["revision"] = to_string(revision);
  j["n_sentences"] = n_sentences;
  j["mean_slor"] = mean_slor;
  if (mean_prism_src) j["mean_prism_src"] = *mean_prism_src;
  j["mean_ppl"] = mean_ppl;
  return j;
}

FluencyReport evaluate_revision(std::span<const std::string> corpus, Revision revision,
                                const ScorerSet& scorers) {
  if (corpus.empty()) throw ValidationError("evaluate_revision: empty corpus");
  if (!scorers.perplexity || !scorers.slor) {
    throw ConfigurationError("evaluate_revision requires perplexity and SLOR scorers");
  }
  auto mean_of = [&](const SentenceScorer& sc) {
    const auto v = sc.score_batch(corpus);
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  FluencyReport r;
  r.revision = revision;
  r.n_sentences = corpus.size();
  r.mean_ppl = mean_of(*scorers.perplexity);
  r.mean_slor = mean_of(*scorers.slor);
  if (scorers.prism_src) r.mean_prism_src = mean_of(*scorers.prism_src);
  if (!(r.mean_ppl >= 1.0)) throw DomainError("perplexity scorer produced a mean below 1");
  return r;
}

}  // namespace sat::dataset
