#include "sat/nn/tokenizer.hpp"

#include <algorithm>
#include <map>

#include "sat/error.hpp"
#include "sat/hash.hpp"
#include "sat/text.hpp"

namespace sat::nn {
namespace {

std::vector<std::string> reserved_tokens() {
  std::vector<std::string> v = {"[PAD]", "[UNK]", "[CLS]", "[BOS]", "[EOS]",
                                "[SEP]", "[EMO]", "[LOW]", "[HIGH]"};
  for (EmotionLabel e : kEmotionOrder) v.push_back("<" + std::string(to_string(e)) + ">");
  return v;
}

}  // namespace

Tokenizer::Tokenizer() : Tokenizer(reserved_tokens()) {}

Tokenizer::Tokenizer(std::vector<std::string> vocab) : vocab_(std::move(vocab)) {
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (!index_.emplace(vocab_[i], static_cast<int>(i)).second) {
      throw ValidationError("duplicate vocabulary token '" + vocab_[i] + "'");
    }
  }
}

Tokenizer Tokenizer::build(const std::vector<std::string>& corpus, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& line : corpus) {
    for (auto& tok : text::pretokenize(line)) ++counts[tok];
  }
  std::vector<std::string> vocab = reserved_tokens();
  const std::size_t reserved = vocab.size();
  std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [tok, n] : items) {
    if (n < min_count) continue;
    if (std::find(vocab.begin(), vocab.begin() + static_cast<long>(reserved), tok) !=
        vocab.begin() + static_cast<long>(reserved)) {
      continue;
    }
    vocab.push_back(tok);
  }
  return Tokenizer(std::move(vocab));
}

std::vector<int> Tokenizer::encode(std::string_view s) const {
  std::vector<int> ids;
  for (const auto& tok : text::pretokenize(s)) ids.push_back(id(tok));
  return ids;
}

std::vector<std::string> Tokenizer::tokens(std::span<const int> ids, bool skip_special) const {
  std::vector<std::string> out;
  for (int i : ids) {
    if (skip_special && is_special(i)) continue;
    out.push_back(token(i));
  }
  return out;
}

std::string Tokenizer::decode(std::span<const int> ids) const {
  const auto toks = tokens(ids, true);
  return text::detokenize(toks);
}

int Tokenizer::id(std::string_view tok) const {
  auto it = index_.find(std::string(tok));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Tokenizer::token(int i) const {
  if (i < 0 || static_cast<std::size_t>(i) >= vocab_.size()) {
    throw DomainError("token id out of range: " + std::to_string(i));
  }
  return vocab_[static_cast<std::size_t>(i)];
}

std::string Tokenizer::fingerprint() const {
  std::string buf;
  for (const auto& t : vocab_) {
    buf += t;
    buf += '\n';
  }
  return sha256_hex(buf);
}

nlohmann::json Tokenizer::to_json() const { return {{"vocab", vocab_}}; }

Tokenizer Tokenizer::from_json(const nlohmann::json& j) {
  auto vocab = j.at("vocab").get<std::vector<std::string>>();
  const auto reserved = reserved_tokens();
  if (vocab.size() < reserved.size() ||
      !std::equal(reserved.begin(), reserved.end(), vocab.begin())) {
    throw ValidationError("vocabulary does not start with the reserved tokens");
  }
  return Tokenizer(std::move(vocab));
}

}  // namespace sat::nn
