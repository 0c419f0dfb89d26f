#pragma once

#include <nlohmann/json.hpp>

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sat/types.hpp"

namespace sat::nn {

// Word-level vocabulary over `text::pretokenize` output. Ids 0..12 are
// reserved: padding, unknown, sequence markers, prompt delimiters and one
// token per emotion label.
class Tokenizer {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kBos = 3;
  static constexpr int kEos = 4;
  static constexpr int kSep = 5;
  static constexpr int kEmo = 6;
  static constexpr int kLow = 7;
  static constexpr int kHigh = 8;
  static constexpr int kFirstEmotion = 9;
  static constexpr int kNumReserved = kFirstEmotion + static_cast<int>(kNumEmotions);

  Tokenizer();

  // Vocabulary ordered by descending frequency, ties broken lexicographically.
  static Tokenizer build(const std::vector<std::string>& corpus, std::size_t min_count = 1);

  std::vector<int> encode(std::string_view text) const;
  std::string decode(std::span<const int> ids) const;
  std::vector<std::string> tokens(std::span<const int> ids, bool skip_special = true) const;

  int id(std::string_view token) const;
  const std::string& token(int id) const;
  std::size_t size() const { return vocab_.size(); }
  static bool is_special(int id) { return id >= 0 && id < kNumReserved; }
  static int emotion_token(EmotionLabel e) { return kFirstEmotion + index_of(e); }

  // Content hash of the vocabulary; two tokenizers agree iff fingerprints match.
  std::string fingerprint() const;

  nlohmann::json to_json() const;
  static Tokenizer from_json(const nlohmann::json& j);

  friend bool operator==(const Tokenizer& a, const Tokenizer& b) { return a.vocab_ == b.vocab_; }

 private:
  explicit Tokenizer(std::vector<std::string> vocab);
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace sat::nn
