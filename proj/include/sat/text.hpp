#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sat::text {

// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD.
std::vector<char32_t> decode_utf8(std::string_view s);
std::string encode_utf8(char32_t cp);

bool is_cjk(char32_t cp);
bool is_sentence_end(char32_t cp);

// Word-level pre-tokenisation shared by every model and metric:
// ASCII is lower-cased, whitespace separates words, punctuation and each
// CJK ideograph become standalone tokens.
std::vector<std::string> pretokenize(std::string_view s);

// Inverse of pretokenize up to whitespace normalisation.
std::string detokenize(std::span<const std::string> tokens);

// |A ∩ B| / |A ∪ B| over token sets; two empty sets have similarity 1.
double token_jaccard(std::string_view a, std::string_view b);

// Cuts `s` after the last sentence-ending character; returns `s` unchanged
// when there is none.
std::string truncate_at_sentence_boundary(std::string_view s);

}  // namespace sat::text
