#include "sat/text.hpp"

#include <algorithm>
#include <set>

namespace sat::text {

std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    int len = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      cp = c;
      len = 1;
    } else if ((c >> 5) == 0x6) {
      cp = c & 0x1F;
      len = 2;
    } else if ((c >> 4) == 0xE) {
      cp = c & 0x0F;
      len = 3;
    } else if ((c >> 3) == 0x1E) {
      cp = c & 0x07;
      len = 4;
    } else {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    if (i + static_cast<std::size_t>(len) > s.size()) {
      out.push_back(0xFFFD);
      break;
    }
    bool ok = true;
    for (int k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc >> 6) != 0x2) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

std::string encode_utf8(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return out;
}

bool is_cjk(char32_t cp) {
  return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
         (cp >= 0x3000 && cp <= 0x303F) || (cp >= 0xFF00 && cp <= 0xFFEF) ||
         (cp >= 0xF900 && cp <= 0xFAFF);
}

bool is_sentence_end(char32_t cp) {
  return cp == '.' || cp == '!' || cp == '?' || cp == 0x3002 ||
         cp == 0xFF01 || cp == 0xFF1F;
}

namespace {

bool is_space(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == 0x3000;
}

bool is_ascii_punct(char32_t cp) {
  return cp < 0x80 && !(cp >= '0' && cp <= '9') && !(cp >= 'a' && cp <= 'z') &&
         !(cp >= 'A' && cp <= 'Z') && cp != '\'' && cp != '_' && cp > ' ';
}

bool is_standalone(const std::string& tok) {
  const auto cps = decode_utf8(tok);
  return cps.size() == 1 && (is_cjk(cps[0]) || is_ascii_punct(cps[0]));
}

bool is_closing_punct(const std::string& tok) {
  static const std::set<std::string> kClosing = {".", ",", "!", "?", ";",
                                                 ":", ")", "'"};
  return kClosing.count(tok) > 0;
}

}  // namespace

std::vector<std::string> pretokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      tokens.push_back(std::move(word));
      word.clear();
    }
  };
  for (char32_t cp : decode_utf8(s)) {
    if (is_space(cp)) {
      flush();
    } else if (is_cjk(cp) || is_ascii_punct(cp)) {
      flush();
      tokens.push_back(encode_utf8(cp));
    } else {
      if (cp >= 'A' && cp <= 'Z') cp = cp - 'A' + 'a';
      word += encode_utf8(cp);
    }
  }
  flush();
  return tokens;
}

std::string detokenize(std::span<const std::string> tokens) {
  std::string out;
  bool prev_cjk = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& tok = tokens[i];
    const auto cps = decode_utf8(tok);
    const bool cjk = !cps.empty() && is_cjk(cps[0]);
    const bool glue = i == 0 || cjk || prev_cjk ||
                      (is_standalone(tok) && is_closing_punct(tok));
    if (!glue) out += ' ';
    out += tok;
    prev_cjk = cjk;
  }
  return out;
}

double token_jaccard(std::string_view a, std::string_view b) {
  const auto ta = pretokenize(a);
  const auto tb = pretokenize(b);
  const std::set<std::string> sa(ta.begin(), ta.end());
  const std::set<std::string> sb(tb.begin(), tb.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& t : sa) inter += sb.count(t);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::string truncate_at_sentence_boundary(std::string_view s) {
  const auto cps = decode_utf8(s);
  std::size_t cut = cps.size();
  bool found = false;
  for (std::size_t i = cps.size(); i-- > 0;) {
    if (is_sentence_end(cps[i])) {
      cut = i + 1;
      found = true;
      break;
    }
  }
  if (!found) return std::string(s);
  std::string out;
  for (std::size_t i = 0; i < cut; ++i) out += encode_utf8(cps[i]);
  return out;
}

}  // namespace sat::text
