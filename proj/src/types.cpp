#include "sat/types.hpp"

#include "sat/error.hpp"

namespace sat {

std::string_view to_string(Language lang) {
  return lang == Language::EN ? "en" : "zh";
}

std::string_view to_string(EmotionLabel label) {
  switch (label) {
    case EmotionLabel::fear_anxiety:
      return "fear_anxiety";
    case EmotionLabel::anger:
      return "anger";
    case EmotionLabel::sadness:
      return "sadness";
    case EmotionLabel::joy_contentment:
      return "joy_contentment";
  }
  return "unknown";
}

std::optional<Language> parse_language(std::string_view s) {
  if (s == "en" || s == "EN") return Language::EN;
  if (s == "zh" || s == "ZH") return Language::ZH;
  return std::nullopt;
}

std::optional<EmotionLabel> parse_emotion(std::string_view s) {
  for (EmotionLabel e : kEmotionOrder) {
    if (s == to_string(e)) return e;
  }
  return std::nullopt;
}

Language language_from_string(std::string_view s) {
  if (auto lang = parse_language(s)) return *lang;
  throw ValidationError("unsupported language '" + std::string(s) + "'");
}

EmotionLabel emotion_from_string(std::string_view s) {
  if (auto e = parse_emotion(s)) return *e;
  throw ValidationError("unknown emotion label '" + std::string(s) + "'");
}

EmotionLabel emotion_at(int index) {
  if (index < 0 || index >= static_cast<int>(kNumEmotions)) {
    throw DomainError("emotion index out of range: " + std::to_string(index));
  }
  return kEmotionOrder[static_cast<std::size_t>(index)];
}

SemanticClass SemanticClass::checked(int id) {
  if (id < 0 || id >= kNumSemanticClasses) {
    throw DomainError("semantic class out of range: " + std::to_string(id));
  }
  return SemanticClass{id};
}

}  // namespace sat
