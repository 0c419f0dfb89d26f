#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace sat {

enum class Language { EN, ZH };

// Class order is fixed everywhere: indices into distributions, confusion
// matrices and classifier heads follow this enum.
enum class EmotionLabel : int {
  fear_anxiety = 0,
  anger = 1,
  sadness = 2,
  joy_contentment = 3,
};

inline constexpr std::size_t kNumEmotions = 4;
inline constexpr std::array<EmotionLabel, kNumEmotions> kEmotionOrder = {
    EmotionLabel::fear_anxiety, EmotionLabel::anger, EmotionLabel::sadness,
    EmotionLabel::joy_contentment};

std::string_view to_string(Language lang);
std::string_view to_string(EmotionLabel label);
std::optional<Language> parse_language(std::string_view s);
std::optional<EmotionLabel> parse_emotion(std::string_view s);

// Throwing variants used by record loaders and the CLI.
Language language_from_string(std::string_view s);
EmotionLabel emotion_from_string(std::string_view s);

inline constexpr int index_of(EmotionLabel e) { return static_cast<int>(e); }
EmotionLabel emotion_at(int index);

// Identity of one of the 45 base utterances a rewriting must preserve.
inline constexpr int kNumSemanticClasses = 45;

struct SemanticClass {
  int class_id = 0;

  static SemanticClass checked(int id);
  friend bool operator==(const SemanticClass&, const SemanticClass&) = default;
  friend auto operator<=>(const SemanticClass&, const SemanticClass&) = default;
};

}  // namespace sat
