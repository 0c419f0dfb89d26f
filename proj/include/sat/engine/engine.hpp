#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sat/emotion/emotion.hpp"
#include "sat/engine/content.hpp"
#include "sat/store/response_store.hpp"

namespace sat::engine {

enum class Node {
  greet,
  confirm_emotion,
  select_emotion,
  question,
  recommend,
  practice,
  ask_exclude_last,
  continue_or_end,
  ended
};

enum class EventKind {
  user_text,
  emotion_override,
  protocol_chosen,
  protocol_declined,
  feedback_better,
  feedback_same_or_worse,
  end_session
};

inline constexpr std::array kAllNodes{Node::greet,          Node::confirm_emotion, Node::select_emotion,
                                      Node::question,       Node::recommend,       Node::practice,
                                      Node::ask_exclude_last, Node::continue_or_end, Node::ended};
inline constexpr std::array kAllEvents{EventKind::user_text,          EventKind::emotion_override,
                                       EventKind::protocol_chosen,    EventKind::protocol_declined,
                                       EventKind::feedback_better,    EventKind::feedback_same_or_worse,
                                       EventKind::end_session};

std::string_view to_string(Node n);
std::string_view to_string(EventKind k);
Node node_from_string(std::string_view s);
EventKind event_from_string(std::string_view s);

struct EngineEvent {
  EventKind kind = EventKind::user_text;
  std::string text;                     // user_text
  std::optional<EmotionLabel> emotion;  // emotion_override
  std::optional<int> protocol;          // protocol_chosen / protocol_declined

  static EngineEvent user_text(std::string s);
  static EngineEvent emotion_override(EmotionLabel e);
  static EngineEvent protocol_chosen(int id);
  static EngineEvent protocol_declined(int id);
  static EngineEvent feedback(Feedback f);
  static EngineEvent end_session();

  // Payload must match the kind.
  void validate() const;
  nlohmann::json to_json() const;
  static EngineEvent from_json(const nlohmann::json& j);
};

struct ConversationState {
  std::string session_id;
  Language language = Language::EN;
  Node node = Node::greet;
  std::optional<EmotionLabel> detected_emotion;
  bool emotion_overridden = false;
  std::set<int> excluded_protocols;
  std::vector<std::string> shown_history;
  std::optional<int> last_protocol;
  std::optional<EmotionLabel> pre_protocol_emotion;
  std::vector<int> recommendation;  // what the user was last offered
  std::size_t question_index = 0;

  nlohmann::json to_json() const;
};

struct BotUtterance {
  std::string text;
  Language language = Language::EN;
  std::string source;  // script:<key> | store:<id> | base:<class>

  nlohmann::json to_json() const;
};

struct StepResult {
  ConversationState state;
  std::vector<BotUtterance> utterances;
};

enum class Transition { handled, rejected };

// The complete (node x event) table.
Transition transition(Node node, EventKind event);
std::vector<EventKind> valid_events(Node node);

enum class YesNo { yes, no, unclear };
YesNo parse_yes_no(std::string_view text, Language lang, const ContentBundle& content);

struct EngineConfig {
  store::RankingWeights ranking;
  std::optional<std::uint64_t> session_seed;  // unset: nondeterministic ids
};

// Pure transition function over conversation states; the only mutable member
// is the session-id generator.
class ConversationEngine {
 public:
  ConversationEngine(ContentBundle content, const emotion::EmotionDetector* detector,
                     const store::ResponseStore* store, EngineConfig config = {});

  StepResult start_session(Language language) const;
  StepResult start_session(std::string_view language) const;

  // Throws ProtocolError when the event is not valid at the state's node and
  // ValidationError for a malformed payload.
  StepResult step(const ConversationState& state, const EngineEvent& event) const;

  // Branch protocols minus exclusions; the fallback group minus exclusions
  // when that is empty; possibly empty.
  std::vector<int> recommend(const ConversationState& state) const;

  // Fig. 3 response for the pre-protocol emotion and the reported change.
  StepResult post_protocol_branch(const ConversationState& state, Feedback feedback) const;

  const ContentBundle& content() const { return content_; }

 private:
  std::string new_session_id() const;
  void say(ConversationState& s, std::vector<BotUtterance>& out, const std::string& key,
           const std::vector<std::pair<std::string, std::string>>& fill = {}) const;
  void respond(ConversationState& s, std::vector<BotUtterance>& out, int semantic_class) const;
  void emotion_confirmed(ConversationState& s, std::vector<BotUtterance>& out) const;
  void next_question(ConversationState& s, std::vector<BotUtterance>& out) const;
  void enter_recommendation(ConversationState& s, std::vector<BotUtterance>& out) const;
  std::string emotion_list(Language lang) const;

  ContentBundle content_;
  const emotion::EmotionDetector* detector_;
  const store::ResponseStore* store_;
  EngineConfig config_;
  mutable std::mutex id_mu_;
  mutable std::mt19937_64 id_rng_;
};

}  // namespace sat::engine
