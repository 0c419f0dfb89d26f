#include "sat/engine/engine.hpp"

#include <algorithm>
#include <cstdio>

#include "sat/error.hpp"
#include "sat/log.hpp"
#include "sat/text.hpp"

namespace sat::engine {
using nlohmann::json;

std::string_view to_string(Node n) {
  switch (n) {
    case Node::greet:
      return "greet";
    case Node::confirm_emotion:
      return "confirm_emotion";
    case Node::select_emotion:
      return "select_emotion";
    case Node::question:
      return "question";
    case Node::recommend:
      return "recommend";
    case Node::practice:
      return "practice";
    case Node::ask_exclude_last:
      return "ask_exclude_last";
    case Node::continue_or_end:
      return "continue_or_end";
    case Node::ended:
      return "ended";
  }
  return "?";
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::user_text:
      return "user_text";
    case EventKind::emotion_override:
      return "emotion_override";
    case EventKind::protocol_chosen:
      return "protocol_chosen";
    case EventKind::protocol_declined:
      return "protocol_declined";
    case EventKind::feedback_better:
      return "feedback_better";
    case EventKind::feedback_same_or_worse:
      return "feedback_same_or_worse";
    case EventKind::end_session:
      return "end_session";
  }
  return "?";
}

Node node_from_string(std::string_view s) {
  for (auto n : kAllNodes) {
    if (to_string(n) == s) return n;
  }
  throw ValidationError("unknown node '" + std::string(s) + "'");
}

EventKind event_from_string(std::string_view s) {
  for (auto k : kAllEvents) {
    if (to_string(k) == s) return k;
  }
  throw ValidationError("unknown event kind '" + std::string(s) + "'");
}

EngineEvent EngineEvent::user_text(std::string s) { return {EventKind::user_text, std::move(s), {}, {}}; }
EngineEvent EngineEvent::emotion_override(EmotionLabel e) { return {EventKind::emotion_override, {}, e, {}}; }
EngineEvent EngineEvent::protocol_chosen(int id) { return {EventKind::protocol_chosen, {}, {}, id}; }
EngineEvent EngineEvent::protocol_declined(int id) { return {EventKind::protocol_declined, {}, {}, id}; }
EngineEvent EngineEvent::feedback(Feedback f) {
  return {f == Feedback::better ? EventKind::feedback_better : EventKind::feedback_same_or_worse, {}, {}, {}};
}
EngineEvent EngineEvent::end_session() { return {EventKind::end_session, {}, {}, {}}; }

void EngineEvent::validate() const {
  const bool wants_text = kind == EventKind::user_text;
  const bool wants_emotion = kind == EventKind::emotion_override;
  const bool wants_protocol = kind == EventKind::protocol_chosen || kind == EventKind::protocol_declined;
  if (wants_text && text.empty()) throw ValidationError("user_text needs non-empty text");
  if (!wants_text && !text.empty()) throw ValidationError(std::string(to_string(kind)) + " takes no text");
  if (wants_emotion != emotion.has_value()) {
    throw ValidationError(std::string(to_string(kind)) + (wants_emotion ? " needs" : " takes no") + " emotion");
  }
  if (wants_protocol != protocol.has_value()) {
    throw ValidationError(std::string(to_string(kind)) + (wants_protocol ? " needs" : " takes no") + " protocol");
  }
  if (protocol && (*protocol < 1 || *protocol > 20)) throw ValidationError("protocol id outside 1..20");
}

json EngineEvent::to_json() const {
  json j{{"kind", std::string(to_string(kind))}};
  if (kind == EventKind::user_text) j["text"] = text;
  if (emotion) j["emotion"] = std::string(sat::to_string(*emotion));
  if (protocol) j["protocol"] = *protocol;
  return j;
}

EngineEvent EngineEvent::from_json(const json& j) {
  EngineEvent e;
  e.kind = event_from_string(j.at("kind").get<std::string>());
  if (j.contains("text")) e.text = j.at("text").get<std::string>();
  if (j.contains("emotion")) e.emotion = emotion_from_string(j.at("emotion").get<std::string>());
  if (j.contains("protocol")) e.protocol = j.at("protocol").get<int>();
  e.validate();
  return e;
}

json ConversationState::to_json() const {
  json j{{"session_id", session_id},
         {"language", std::string(sat::to_string(language))},
         {"node", std::string(to_string(node))},
         {"detected_emotion", detected_emotion ? json(std::string(sat::to_string(*detected_emotion))) : json(nullptr)},
         {"emotion_overridden", emotion_overridden},
         {"excluded_protocols", excluded_protocols},
         {"recommendation", recommendation},
         {"last_protocol", last_protocol ? json(*last_protocol) : json(nullptr)}};
  json events = json::array();
  for (auto k : valid_events(node)) events.push_back(std::string(to_string(k)));
  j["valid_events"] = std::move(events);
  return j;
}

json BotUtterance::to_json() const {
  return {{"text", text}, {"language", std::string(sat::to_string(language))}, {"source", source}};
}

Transition transition(Node node, EventKind event) {
  using E = EventKind;
  if (node == Node::ended) return Transition::rejected;
  if (event == E::end_session) return Transition::handled;
  switch (node) {
    case Node::greet:
    case Node::confirm_emotion:
    case Node::select_emotion:
    case Node::question:
      return event == E::user_text || event == E::emotion_override ? Transition::handled
                                                                     : Transition::rejected;
    case Node::recommend:
      return event == E::protocol_chosen || event == E::protocol_declined || event == E::emotion_override
                 ? Transition::handled
                 : Transition::rejected;
    case Node::practice:
      return event == E::feedback_better || event == E::feedback_same_or_worse ||
                     event == E::protocol_declined
                 ? Transition::handled
                 : Transition::rejected;
    case Node::ask_exclude_last:
    case Node::continue_or_end:
      return event == E::user_text ? Transition::handled : Transition::rejected;
    case Node::ended:
      break;
  }
  return Transition::rejected;
}

std::vector<EventKind> valid_events(Node node) {
  std::vector<EventKind> out;
  for (auto k : kAllEvents) {
    if (transition(node, k) == Transition::handled) out.push_back(k);
  }
  return out;
}

YesNo parse_yes_no(std::string_view text, Language lang, const ContentBundle& content) {
  const std::size_t li = lang == Language::EN ? 0 : 1;
  const auto tokens = text::pretokenize(text);
  auto any = [&](const std::vector<std::string>& words) {
    return std::any_of(tokens.begin(), tokens.end(), [&](const std::string& t) {
      return std::find(words.begin(), words.end(), t) != words.end();
    });
  };
  if (any(content.no_words[li])) return YesNo::no;
  if (any(content.yes_words[li])) return YesNo::yes;
  return YesNo::unclear;
}

ConversationEngine::ConversationEngine(ContentBundle content, const emotion::EmotionDetector* detector,
                                       const store::ResponseStore* store, EngineConfig config)
    : content_(std::move(content)), detector_(detector), store_(store), config_(config) {
  content_.validate();
  config_.ranking.validate();
  id_rng_.seed(config_.session_seed ? *config_.session_seed : std::random_device{}());
}

std::string ConversationEngine::new_session_id() const {
  std::lock_guard lock(id_mu_);
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(id_rng_()),
                static_cast<unsigned long long>(id_rng_()));
  return buf;
}

StepResult ConversationEngine::start_session(Language language) const {
  StepResult r;
  r.state.session_id = new_session_id();
  r.state.language = language;
  r.state.node = Node::greet;
  say(r.state, r.utterances, "greet");
  return r;
}

StepResult ConversationEngine::start_session(std::string_view language) const {
  const auto lang = parse_language(language);
  if (!lang) throw ValidationError("unsupported language '" + std::string(language) + "'");
  return start_session(*lang);
}

void ConversationEngine::say(ConversationState& s, std::vector<BotUtterance>& out, const std::string& key,
                             const std::vector<std::pair<std::string, std::string>>& fill) const {
  std::string t = content_.line(key, s.language);
  for (const auto& [name, value] : fill) {
    const std::string ph = "{" + name + "}";
    for (auto pos = t.find(ph); pos != std::string::npos; pos = t.find(ph, pos + value.size())) {
      t.replace(pos, ph.size(), value);
    }
  }
  s.shown_history.push_back(t);
  out.push_back({std::move(t), s.language, "script:" + key});
}

void ConversationEngine::respond(ConversationState& s, std::vector<BotUtterance>& out, int semantic_class) const {
  const SemanticClass cls = SemanticClass::checked(semantic_class);
  BotUtterance u{{}, s.language, {}};
  bool served = false;
  if (store_) {
    try {
      const auto top = store_->retrieve(cls, s.language, s.shown_history, 1, config_.ranking);
      u.text = top.front().candidate.utterance.text;
      u.source = "store:" + std::to_string(top.front().candidate.id);
      served = true;
    } catch (const EmptyPoolError&) {
    }
  }
  if (!served) {
    u.text = content_.base(semantic_class).text.in(s.language);
    u.source = "base:" + std::to_string(semantic_class);
  }
  s.shown_history.push_back(u.text);
  out.push_back(std::move(u));
}

std::string ConversationEngine::emotion_list(Language lang) const {
  std::string out;
  for (auto e : kEmotionOrder) {
    if (!out.empty()) out += lang == Language::EN ? ", " : "、";
    out += content_.emotion_names.at(e).in(lang);
  }
  return out;
}

std::vector<int> ConversationEngine::recommend(const ConversationState& s) const {
  if (!s.detected_emotion) throw ValidationError("recommendation needs a detected emotion");
  auto minus = [&](const std::vector<int>& ids) {
    std::vector<int> out;
    for (int id : ids) {
      if (!s.excluded_protocols.count(id)) out.push_back(id);
    }
    return out;
  };
  auto rec = minus(content_.branches.at(*s.detected_emotion).protocols);
  if (rec.empty()) rec = minus(content_.groups.at(content_.fallback_group));
  return rec;
}

void ConversationEngine::emotion_confirmed(ConversationState& s, std::vector<BotUtterance>& out) const {
  respond(s, out, content_.acknowledgement.at(*s.detected_emotion));
  // A fresh branch walk; the previous offer no longer stands.
  s.recommendation.clear();
  s.question_index = 0;
  next_question(s, out);
}

void ConversationEngine::next_question(ConversationState& s, std::vector<BotUtterance>& out) const {
  const auto& qs = content_.branches.at(*s.detected_emotion).questions;
  while (s.question_index < qs.size()) {
    const auto& q = qs[s.question_index];
    const bool moot = std::all_of(q.exclude_on_yes.begin(), q.exclude_on_yes.end(),
                                  [&](int id) { return s.excluded_protocols.count(id) != 0; });
    if (!moot) {
      s.shown_history.push_back(q.text.in(s.language));
      out.push_back({q.text.in(s.language), s.language, "script:question:" + q.id});
      s.node = Node::question;
      return;
    }
    ++s.question_index;
  }
  enter_recommendation(s, out);
}

void ConversationEngine::enter_recommendation(ConversationState& s, std::vector<BotUtterance>& out) const {
  s.recommendation = recommend(s);
  if (s.recommendation.empty()) {
    say(s, out, "no_recommendation");
    say(s, out, "continue_or_end");
    s.node = Node::continue_or_end;
    return;
  }
  std::string list;
  for (int id : s.recommendation) {
    if (!list.empty()) list += s.language == Language::EN ? "; " : "；";
    list += std::to_string(id) + (s.language == Language::EN ? ". " : "．") +
            content_.protocol(id).title.in(s.language);
  }
  say(s, out, "recommend_intro", {{"protocols", list}});
  s.node = Node::recommend;
}

StepResult ConversationEngine::post_protocol_branch(const ConversationState& state, Feedback feedback) const {
  if (!state.last_protocol || !state.pre_protocol_emotion) {
    throw ProtocolError(std::string(to_string(state.node)),
                        std::string(to_string(EngineEvent::feedback(feedback).kind)));
  }
  StepResult r{state, {}};
  auto& s = r.state;
  respond(s, r.utterances, content_.cell(*s.pre_protocol_emotion, feedback));
  if (feedback == Feedback::better) {
    say(s, r.utterances, "continue_or_end");
    s.node = Node::continue_or_end;
  } else {
    say(s, r.utterances, "ask_exclude_last", {{"id", std::to_string(*s.last_protocol)}});
    s.node = Node::ask_exclude_last;
  }
  return r;
}

StepResult ConversationEngine::step(const ConversationState& state, const EngineEvent& event) const {
  if (transition(state.node, event.kind) == Transition::rejected) {
    throw ProtocolError(std::string(to_string(state.node)), std::string(to_string(event.kind)));
  }
  event.validate();
  StepResult r{state, {}};
  auto& s = r.state;
  auto& out = r.utterances;

  switch (event.kind) {
    case EventKind::end_session:
      say(s, out, "goodbye");
      s.node = Node::ended;
      return r;
    case EventKind::emotion_override:
      s.detected_emotion = *event.emotion;
      s.emotion_overridden = true;
      emotion_confirmed(s, out);
      return r;
    case EventKind::feedback_better:
    case EventKind::feedback_same_or_worse:
      return post_protocol_branch(
          state, event.kind == EventKind::feedback_better ? Feedback::better : Feedback::same_or_worse);
    case EventKind::protocol_chosen: {
      const int id = *event.protocol;
      if (std::find(s.recommendation.begin(), s.recommendation.end(), id) == s.recommendation.end()) {
        throw ValidationError("protocol " + std::to_string(id) + " was not offered");
      }
      s.last_protocol = id;
      s.pre_protocol_emotion = s.detected_emotion;
      const auto& p = content_.protocol(id);
      say(s, out, "practice_intro",
          {{"id", std::to_string(id)}, {"title", p.title.in(s.language)}, {"body", p.body.in(s.language)}});
      s.node = Node::practice;
      return r;
    }
    case EventKind::protocol_declined: {
      const int id = *event.protocol;
      s.excluded_protocols.insert(id);
      say(s, out, "declined_ack", {{"id", std::to_string(id)}});
      enter_recommendation(s, out);
      return r;
    }
    case EventKind::user_text:
      break;
  }

  switch (s.node) {
    case Node::greet: {
      std::optional<EmotionLabel> detected;
      if (detector_) {
        try {
          const auto dist = detector_->detect(event.text);
          if (dist.valid()) detected = dist.argmax();
        } catch (const std::exception& e) {
          logger()->warn("emotion detection failed: {}", e.what());
        }
      }
      if (detected) {
        s.detected_emotion = *detected;
        s.emotion_overridden = false;
        say(s, out, "confirm_emotion", {{"emotion", content_.emotion_names.at(*detected).in(s.language)}});
        s.node = Node::confirm_emotion;
      } else {
        say(s, out, "classifier_fallback", {{"emotions", emotion_list(s.language)}});
        s.node = Node::select_emotion;
      }
      return r;
    }
    case Node::confirm_emotion:
      switch (parse_yes_no(event.text, s.language, content_)) {
        case YesNo::yes:
          emotion_confirmed(s, out);
          break;
        case YesNo::no:
          say(s, out, "select_emotion", {{"emotions", emotion_list(s.language)}});
          s.node = Node::select_emotion;
          break;
        case YesNo::unclear:
          say(s, out, "unclear_yes_no");
          break;
      }
      return r;
    case Node::select_emotion:
      say(s, out, "select_emotion", {{"emotions", emotion_list(s.language)}});
      return r;
    case Node::question: {
      const auto yn = parse_yes_no(event.text, s.language, content_);
      if (yn == YesNo::unclear) {
        say(s, out, "unclear_yes_no");
        return r;
      }
      const auto& q = content_.branches.at(*s.detected_emotion).questions.at(s.question_index);
      if (yn == YesNo::yes) s.excluded_protocols.insert(q.exclude_on_yes.begin(), q.exclude_on_yes.end());
      ++s.question_index;
      next_question(s, out);
      return r;
    }
    case Node::ask_exclude_last: {
      const auto yn = parse_yes_no(event.text, s.language, content_);
      if (yn == YesNo::unclear) {
        say(s, out, "unclear_yes_no");
        return r;
      }
      const std::string id = std::to_string(*s.last_protocol);
      if (yn == YesNo::yes) {
        s.excluded_protocols.insert(*s.last_protocol);
        say(s, out, "excluded_ack", {{"id", id}});
      } else {
        say(s, out, "kept_ack", {{"id", id}});
      }
      enter_recommendation(s, out);
      return r;
    }
    case Node::continue_or_end: {
      const auto yn = parse_yes_no(event.text, s.language, content_);
      if (yn == YesNo::yes) {
        s.recommendation.clear();
        s.question_index = 0;
        say(s, out, "ask_feeling_again");
        s.node = Node::greet;
      } else if (yn == YesNo::no) {
        say(s, out, "goodbye");
        s.node = Node::ended;
      } else {
        say(s, out, "unclear_yes_no");
      }
      return r;
    }
    default:
      break;
  }
  throw ProtocolError(std::string(to_string(state.node)), std::string(to_string(event.kind)));
}

}  // namespace sat::engine
