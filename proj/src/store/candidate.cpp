#include "sat/store/candidate.hpp"

#include "sat/error.hpp"

namespace sat::store {

std::string_view to_string(Source s) {
  switch (s) {
    case Source::translated_v1:
      return "translated_v1";
    case Source::translated_v2:
      return "translated_v2";
    case Source::rl_generated:
      return "rl_generated";
    case Source::sl_generated:
      return "sl_generated";
  }
  return "?";
}

std::string_view to_string(Status s) {
  switch (s) {
    case Status::pending:
      return "pending";
    case Status::approved:
      return "approved";
    case Status::rejected:
      return "rejected";
  }
  return "?";
}

std::string_view to_string(Decision d) { return d == Decision::approve ? "approve" : "reject"; }

Source source_from_string(std::string_view s) {
  for (auto v : {Source::translated_v1, Source::translated_v2, Source::rl_generated,
                 Source::sl_generated}) {
    if (to_string(v) == s) return v;
  }
  throw ValidationError("unknown source '" + std::string(s) + "'");
}

Status status_from_string(std::string_view s) {
  for (auto v : {Status::pending, Status::approved, Status::rejected}) {
    if (to_string(v) == s) return v;
  }
  throw ValidationError("unknown status '" + std::string(s) + "'");
}

Decision decision_from_string(std::string_view s) {
  if (s == "approve") return Decision::approve;
  if (s == "reject") return Decision::reject;
  throw ValidationError("decision must be approve or reject, got '" + std::string(s) + "'");
}

ResponseCandidate ResponseCandidate::pending(Utterance u,
                                             std::optional<rewriting::RewardBreakdown> reward) {
  ResponseCandidate c;
  c.utterance = std::move(u);
  if (reward) {
    c.fluency_score = reward->r_f;
    c.empathy_score = reward->r_e;
  }
  c.reward = std::move(reward);
  return c;
}

nlohmann::json ResponseCandidate::to_json() const {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["text"] = utterance.text;
  j["language"] = std::string(sat::to_string(utterance.language));
  j["base"] = utterance.base.class_id;
  j["source"] = std::string(to_string(utterance.source));
  j["reward"] = reward ? reward->to_json() : nlohmann::json(nullptr);
  j["fluency_score"] = fluency_score;
  j["empathy_score"] = empathy_score;
  j["status"] = std::string(to_string(status));
  j["reviewer_note"] = reviewer_note;
  return j;
}

ResponseCandidate ResponseCandidate::from_json(const nlohmann::json& j) {
  ResponseCandidate c;
  c.id = j.value("id", 0L);
  c.utterance.text = j.at("text").get<std::string>();
  if (c.utterance.text.empty()) throw ValidationError("candidate text is empty");
  c.utterance.language = language_from_string(j.at("language").get<std::string>());
  c.utterance.base = SemanticClass::checked(j.at("base").get<int>());
  c.utterance.source = source_from_string(j.at("source").get<std::string>());
  if (j.contains("reward") && !j.at("reward").is_null()) {
    c.reward = rewriting::RewardBreakdown::from_json(j.at("reward"));
    c.fluency_score = c.reward->r_f;
    c.empathy_score = c.reward->r_e;
  }
  c.fluency_score = j.value("fluency_score", c.fluency_score);
  c.empathy_score = j.value("empathy_score", c.empathy_score);
  c.status = status_from_string(j.value("status", std::string("pending")));
  c.reviewer_note = j.value("reviewer_note", std::string());
  return c;
}

}  // namespace sat::store
