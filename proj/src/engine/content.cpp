#include "sat/engine/content.hpp"

#include <algorithm>
#include <set>

#include "sat/error.hpp"
#include "sat/hash.hpp"
#include "sat/io.hpp"

namespace sat::engine {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Bilingual bilingual(const json& j) { return {j.at("en").get<std::string>(), j.at("zh").get<std::string>()}; }

std::size_t lang_index(Language l) { return l == Language::EN ? 0 : 1; }

}  // namespace

void verify_manifest(const fs::path& dir) {
  const auto manifest = io::read_json(dir / "manifest.json");
  for (const auto& [name, digest] : manifest.at("sha256").items()) {
    const auto path = dir / name;
    if (!fs::exists(path)) throw ValidationError("content file missing: " + name);
    if (sha256_file(path.string()) != digest.get<std::string>()) {
      throw ValidationError("content file " + name + " does not match its pinned hash");
    }
  }
}

ContentBundle ContentBundle::load(const fs::path& dir, bool verify) {
  if (verify) verify_manifest(dir);
  ContentBundle c;
  const auto protocols = io::read_json(dir / "protocols.json");
  for (const auto& g : protocols.at("groups")) {
    c.groups[g.at("id").get<int>()] = g.at("protocols").get<std::vector<int>>();
  }
  for (const auto& p : protocols.at("protocols")) {
    c.protocols.push_back({p.at("id").get<int>(), p.at("group").get<int>(), bilingual(p.at("title")),
                           bilingual(p.at("body"))});
  }
  const auto branches = io::read_json(dir / "branches.json");
  c.fallback_group = branches.at("fallback_group").get<int>();
  for (const auto& [name, b] : branches.at("branches").items()) {
    Branch br;
    br.protocols = b.at("protocols").get<std::vector<int>>();
    for (const auto& q : b.at("questions")) {
      br.questions.push_back({q.at("id").get<std::string>(), bilingual(q.at("text")),
                              q.at("exclude_on_yes").get<std::vector<int>>()});
    }
    c.branches[emotion_from_string(name)] = std::move(br);
  }
  for (const auto& [name, cls] : branches.at("acknowledgement").items()) {
    c.acknowledgement[emotion_from_string(name)] = cls.get<int>();
  }
  for (const auto& [name, cell] : branches.at("post_protocol").items()) {
    c.cells[emotion_from_string(name)] = {cell.at("better").get<int>(),
                                          cell.at("same_or_worse").get<int>()};
  }
  const auto script = io::read_json(dir / "script.json");
  for (const auto& [key, u] : script.at("utterances").items()) c.script[key] = bilingual(u);
  for (auto e : kEmotionOrder) {
    const std::string name(to_string(e));
    c.emotion_names[e] = {script.at("emotion_names").at("en").at(name).get<std::string>(),
                          script.at("emotion_names").at("zh").at(name).get<std::string>()};
  }
  for (auto l : {Language::EN, Language::ZH}) {
    const auto& yn = script.at("yes_no").at(std::string(to_string(l)));
    c.yes_words[lang_index(l)] = yn.at("yes").get<std::vector<std::string>>();
    c.no_words[lang_index(l)] = yn.at("no").get<std::vector<std::string>>();
  }
  for (const auto& b : script.at("base_utterances")) {
    c.base_utterances.push_back({b.at("class_id").get<int>(),
                                 emotion_from_string(b.at("emotion").get<std::string>()),
                                 {b.at("en").get<std::string>(), b.at("zh").get<std::string>()}});
  }
  c.validate();
  return c;
}

fs::path ContentBundle::shipped_dir() { return fs::path(SAT_CONTENT_DIR); }

ContentBundle ContentBundle::shipped() { return load(shipped_dir(), true); }

void ContentBundle::validate() const {
  std::set<int> ids;
  for (const auto& p : protocols) {
    if (p.id < 1 || p.id > 20 || !ids.insert(p.id).second) {
      throw ValidationError("protocol ids must be unique and in 1..20");
    }
    if (p.title.en.empty() || p.title.zh.empty() || p.body.en.empty() || p.body.zh.empty()) {
      throw ValidationError("protocol " + std::to_string(p.id) + " lacks a language variant");
    }
  }
  if (ids.size() != 20) throw ValidationError("expected 20 protocols");
  auto check_ids = [&](const std::vector<int>& v, const std::string& where) {
    for (int id : v) {
      if (!ids.count(id)) throw ValidationError(where + " references unknown protocol " + std::to_string(id));
    }
  };
  for (const auto& [g, ps] : groups) check_ids(ps, "group " + std::to_string(g));
  if (!groups.count(fallback_group)) throw ValidationError("fallback group is not defined");
  for (auto e : kEmotionOrder) {
    if (!branches.count(e)) throw ValidationError("no branch for " + std::string(to_string(e)));
    check_ids(branches.at(e).protocols, "branch");
    for (const auto& q : branches.at(e).questions) check_ids(q.exclude_on_yes, "question " + q.id);
    if (!acknowledgement.count(e) || !cells.count(e)) {
      throw ValidationError("missing response classes for " + std::string(to_string(e)));
    }
  }
  if (base_utterances.size() != static_cast<std::size_t>(kNumSemanticClasses)) {
    throw ValidationError("expected 45 base utterances");
  }
  for (std::size_t i = 0; i < base_utterances.size(); ++i) {
    const auto& b = base_utterances[i];
    if (b.class_id != static_cast<int>(i) || b.text.en.empty() || b.text.zh.empty()) {
      throw ValidationError("base utterance " + std::to_string(i) + " is malformed");
    }
  }
  for (const auto& [k, v] : script) {
    if (v.en.empty() || v.zh.empty()) throw ValidationError("script line " + k + " lacks a language");
  }
  for (const char* key : {"greet", "ask_feeling_again", "confirm_emotion", "select_emotion",
                          "classifier_fallback", "unclear_yes_no", "recommend_intro",
                          "no_recommendation", "declined_ack", "practice_intro", "ask_exclude_last",
                          "excluded_ack", "kept_ack", "continue_or_end", "goodbye"}) {
    if (!script.count(key)) throw ValidationError(std::string("script line missing: ") + key);
  }
}

const Protocol& ContentBundle::protocol(int id) const {
  const auto it = std::find_if(protocols.begin(), protocols.end(), [&](const Protocol& p) { return p.id == id; });
  if (it == protocols.end()) throw NotFoundError("no protocol " + std::to_string(id));
  return *it;
}

const std::string& ContentBundle::line(const std::string& key, Language lang) const {
  const auto it = script.find(key);
  if (it == script.end()) throw NotFoundError("no script line " + key);
  return it->second.in(lang);
}

const BaseUtteranceEntry& ContentBundle::base(int class_id) const {
  if (class_id < 0 || class_id >= static_cast<int>(base_utterances.size())) {
    throw NotFoundError("no base utterance " + std::to_string(class_id));
  }
  return base_utterances[static_cast<std::size_t>(class_id)];
}

int ContentBundle::cell(EmotionLabel e, Feedback f) const {
  return cells.at(e)[f == Feedback::better ? 0 : 1];
}

}  // namespace sat::engine
