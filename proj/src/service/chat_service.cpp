#include "sat/service/chat_service.hpp"

#include <httplib.h>

#include <algorithm>
#include <condition_variable>
#include <fstream>
#include <sstream>
#include <thread>

#include "sat/error.hpp"
#include "sat/io.hpp"
#include "sat/log.hpp"
#include "sat/store/response_store.hpp"

namespace sat::service {
using nlohmann::json;
using engine::EngineEvent;

// ---- questionnaire ----

Questionnaire::Questionnaire(json schema, std::optional<std::filesystem::path> store_path)
    : schema_(std::move(schema)), path_(std::move(store_path)) {
  if (!schema_.contains("items") || schema_.at("items").empty()) {
    throw ConfigurationError("questionnaire schema has no items");
  }
  if (path_ && std::filesystem::exists(*path_)) {
    std::ifstream in(*path_);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) memory_.push_back(json::parse(line));
    }
  }
}

json Questionnaire::shipped_schema() {
  return io::read_json(std::filesystem::path(SAT_CONTENT_DIR) / "questionnaire.json");
}

json Questionnaire::validate(const json& submission) const {
  if (!submission.is_object()) throw ValidationError("questionnaire submission must be an object");
  for (const auto& [k, _] : submission.items()) {
    if (k != "answers") throw ValidationError("unexpected field '" + k + "'");
  }
  if (!submission.contains("answers") || !submission.at("answers").is_object()) {
    throw ValidationError("submission needs an answers object");
  }
  const auto& answers = submission.at("answers");
  const int lo = schema_.at("scale").at("min").get<int>();
  const int hi = schema_.at("scale").at("max").get<int>();
  json clean = json::object();
  for (const auto& item : schema_.at("items")) {
    const std::string id = item.at("id").get<std::string>();
    if (!answers.contains(id)) throw ValidationError("missing answer for " + id);
    const auto& v = answers.at(id);
    if (!v.is_number_integer()) throw ValidationError(id + " must be an integer");
    const int x = v.get<int>();
    if (x < lo || x > hi) {
      throw ValidationError(id + " must be between " + std::to_string(lo) + " and " + std::to_string(hi));
    }
    clean[id] = x;
  }
  if (answers.size() != clean.size()) throw ValidationError("unknown questionnaire item");
  return json{{"answers", std::move(clean)}};
}

void Questionnaire::submit(const json& submission) {
  json record = validate(submission);
  std::lock_guard lock(mu_);
  if (path_) {
    if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
    std::ofstream out(*path_, std::ios::app);
    out << record.dump() << '\n';
    out.flush();
    if (!out) throw Error("cannot append questionnaire response");
  }
  memory_.push_back(std::move(record));
}

json Questionnaire::aggregate() const {
  std::lock_guard lock(mu_);
  const int agree = schema_.at("scale").at("agree_at_least").get<int>();
  json items = json::object();
  for (const auto& item : schema_.at("items")) {
    const std::string id = item.at("id").get<std::string>();
    long n = 0, yes = 0;
    for (const auto& r : memory_) {
      const auto& a = r.at("answers");
      if (!a.contains(id)) continue;
      ++n;
      if (a.at(id).get<int>() >= agree) ++yes;
    }
    items[id] = {{"group", item.at("group")},
                 {"responses", n},
                 {"agree_fraction", n ? static_cast<double>(yes) / static_cast<double>(n) : 0.0}};
  }
  return {{"responses", memory_.size()}, {"items", items}};
}

std::vector<json> Questionnaire::responses() const {
  std::lock_guard lock(mu_);
  return memory_;
}

// ---- service ----

struct ChatService::Server {
  httplib::Server http;
  std::thread http_thread;
  std::thread sweeper;
  std::mutex mu;
  std::condition_variable cv;
  bool stopping = false;
  bool background = false;
};

ChatService::ChatService(const engine::ConversationEngine& engine, ServiceConfig config,
                         std::shared_ptr<Questionnaire> questionnaire)
    : engine_(engine),
      config_(std::move(config)),
      questionnaire_(std::move(questionnaire)),
      clock_([] { return std::chrono::steady_clock::now(); }),
      sink_([](const json& rec) { logger()->info("{}", rec.dump()); }) {
  if (!questionnaire_) {
    questionnaire_ = std::make_shared<Questionnaire>(Questionnaire::shipped_schema(), config_.questionnaire_path);
  }
}

ChatService::~ChatService() {
  stop();
  server_.reset();
}

namespace {

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string seg;
  while (std::getline(ss, seg, '/')) {
    if (!seg.empty()) parts.push_back(seg);
  }
  return parts;
}

ApiResponse error(int status, const std::string& message) { return {status, {{"error", message}}}; }

std::string iso_now() { return store::utc_timestamp(); }

}  // namespace

std::shared_ptr<ChatService::Session> ChatService::find(const std::string& id) {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session");
  return it->second;
}

ApiResponse ChatService::create_session(const json& body) {
  const std::string lang = body.is_object() ? body.value("language", std::string("en")) : "en";
  auto started = engine_.start_session(lang);
  auto s = std::make_shared<Session>();
  s->state = std::move(started.state);
  s->last_active = clock_();
  json utterances = json::array();
  for (const auto& u : started.utterances) {
    utterances.push_back(u.to_json());
    s->transcript.push_back({{"speaker", "bot"}, {"text", u.text}});
  }
  json out{{"session", s->state.to_json()}, {"utterances", utterances}};
  {
    std::lock_guard lock(mu_);
    sessions_[s->state.session_id] = s;
  }
  return {201, out};
}

ApiResponse ChatService::session_event(const std::string& id, const EngineEvent& event) {
  auto s = find(id);
  std::unique_lock lock(s->mu);
  if (s->closed) throw NotFoundError("unknown session");
  auto r = engine_.step(s->state, event);
  s->state = std::move(r.state);
  s->last_active = clock_();
  json user{{"speaker", "user"}, {"event", event.to_json()}};
  s->transcript.push_back(std::move(user));
  json utterances = json::array();
  for (const auto& u : r.utterances) {
    utterances.push_back(u.to_json());
    s->transcript.push_back({{"speaker", "bot"}, {"text", u.text}});
  }
  json out{{"session", s->state.to_json()}, {"utterances", utterances}};
  if (s->state.node == engine::Node::ended) {
    s->closed = true;
    lock.unlock();
    purge(id);
  }
  return {200, out};
}

ApiResponse ChatService::get_session(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  if (s->closed) throw NotFoundError("unknown session");
  return {200, {{"session", s->state.to_json()}, {"transcript", s->transcript}}};
}

ApiResponse ChatService::protocols(const std::map<std::string, std::string>& query, const std::string& one) {
  std::optional<Language> lang;
  if (const auto it = query.find("lang"); it != query.end()) {
    lang = parse_language(it->second);
    if (!lang) throw ValidationError("unsupported language '" + it->second + "'");
  }
  auto render = [&](const engine::Protocol& p) {
    json j{{"id", p.id}, {"group", p.group}};
    if (lang) {
      j["title"] = p.title.in(*lang);
      j["body"] = p.body.in(*lang);
    } else {
      j["title"] = {{"en", p.title.en}, {"zh", p.title.zh}};
      j["body"] = {{"en", p.body.en}, {"zh", p.body.zh}};
    }
    return j;
  };
  if (!one.empty()) {
    int id = 0;
    try {
      id = std::stoi(one);
    } catch (const std::exception&) {
      throw NotFoundError("unknown protocol");
    }
    return {200, render(engine_.content().protocol(id))};
  }
  json list = json::array();
  for (const auto& p : engine_.content().protocols) list.push_back(render(p));
  return {200, {{"protocols", list}}};
}

ApiResponse ChatService::route(const ApiRequest& req, std::string& name) {
  const auto parts = split_path(req.path);
  const std::string& m = req.method;
  const json& body = req.body;
  auto field = [&](const char* key) -> const json& {
    if (!body.is_object() || !body.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
    return body.at(key);
  };

  if (parts.size() == 1 && parts[0] == "health" && m == "GET") {
    name = "/health";
    return {200, {{"status", "ok"}}};
  }
  if (!parts.empty() && parts[0] == "sessions") {
    if (parts.size() == 1 && m == "POST") {
      name = "/sessions";
      return create_session(body);
    }
    if (parts.size() == 2) {
      name = "/sessions/:id";
      if (m == "GET") return get_session(parts[1]);
      if (m == "DELETE") {
        if (!purge(parts[1])) throw NotFoundError("unknown session");
        return {204, nullptr};
      }
    }
    if (parts.size() == 3 && m == "POST") {
      const std::string& id = parts[1];
      const std::string& action = parts[2];
      name = "/sessions/:id/" + action;
      if (action == "messages") return session_event(id, EngineEvent::user_text(field("text").get<std::string>()));
      if (action == "emotion") {
        return session_event(id, EngineEvent::emotion_override(emotion_from_string(field("emotion").get<std::string>())));
      }
      if (action == "protocol") {
        const int pid = field("protocol").get<int>();
        const std::string act = body.value("action", std::string("choose"));
        if (act == "choose") return session_event(id, EngineEvent::protocol_chosen(pid));
        if (act == "decline") return session_event(id, EngineEvent::protocol_declined(pid));
        throw ValidationError("action must be choose or decline");
      }
      if (action == "feedback") {
        const std::string f = field("feedback").get<std::string>();
        if (f == "better") return session_event(id, EngineEvent::feedback(engine::Feedback::better));
        if (f == "same_or_worse") return session_event(id, EngineEvent::feedback(engine::Feedback::same_or_worse));
        throw ValidationError("feedback must be better or same_or_worse");
      }
      if (action == "end") return session_event(id, EngineEvent::end_session());
    }
  }
  if (!parts.empty() && parts[0] == "protocols" && m == "GET" && parts.size() <= 2) {
    name = parts.size() == 1 ? "/protocols" : "/protocols/:id";
    return protocols(req.query, parts.size() == 2 ? parts[1] : "");
  }
  if (!parts.empty() && parts[0] == "questionnaire") {
    if (parts.size() == 1 && m == "GET") {
      name = "/questionnaire";
      return {200, questionnaire_->schema()};
    }
    if (parts.size() == 1 && m == "POST") {
      name = "/questionnaire";
      questionnaire_->submit(body);
      return {201, {{"stored", true}}};
    }
    if (parts.size() == 2 && parts[1] == "aggregate" && m == "GET") {
      name = "/questionnaire/aggregate";
      return {200, questionnaire_->aggregate()};
    }
  }
  name = "unmatched";
  return error(404, "no such endpoint");
}

ApiResponse ChatService::handle(const ApiRequest& req) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string name = "unmatched";
  ApiResponse res;
  try {
    res = route(req, name);
  } catch (const NotFoundError& e) {
    res = error(404, e.what());
  } catch (const ProtocolError& e) {
    res = {409, {{"error", e.what()}, {"node", e.node()}, {"event", e.event()}}};
  } catch (const ValidationError& e) {
    res = error(400, e.what());
  } catch (const json::exception& e) {
    res = error(400, e.what());
  } catch (const std::exception& e) {
    logger()->error("request failed: {}", e.what());
    res = error(500, "internal error");
  }
  if (res.body.is_object()) res.body["schema"] = kSchema;
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  log_request(req, name, res.status, ms);
  return res;
}

void ChatService::log_request(const ApiRequest& req, const std::string& route_name, int status, double ms) {
  if (!sink_) return;
  sink_({{"ts", iso_now()}, {"method", req.method}, {"route", route_name}, {"status", status}, {"duration_ms", ms}});
}

bool ChatService::purge(const std::string& session_id) {
  std::shared_ptr<Session> victim;
  {
    std::lock_guard lock(mu_);
    const auto it = sessions_.find(session_id);
    if (it == sessions_.end()) return false;
    victim = std::move(it->second);
    sessions_.erase(it);
  }
  std::lock_guard lock(victim->mu);
  victim->closed = true;
  victim->state = {};
  victim->transcript = json::array();
  return true;
}

std::size_t ChatService::sweep(std::chrono::seconds idle) {
  const auto now = clock_();
  std::vector<std::string> stale;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, s] : sessions_) {
      std::lock_guard slock(s->mu);
      if (now - s->last_active >= idle) stale.push_back(id);
    }
  }
  std::size_t n = 0;
  for (const auto& id : stale) n += purge(id) ? 1 : 0;
  return n;
}

std::size_t ChatService::session_count() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

namespace {

void bind_routes(httplib::Server& http, ChatService& svc) {
  auto handler = [&svc](const httplib::Request& req, httplib::Response& res) {
    ApiRequest r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.query.emplace(k, v);
    ApiResponse out;
    if (!req.body.empty()) {
      try {
        r.body = json::parse(req.body);
      } catch (const json::parse_error&) {
        out = {400, {{"error", "body is not valid JSON"}, {"schema", kSchema}}};
        res.status = out.status;
        res.set_header(kSchemaHeader, kSchema);
        res.set_content(out.body.dump(), "application/json");
        return;
      }
    }
    out = svc.handle(r);
    res.status = out.status;
    res.set_header(kSchemaHeader, kSchema);
    if (!out.body.is_null()) res.set_content(out.body.dump(), "application/json");
  };
  http.Get(R"(/.*)", handler);
  http.Post(R"(/.*)", handler);
  http.Delete(R"(/.*)", handler);
}

}  // namespace

void ChatService::serve() {
  server_ = std::make_unique<Server>();
  bind_routes(server_->http, *this);
  server_->sweeper = std::thread([this] {
    const auto period = std::clamp<std::chrono::seconds>(config_.idle_timeout, std::chrono::seconds(1),
                                                         std::chrono::seconds(60));
    std::unique_lock lock(server_->mu);
    while (!server_->cv.wait_for(lock, period, [this] { return server_->stopping; })) {
      lock.unlock();
      sweep();
      lock.lock();
    }
  });
  const bool ok = server_->http.listen(config_.host, config_.port);
  {
    std::lock_guard lock(server_->mu);
    server_->stopping = true;
  }
  server_->cv.notify_all();
  server_->sweeper.join();
  if (!ok) throw Error("cannot listen on " + config_.host + ":" + std::to_string(config_.port));
}

int ChatService::start_background() {
  server_ = std::make_unique<Server>();
  server_->background = true;
  bind_routes(server_->http, *this);
  const int port = server_->http.bind_to_any_port(config_.host);
  if (port < 0) throw Error("cannot bind " + config_.host);
  server_->http_thread = std::thread([this] { server_->http.listen_after_bind(); });
  server_->http.wait_until_ready();
  return port;
}

// From another thread while serve() blocks, this only asks the server to
// return; serve() joins its own helpers.
void ChatService::stop() {
  if (!server_) return;
  {
    std::lock_guard lock(server_->mu);
    server_->stopping = true;
  }
  server_->cv.notify_all();
  server_->http.stop();
  if (server_->background) {
    if (server_->http_thread.joinable()) server_->http_thread.join();
    server_.reset();
  }
}

}  // namespace sat::service
