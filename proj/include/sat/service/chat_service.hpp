#pragma once

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sat/engine/engine.hpp"

namespace sat::service {

inline constexpr const char* kSchemaHeader = "X-SAT-Schema";
inline constexpr const char* kSchema = "sat.chat/1";

// Likert questionnaire. Responses carry answers only, so nothing links them
// to a session; the file is the service's single durable artifact.
class Questionnaire {
 public:
  Questionnaire(nlohmann::json schema, std::optional<std::filesystem::path> store_path);
  static nlohmann::json shipped_schema();

  const nlohmann::json& schema() const { return schema_; }
  // Requires exactly the schema's items, each an integer in [min, max].
  nlohmann::json validate(const nlohmann::json& submission) const;
  void submit(const nlohmann::json& submission);
  // Per item: responses and the fraction with value >= agree_at_least.
  nlohmann::json aggregate() const;
  std::vector<nlohmann::json> responses() const;

 private:
  nlohmann::json schema_;
  std::optional<std::filesystem::path> path_;
  mutable std::mutex mu_;
  std::vector<nlohmann::json> memory_;
};

struct ServiceConfig {
  std::chrono::seconds idle_timeout{std::chrono::minutes(60)};
  std::optional<std::filesystem::path> questionnaire_path;
  std::string host = "127.0.0.1";
  int port = 8080;
};

struct ApiRequest {
  std::string method;
  std::string path;
  nlohmann::json body;  // null when absent
  std::map<std::string, std::string> query;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

class ChatService {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;
  using LogSink = std::function<void(const nlohmann::json&)>;

  ChatService(const engine::ConversationEngine& engine, ServiceConfig config,
              std::shared_ptr<Questionnaire> questionnaire = nullptr);
  ~ChatService();

  ChatService(const ChatService&) = delete;
  ChatService& operator=(const ChatService&) = delete;

  void set_clock(Clock clock) { clock_ = std::move(clock); }
  // Request log records: ts, method, route, status, duration_ms. Nothing else.
  void set_log_sink(LogSink sink) { sink_ = std::move(sink); }

  ApiResponse handle(const ApiRequest& request);

  // Idempotent; returns whether a session was removed.
  bool purge(const std::string& session_id);
  // Removes sessions idle for at least `idle`; returns how many.
  std::size_t sweep(std::chrono::seconds idle);
  std::size_t sweep() { return sweep(config_.idle_timeout); }
  std::size_t session_count() const;

  // Blocking HTTP server; the idle sweep runs alongside it.
  void serve();
  // Binds to an ephemeral port and serves on a background thread; returns the port.
  int start_background();
  void stop();

 private:
  struct Session {
    std::mutex mu;
    engine::ConversationState state;
    nlohmann::json transcript = nlohmann::json::array();
    std::chrono::steady_clock::time_point last_active;
    bool closed = false;
  };

  ApiResponse route(const ApiRequest& req, std::string& route_name);
  ApiResponse create_session(const nlohmann::json& body);
  ApiResponse session_event(const std::string& id, const engine::EngineEvent& event);
  ApiResponse get_session(const std::string& id);
  ApiResponse protocols(const std::map<std::string, std::string>& query, const std::string& one);
  std::shared_ptr<Session> find(const std::string& id);
  void log_request(const ApiRequest& req, const std::string& route_name, int status, double ms);

  const engine::ConversationEngine& engine_;
  ServiceConfig config_;
  std::shared_ptr<Questionnaire> questionnaire_;
  Clock clock_;
  LogSink sink_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;

  struct Server;
  std::unique_ptr<Server> server_;
};

}  // namespace sat::service
