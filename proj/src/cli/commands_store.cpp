#include <pthread.h>

#include <csignal>
#include <thread>
#include <fstream>

#include "common.hpp"
#include "sat/emotion/emotion.hpp"
#include "sat/engine/engine.hpp"
#include "sat/log.hpp"
#include "sat/service/chat_service.hpp"
#include "sat/store/response_store.hpp"

namespace sat::cli {
namespace {

std::vector<store::ResponseCandidate> read_candidates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open " + path.string());
  std::vector<store::ResponseCandidate> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(store::ResponseCandidate::from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(n, e.what());
    } catch (const ValidationError& e) {
      throw ParseError(n, e.what());
    }
  }
  return out;
}

ordered_json run_store_ingest(CommandContext& ctx) {
  auto pool = store::ResponseStore::open(ctx.opts.pool);
  const auto batch = read_candidates(ctx.opts.path);
  const auto added = pool->ingest(batch);
  return {{"read", batch.size()}, {"added", added}, {"pool_size", pool->size()}};
}

ordered_json run_store_review(CommandContext& ctx) {
  auto pool = store::ResponseStore::open(ctx.opts.pool);
  const auto c = pool->review(ctx.opts.id, store::decision_from_string(ctx.opts.decision), ctx.opts.reviewer,
                              ctx.opts.note);
  return {{"candidate", c.to_json()}};
}

ordered_json run_store_export(CommandContext& ctx) {
  if (!ctx.opts.approved) throw UsageError("store export only writes approved candidates; pass --approved");
  const auto pool = store::ResponseStore::open(ctx.opts.pool);
  const std::filesystem::path out = need(ctx.opts.out, "--out");
  pool->export_approved(out);
  return {{"exported", pool->candidates(store::Status::approved).size()}, {"out", out.string()}};
}

ordered_json run_store_retrieve(CommandContext& ctx) {
  const auto pool = store::ResponseStore::open(ctx.opts.pool);
  if (ctx.opts.k < 1) throw UsageError("--k must be at least 1");
  const auto ranked = pool->retrieve(SemanticClass::checked(ctx.opts.base), language_from_string(ctx.opts.lang), {},
                                     static_cast<std::size_t>(ctx.opts.k));
  ordered_json list = ordered_json::array();
  for (const auto& r : ranked) {
    list.push_back({{"id", r.candidate.id}, {"text", r.candidate.utterance.text},
                    {"fluency", r.fluency_score}, {"novelty", r.novelty_score},
                    {"empathy", r.empathy_score}, {"combined", r.combined}});
  }
  return {{"results", list}};
}

ordered_json run_serve(CommandContext& ctx) {
  const auto& cfg = ctx.config;
  const auto content_dir = optional_config_path(ctx, "content");
  auto content = content_dir.empty() ? engine::ContentBundle::shipped() : engine::ContentBundle::load(content_dir);

  std::unique_ptr<store::ResponseStore> pool;
  if (const auto p = optional_config_path(ctx, "pool"); !p.empty()) pool = store::ResponseStore::open(p);
  std::unique_ptr<emotion::ClassifierDetector> detector;
  if (const auto m = optional_config_path(ctx, "emotion_model"); !m.empty()) {
    detector = std::make_unique<emotion::ClassifierDetector>(classify::TextClassifier::load(m));
  } else {
    logger()->warn("no emotion model configured; users will pick their emotion directly");
  }
  engine::EngineConfig ec;
  if (cfg.contains("ranking")) {
    const auto& r = cfg.at("ranking");
    ec.ranking.fluency = r.value("fluency", ec.ranking.fluency);
    ec.ranking.novelty = r.value("novelty", ec.ranking.novelty);
    ec.ranking.empathy = r.value("empathy", ec.ranking.empathy);
    ec.ranking.validate();
  }
  engine::ConversationEngine engine(std::move(content), detector.get(), pool.get(), ec);

  service::ServiceConfig sc;
  sc.host = cfg.value("host", sc.host);
  sc.port = cfg.value("port", sc.port);
  sc.idle_timeout = std::chrono::seconds(static_cast<long>(cfg.value("idle_timeout_minutes", 60.0) * 60));
  if (const auto q = optional_config_path(ctx, "questionnaire"); !q.empty()) sc.questionnaire_path = q;
  // SIGINT/SIGTERM are taken synchronously by a waiter thread that stops
  // the server; every other thread inherits the blocked mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  service::ChatService svc(engine, sc);
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    svc.stop();
  });
  // The access log is the point of running a server; show it.
  logger()->set_level(spdlog::level::info);
  logger()->info("listening on {}:{}", sc.host, sc.port);
  try {
    svc.serve();
  } catch (...) {
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    throw;
  }
  waiter.join();
  return {{"stopped", true}};
}

}  // namespace

void register_store_commands(std::vector<CommandSpec>& out) {
  using O = OptionSet;
  out.push_back({"store", "ingest", "Add pending candidates to the review queue", O::path | O::pool, false,
                 {"store.ingest"}, run_store_ingest});
  out.push_back({"store", "review", "Approve or reject one pending candidate",
                 O::pool | O::id | O::decision | O::reviewer | O::note, false, {"store.review"}, run_store_review});
  out.push_back({"store", "export", "Write the approved candidates as a fresh pool", O::pool | O::approved, false,
                 {}, run_store_export});
  out.push_back({"store", "retrieve", "Ranked approved responses for a class", O::pool | O::base | O::lang | O::k,
                 false, {"store.retrieve"}, run_store_retrieve});
  out.push_back({"serve", "", "Run the chat HTTP service", O::none, false,
                 {"engine.start_session", "engine.step", "engine.recommend", "engine.post_protocol_branch",
                  "service.http_api", "service.purge", "service.questionnaire"},
                 run_serve});
}

}  // namespace sat::cli
