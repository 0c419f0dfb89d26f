#include "sat/store/response_store.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>

#include "sat/error.hpp"
#include "sat/text.hpp"

namespace sat::store {
using nlohmann::json;

void RankingWeights::validate() const {
  for (double w : {fluency, novelty, empathy}) {
    if (!std::isfinite(w) || w < 0.0) throw ValidationError("ranking weights must be finite and >= 0");
  }
}

double novelty(std::string_view text, std::span<const std::string> history) {
  double best = 0.0;
  for (const auto& h : history) best = std::max(best, text::token_jaccard(text, h));
  return 1.0 - best;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ResponseStore::ResponseStore() : clock_(utc_timestamp), approved_(std::make_shared<Index>()) {}

std::unique_ptr<ResponseStore> ResponseStore::open(const std::filesystem::path& log_path) {
  auto store = std::make_unique<ResponseStore>();
  if (std::filesystem::exists(log_path)) {
    std::ifstream in(log_path);
    if (!in) throw NotFoundError("cannot open " + log_path.string());
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw ParseError(lineno, e.what());
      }
      try {
        if (!header) {
          if (j.value("schema", "") != kSchema || j.value("version", 0) != kVersion) {
            throw ValidationError("missing or unsupported pool header");
          }
          header = true;
          continue;
        }
        const std::string op = j.at("op").get<std::string>();
        if (op == "ingest") {
          auto c = ResponseCandidate::from_json(j.at("candidate"));
          if (c.id != store->next_id_) throw ValidationError("non-sequential candidate id");
          store->ingest_locked(std::span<const ResponseCandidate>(&c, 1), false);
        } else if (op == "review") {
          AuditRecord r{j.at("id").get<long>(), decision_from_string(j.at("decision").get<std::string>()),
                        j.at("reviewer").get<std::string>(), j.at("timestamp").get<std::string>(),
                        j.value("note", std::string())};
          store->review_locked(r, false);
        } else {
          throw ValidationError("unknown op '" + op + "'");
        }
      } catch (const ParseError&) {
        throw;
      } catch (const Error& e) {
        throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
      } catch (const json::exception& e) {
        throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    if (!header) throw ValidationError(log_path.string() + ": empty pool log");
  } else {
    if (log_path.has_parent_path()) std::filesystem::create_directories(log_path.parent_path());
    std::ofstream out(log_path);
    if (!out) throw Error("cannot create " + log_path.string());
    out << json{{"schema", kSchema}, {"version", kVersion}}.dump() << '\n';
  }
  store->log_path_ = log_path;
  store->rebuild_index();
  return store;
}

void ResponseStore::append(const json& record) {
  if (!log_path_) return;
  std::ofstream out(*log_path_, std::ios::app);
  out << record.dump() << '\n';
  out.flush();
  if (!out) throw Error("cannot append to " + log_path_->string());
}

std::size_t ResponseStore::ingest(std::span<const ResponseCandidate> batch) {
  std::lock_guard lock(mu_);
  for (const auto& c : batch) {
    if (c.status != Status::pending) {
      throw ValidationError("ingest accepts pending candidates only");
    }
    if (c.utterance.text.empty()) throw ValidationError("candidate text is empty");
    SemanticClass::checked(c.utterance.base.class_id);
  }
  return ingest_locked(batch, true);
}

std::size_t ResponseStore::ingest_locked(std::span<const ResponseCandidate> batch, bool persist) {
  std::size_t added = 0;
  for (const auto& in : batch) {
    auto key = std::make_tuple(in.utterance.text, in.utterance.language, in.utterance.base.class_id);
    if (by_content_.count(key)) continue;
    ResponseCandidate c = in;
    c.id = next_id_++;
    c.status = Status::pending;
    by_content_.emplace(std::move(key), c.id);
    if (persist) append({{"op", "ingest"}, {"candidate", c.to_json()}});
    pool_.emplace(c.id, std::move(c));
    ++added;
  }
  return added;
}

ResponseCandidate ResponseStore::review(long id, Decision decision, const std::string& reviewer,
                                        const std::string& note) {
  if (reviewer.empty()) throw ValidationError("review requires a reviewer");
  std::lock_guard lock(mu_);
  auto c = review_locked({id, decision, reviewer, clock_(), note}, true);
  rebuild_index();
  return c;
}

ResponseCandidate ResponseStore::review_locked(const AuditRecord& rec, bool persist) {
  auto it = pool_.find(rec.id);
  if (it == pool_.end()) throw NotFoundError("no candidate with id " + std::to_string(rec.id));
  ResponseCandidate& c = it->second;
  if (c.status != Status::pending) {
    throw ValidationError("candidate " + std::to_string(rec.id) + " already " +
                          std::string(to_string(c.status)));
  }
  if (persist) {
    append({{"op", "review"}, {"id", rec.id}, {"decision", std::string(to_string(rec.decision))},
            {"reviewer", rec.reviewer}, {"timestamp", rec.timestamp}, {"note", rec.note}});
  }
  c.status = rec.decision == Decision::approve ? Status::approved : Status::rejected;
  c.reviewer_note = rec.note;
  audit_.push_back(rec);
  return c;
}

void ResponseStore::rebuild_index() {
  auto idx = std::make_shared<Index>();
  for (const auto& [id, c] : pool_) {
    if (c.status == Status::approved) {
      (*idx)[{c.utterance.base.class_id, c.utterance.language}].push_back(c);
    }
  }
  std::atomic_store(&approved_, std::shared_ptr<const Index>(std::move(idx)));
}

std::vector<RankedResponse> ResponseStore::retrieve(SemanticClass base, Language language,
                                                    std::span<const std::string> history,
                                                    std::size_t k,
                                                    const RankingWeights& weights) const {
  if (k < 1) throw ValidationError("k must be >= 1");
  weights.validate();
  const auto idx = std::atomic_load(&approved_);
  const auto it = idx->find({base.class_id, language});
  if (it == idx->end() || it->second.empty()) {
    throw EmptyPoolError("no approved response for class " + std::to_string(base.class_id) +
                         " in " + std::string(to_string(language)));
  }
  std::vector<RankedResponse> ranked;
  for (const auto& c : it->second) {
    RankedResponse r;
    r.candidate = c;
    r.fluency_score = c.fluency_score;
    r.empathy_score = c.empathy_score;
    r.novelty_score = novelty(c.utterance.text, history);
    r.combined = weights.fluency * r.fluency_score + weights.novelty * r.novelty_score +
                 weights.empathy * r.empathy_score;
    ranked.push_back(std::move(r));
  }
  const bool demote = weights.novelty > 0.0;
  std::sort(ranked.begin(), ranked.end(), [demote](const RankedResponse& a, const RankedResponse& b) {
    if (demote) {
      const bool ra = a.novelty_score == 0.0, rb = b.novelty_score == 0.0;
      if (ra != rb) return rb;
    }
    if (a.combined != b.combined) return a.combined > b.combined;
    return a.candidate.id < b.candidate.id;
  });
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

bool ResponseStore::has_approved(SemanticClass base, Language language) const {
  const auto idx = std::atomic_load(&approved_);
  const auto it = idx->find({base.class_id, language});
  return it != idx->end() && !it->second.empty();
}

ResponseCandidate ResponseStore::get(long id) const {
  std::lock_guard lock(mu_);
  const auto it = pool_.find(id);
  if (it == pool_.end()) throw NotFoundError("no candidate with id " + std::to_string(id));
  return it->second;
}

std::vector<ResponseCandidate> ResponseStore::candidates(std::optional<Status> status) const {
  std::lock_guard lock(mu_);
  std::vector<ResponseCandidate> out;
  for (const auto& [_, c] : pool_) {
    if (!status || c.status == *status) out.push_back(c);
  }
  return out;
}

std::vector<AuditRecord> ResponseStore::audit() const {
  std::lock_guard lock(mu_);
  return audit_;
}

std::size_t ResponseStore::size() const {
  std::lock_guard lock(mu_);
  return pool_.size();
}

void ResponseStore::export_approved(const std::filesystem::path& out) const {
  std::lock_guard lock(mu_);
  std::map<long, const AuditRecord*> approval;
  for (const auto& r : audit_) {
    if (r.decision == Decision::approve) approval[r.id] = &r;
  }
  std::string body = json{{"schema", kSchema}, {"version", kVersion}}.dump() + "\n";
  long next = 1;
  for (const auto& [id, c] : pool_) {
    if (c.status != Status::approved) continue;
    ResponseCandidate copy = c;
    copy.id = next++;
    copy.status = Status::pending;
    copy.reviewer_note.clear();
    const AuditRecord& r = *approval.at(id);
    body += json{{"op", "ingest"}, {"candidate", copy.to_json()}}.dump() + "\n";
    body += json{{"op", "review"}, {"id", copy.id}, {"decision", "approve"},
                 {"reviewer", r.reviewer}, {"timestamp", r.timestamp}, {"note", r.note}}
                .dump() +
            "\n";
  }
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  std::ofstream f(out, std::ios::trunc);
  f << body;
  if (!f) throw Error("cannot write " + out.string());
}

}  // namespace sat::store
