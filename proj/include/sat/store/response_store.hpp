#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sat/store/candidate.hpp"

namespace sat::store {

struct RankingWeights {
  double fluency = 1.0;
  double novelty = 1.0;
  double empathy = 1.0;
  void validate() const;
};

struct RankedResponse {
  ResponseCandidate candidate;
  double fluency_score = 0.0;
  double novelty_score = 0.0;
  double empathy_score = 0.0;
  double combined = 0.0;
};

struct AuditRecord {
  long id = 0;
  Decision decision = Decision::approve;
  std::string reviewer;
  std::string timestamp;  // ISO 8601, UTC
  std::string note;
};

// 1 - max token-Jaccard against the shown texts; 1 for an empty history.
double novelty(std::string_view text, std::span<const std::string> history);

std::string utc_timestamp();

// Human-vetted response pool. Backed by an append-only record log when opened
// on a path; purely in-memory otherwise. Writers serialise on a mutex; readers
// go through an immutable approved index that is swapped atomically.
class ResponseStore {
 public:
  using Clock = std::function<std::string()>;
  static constexpr const char* kSchema = "sat.response-pool";
  static constexpr int kVersion = 1;

  ResponseStore();
  // Replays an existing log or starts a new one.
  static std::unique_ptr<ResponseStore> open(const std::filesystem::path& log_path);

  ResponseStore(const ResponseStore&) = delete;
  ResponseStore& operator=(const ResponseStore&) = delete;

  void set_clock(Clock clock) { clock_ = std::move(clock); }

  // Returns the number of new candidates; duplicates of (text, language,
  // class), inside the batch or already pooled, are collapsed.
  std::size_t ingest(std::span<const ResponseCandidate> batch);
  ResponseCandidate review(long id, Decision decision, const std::string& reviewer,
                           const std::string& note = "");

  // Approved candidates of the class and language, best first. Candidates that
  // exactly repeat shown content (novelty 0) rank after all others whenever
  // the novelty weight is positive. Throws EmptyPoolError when none exist.
  std::vector<RankedResponse> retrieve(SemanticClass base, Language language,
                                       std::span<const std::string> history, std::size_t k,
                                       const RankingWeights& weights = {}) const;
  bool has_approved(SemanticClass base, Language language) const;

  ResponseCandidate get(long id) const;
  std::vector<ResponseCandidate> candidates(std::optional<Status> status = std::nullopt) const;
  std::vector<AuditRecord> audit() const;
  std::size_t size() const;

  // Writes approved candidates as a fresh pool log.
  void export_approved(const std::filesystem::path& out) const;

 private:
  using Key = std::pair<int, Language>;
  using Index = std::map<Key, std::vector<ResponseCandidate>>;

  std::size_t ingest_locked(std::span<const ResponseCandidate> batch, bool persist);
  ResponseCandidate review_locked(const AuditRecord& rec, bool persist);
  void rebuild_index();
  void append(const nlohmann::json& record);

  mutable std::mutex mu_;
  std::map<long, ResponseCandidate> pool_;
  std::map<std::tuple<std::string, Language, int>, long> by_content_;
  std::vector<AuditRecord> audit_;
  long next_id_ = 1;
  std::optional<std::filesystem::path> log_path_;
  Clock clock_;
  std::shared_ptr<const Index> approved_;
};

}  // namespace sat::store
