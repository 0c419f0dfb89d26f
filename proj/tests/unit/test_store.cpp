#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <random>
#include <thread>

#include "sat/error.hpp"
#include "sat/store/response_store.hpp"

using namespace sat;
using namespace sat::store;

namespace {

ResponseCandidate cand(const std::string& text, int base, double fluency = 0.0, double empathy = 0.0,
                       Language lang = Language::EN) {
  auto c = ResponseCandidate::pending({text, lang, SemanticClass::checked(base), Source::rl_generated}, std::nullopt);
  c.fluency_score = fluency;
  c.empathy_score = empathy;
  return c;
}

std::filesystem::path temp_path(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("sat_store_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::vector<long> ids(const std::vector<RankedResponse>& r) {
  std::vector<long> out;
  for (const auto& x : r) out.push_back(x.candidate.id);
  return out;
}

}  // namespace

TEST(Novelty, Bounds) {
  EXPECT_DOUBLE_EQ(novelty("anything at all", {}), 1.0);
  const std::vector<std::string> h = {"you are not alone", "other words"};
  EXPECT_DOUBLE_EQ(novelty("you are not alone", h), 0.0);
  EXPECT_DOUBLE_EQ(novelty("i hear you", h), 1.0 - 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(novelty("completely fresh", h), 1.0);
}

TEST(Ingest, CountsAndDeduplication) {
  ResponseStore s;
  std::vector<ResponseCandidate> batch;
  for (int i = 0; i < 135; ++i) batch.push_back(cand("text number " + std::to_string(i), i % 45));
  EXPECT_EQ(s.ingest(batch), 135u);
  EXPECT_EQ(s.ingest(batch), 0u);
  std::vector<ResponseCandidate> dup = {cand("a", 1), cand("b", 1), cand("a", 1), cand("c", 1), cand("b", 1)};
  EXPECT_EQ(s.ingest(dup), dup.size() - 2);
  // Same text under another language or class is distinct.
  std::vector<ResponseCandidate> other = {cand("a", 2), cand("a", 1, 0, 0, Language::ZH)};
  EXPECT_EQ(s.ingest(other), 2u);
  EXPECT_EQ(s.size(), 140u);
}

TEST(Ingest, RejectsNonPendingAtomically) {
  ResponseStore s;
  auto bad = cand("x", 1);
  bad.status = Status::approved;
  std::vector<ResponseCandidate> batch = {cand("y", 1), bad};
  EXPECT_THROW(s.ingest(batch), ValidationError);
  EXPECT_EQ(s.size(), 0u);
}

TEST(Review, TransitionsAreIrreversible) {
  ResponseStore s;
  s.set_clock([] { return std::string("2026-01-01T00:00:00Z"); });
  std::vector<ResponseCandidate> batch = {cand("one", 3), cand("two", 3)};
  s.ingest(batch);
  EXPECT_THROW(s.retrieve(SemanticClass::checked(3), Language::EN, {}, 1), EmptyPoolError);
  EXPECT_FALSE(s.has_approved(SemanticClass::checked(3), Language::EN));
  const auto a = s.review(1, Decision::approve, "rev", "ok");
  EXPECT_EQ(a.status, Status::approved);
  EXPECT_TRUE(s.has_approved(SemanticClass::checked(3), Language::EN));
  EXPECT_EQ(s.retrieve(SemanticClass::checked(3), Language::EN, {}, 5).size(), 1u);
  s.review(2, Decision::reject, "rev");
  EXPECT_THROW(s.review(2, Decision::approve, "rev"), ValidationError);
  EXPECT_THROW(s.review(1, Decision::reject, "rev"), ValidationError);
  EXPECT_THROW(s.review(99, Decision::approve, "rev"), NotFoundError);
  EXPECT_THROW(s.review(1, Decision::approve, ""), ValidationError);
  const auto audit = s.audit();
  ASSERT_EQ(audit.size(), 2u);
  EXPECT_EQ(audit[0].reviewer, "rev");
  EXPECT_EQ(audit[0].timestamp, "2026-01-01T00:00:00Z");
  EXPECT_EQ(audit[1].decision, Decision::reject);
  EXPECT_THROW(s.retrieve(SemanticClass::checked(3), Language::EN, {}, 0), ValidationError);
  EXPECT_THROW(s.retrieve(SemanticClass::checked(3), Language::ZH, {}, 1), EmptyPoolError);
}

TEST(Retrieve, OrderingMatchesHandComputedSums) {
  ResponseStore s;
  std::vector<ResponseCandidate> batch = {
      cand("you are not alone", 3, 0.5, 1.0),       cand("we can work through this", 3, 0.8, 0.4),
      cand("i hear you", 3, 0.3, 1.5),              cand("that sounds hard", 3, 0.9, 0.2),
      cand("you are not alone here", 3, 0.5, 1.0),  cand("wrong class", 4, 9.0, 9.0)};
  s.ingest(batch);
  for (long id = 1; id <= 6; ++id) s.review(id, Decision::approve, "r");
  const auto base = SemanticClass::checked(3);

  // Empty history: sums 2.5, 2.2, 2.8, 2.1, 2.5; the 2.5 tie goes to the lower id.
  const auto r0 = s.retrieve(base, Language::EN, {}, 10);
  EXPECT_EQ(ids(r0), (std::vector<long>{3, 1, 5, 2, 4}));
  for (const auto& r : r0) EXPECT_DOUBLE_EQ(r.novelty_score, 1.0);
  EXPECT_DOUBLE_EQ(r0[0].combined, 0.3 + 1.0 + 1.5);

  // After showing candidate 1: novelty 0, 1, 5/6, 1, 0.2 -> 1.5*, 2.2, 2.633, 2.1, 1.7.
  const std::vector<std::string> h = {"you are not alone"};
  const auto r1 = s.retrieve(base, Language::EN, h, 10);
  EXPECT_EQ(ids(r1), (std::vector<long>{3, 2, 4, 5, 1}));
  EXPECT_NEAR(r1[0].combined, 0.3 + 5.0 / 6.0 + 1.5, 1e-12);
  EXPECT_NEAR(r1[3].novelty_score, 0.2, 1e-12);
  for (const auto& r : r1) {
    EXPECT_NEAR(r.combined, r.fluency_score + r.novelty_score + r.empathy_score, 1e-12);
  }

  // k truncates; weights rescale.
  EXPECT_EQ(s.retrieve(base, Language::EN, h, 2).size(), 2u);
  const auto w = s.retrieve(base, Language::EN, h, 10, {2.0, 2.0, 2.0});
  EXPECT_EQ(ids(w), ids(r1));
  // Deterministic.
  EXPECT_EQ(ids(s.retrieve(base, Language::EN, h, 10)), ids(r1));
}

TEST(Retrieve, ShownTopIsNotRepeated) {
  ResponseStore s;
  std::vector<ResponseCandidate> batch = {cand("first choice", 0, 5.0, 5.0), cand("second choice", 0, 0.0, 0.0)};
  s.ingest(batch);
  s.review(1, Decision::approve, "r");
  s.review(2, Decision::approve, "r");
  std::vector<std::string> history;
  const auto t1 = s.retrieve(SemanticClass::checked(0), Language::EN, history, 1)[0];
  history.push_back(t1.candidate.utterance.text);
  const auto t2 = s.retrieve(SemanticClass::checked(0), Language::EN, history, 1)[0];
  EXPECT_NE(t1.candidate.id, t2.candidate.id);
}

TEST(Fuzz, ReviewSequencesMatchStateMachineOracle) {
  std::mt19937_64 rng(12);
  for (int run = 0; run < 100; ++run) {
    ResponseStore s;
    std::map<long, Status> oracle;
    std::map<long, std::pair<int, Language>> where;
    long next = 1;
    for (int op = 0; op < 60; ++op) {
      const auto kind = rng() % 3;
      if (kind == 0) {
        const int base = static_cast<int>(rng() % 4);
        const Language lang = rng() % 2 ? Language::EN : Language::ZH;
        const std::string text = "t" + std::to_string(rng() % 30);
        std::vector<ResponseCandidate> b = {cand(text, base, 0.1, 0.2, lang)};
        const bool fresh = std::none_of(where.begin(), where.end(), [&](const auto& kv) {
          return kv.second == std::make_pair(base, lang) && s.get(kv.first).utterance.text == text;
        });
        EXPECT_EQ(s.ingest(b), fresh ? 1u : 0u);
        if (fresh) {
          oracle[next] = Status::pending;
          where[next] = {base, lang};
          ++next;
        }
      } else if (kind == 1) {
        const long id = 1 + static_cast<long>(rng() % static_cast<std::uint64_t>(next + 1));
        const Decision d = rng() % 2 ? Decision::approve : Decision::reject;
        const auto it = oracle.find(id);
        if (it == oracle.end()) {
          EXPECT_THROW(s.review(id, d, "fz"), NotFoundError);
        } else if (it->second != Status::pending) {
          EXPECT_THROW(s.review(id, d, "fz"), ValidationError);
        } else {
          s.review(id, d, "fz");
          it->second = d == Decision::approve ? Status::approved : Status::rejected;
        }
      } else {
        const SemanticClass base = SemanticClass::checked(static_cast<int>(rng() % 4));
        const Language lang = rng() % 2 ? Language::EN : Language::ZH;
        const bool any = std::any_of(oracle.begin(), oracle.end(), [&](const auto& kv) {
          return kv.second == Status::approved && where[kv.first] == std::make_pair(base.class_id, lang);
        });
        if (!any) {
          EXPECT_THROW(s.retrieve(base, lang, {}, 3), EmptyPoolError);
          continue;
        }
        for (const auto& r : s.retrieve(base, lang, {}, 100)) {
          EXPECT_EQ(oracle.at(r.candidate.id), Status::approved);
          EXPECT_EQ(r.candidate.status, Status::approved);
          EXPECT_EQ(r.candidate.utterance.base, base);
          EXPECT_EQ(r.candidate.utterance.language, lang);
        }
      }
    }
    for (const auto& [id, st] : oracle) EXPECT_EQ(s.get(id).status, st);
  }
}

TEST(Persistence, ReplayRestoresState) {
  const auto path = temp_path("replay.jsonl");
  {
    auto s = ResponseStore::open(path);
    std::vector<ResponseCandidate> b = {cand("alpha", 1, 0.3, 0.4), cand("beta", 1), cand("gamma", 2)};
    s->ingest(b);
    s->review(1, Decision::approve, "ann", "fine");
    s->review(3, Decision::reject, "ann");
  }
  auto s = ResponseStore::open(path);
  EXPECT_EQ(s->size(), 3u);
  EXPECT_EQ(s->get(1).status, Status::approved);
  EXPECT_EQ(s->get(2).status, Status::pending);
  EXPECT_EQ(s->get(3).status, Status::rejected);
  EXPECT_EQ(s->get(1).reviewer_note, "fine");
  EXPECT_DOUBLE_EQ(s->get(1).fluency_score, 0.3);
  EXPECT_EQ(s->audit().size(), 2u);
  const auto r = s->retrieve(SemanticClass::checked(1), Language::EN, {}, 5);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].candidate.utterance.text, "alpha");
  // New ids continue after replay.
  std::vector<ResponseCandidate> more = {cand("delta", 1)};
  s->ingest(more);
  EXPECT_EQ(s->candidates(Status::pending).size(), 2u);
  EXPECT_EQ(s->get(4).utterance.text, "delta");
  std::filesystem::remove(path);
}

TEST(Persistence, CorruptLogsAreReported) {
  const auto path = temp_path("corrupt.jsonl");
  {
    std::ofstream f(path);
    f << "{\"schema\":\"other\",\"version\":1}\n";
  }
  EXPECT_THROW(ResponseStore::open(path), ValidationError);
  {
    std::ofstream f(path);
    f << "{\"schema\":\"sat.response-pool\",\"version\":1}\n{not json\n";
  }
  EXPECT_THROW(ResponseStore::open(path), ParseError);
  std::filesystem::remove(path);
}

TEST(Persistence, ExportHoldsApprovedOnly) {
  auto src = std::make_unique<ResponseStore>();
  std::vector<ResponseCandidate> b = {cand("keep me", 5, 1, 1), cand("drop me", 5), cand("pending", 5),
                                      cand("keep too", 6, 0, 2)};
  src->ingest(b);
  src->review(1, Decision::approve, "x");
  src->review(2, Decision::reject, "x");
  src->review(4, Decision::approve, "y", "note");
  const auto path = temp_path("export.jsonl");
  src->export_approved(path);
  auto out = ResponseStore::open(path);
  EXPECT_EQ(out->size(), 2u);
  for (const auto& c : out->candidates()) EXPECT_EQ(c.status, Status::approved);
  EXPECT_EQ(out->candidates(Status::approved).size(), 2u);
  EXPECT_EQ(out->retrieve(SemanticClass::checked(5), Language::EN, {}, 3)[0].candidate.utterance.text, "keep me");
  EXPECT_EQ(out->audit()[1].reviewer, "y");
  std::filesystem::remove(path);
}

TEST(Concurrency, ReadersNeverSeeUnapproved) {
  ResponseStore s;
  std::vector<ResponseCandidate> b;
  for (int i = 0; i < 200; ++i) b.push_back(cand("line " + std::to_string(i), 7, 0.01 * i, 0));
  s.ingest(b);
  s.review(1, Decision::approve, "seed");
  std::atomic<bool> done{false};
  std::atomic<long> bad{0}, reads{0};
  std::vector<std::thread> readers;
  for (int t = 0; t < 4; ++t) {
    readers.emplace_back([&] {
      while (!done) {
        for (const auto& r : s.retrieve(SemanticClass::checked(7), Language::EN, {}, 50)) {
          if (r.candidate.status != Status::approved || r.candidate.id % 2 == 0) ++bad;
        }
        ++reads;
      }
    });
  }
  for (long id = 2; id <= 200; ++id) s.review(id, id % 2 ? Decision::approve : Decision::reject, "w");
  done = true;
  for (auto& t : readers) t.join();
  EXPECT_EQ(bad.load(), 0);
  EXPECT_GT(reads.load(), 0);
  EXPECT_EQ(s.candidates(Status::approved).size(), 100u);
}

TEST(Candidate, JsonRoundTrip) {
  auto c = ResponseCandidate::pending({"hi", Language::ZH, SemanticClass::checked(9), Source::sl_generated},
                                      rewriting::RewardBreakdown::make(1.5, 0.25, 2.0, {1, 1, 1}));
  EXPECT_DOUBLE_EQ(c.fluency_score, 0.25);
  EXPECT_DOUBLE_EQ(c.empathy_score, 1.5);
  const auto back = ResponseCandidate::from_json(c.to_json());
  EXPECT_EQ(back.utterance.text, "hi");
  EXPECT_EQ(back.utterance.language, Language::ZH);
  EXPECT_EQ(back.utterance.source, Source::sl_generated);
  ASSERT_TRUE(back.reward.has_value());
  EXPECT_DOUBLE_EQ(back.reward->total, 3.75);
  EXPECT_THROW(source_from_string("web"), ValidationError);
}
