#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "sat/engine/engine.hpp"
#include "sat/error.hpp"
#include "sat/log.hpp"
#include "engine_fuzz.hpp"
#include "stubs.hpp"

using namespace sat;
using namespace sat::engine;

namespace {

using testkit::Conversation;

// Drives the session to the recommendation node answering every question "no".
void reach_recommend(Conversation& c, const std::string& text, const std::string& yes, const std::string& no) {
  c.send(EngineEvent::user_text(text));
  ASSERT_EQ(c.state().node, Node::confirm_emotion);
  c.send(EngineEvent::user_text(yes));
  while (c.state().node == Node::question) c.send(EngineEvent::user_text(no));
  ASSERT_EQ(c.state().node, Node::recommend);
}

}  // namespace

struct EngineFixture : ::testing::Test {
  ContentBundle content = ContentBundle::shipped();
  testkit::CueDetector cue;
  void SetUp() override { logger()->set_level(spdlog::level::warn); }
};

TEST(Fsm, TableIsTotal) {
  for (auto n : kAllNodes) {
    for (auto e : kAllEvents) {
      const auto t = transition(n, e);
      EXPECT_TRUE(t == Transition::handled || t == Transition::rejected);
    }
    EXPECT_EQ(node_from_string(to_string(n)), n);
  }
  EXPECT_TRUE(valid_events(Node::ended).empty());
  for (auto n : kAllNodes) {
    if (n == Node::ended) continue;
    const auto v = valid_events(n);
    EXPECT_NE(std::find(v.begin(), v.end(), EventKind::end_session), v.end());
  }
}

TEST_F(EngineFixture, EveryRejectedPairThrowsProtocolErrorNamingBoth) {
  ConversationEngine eng(content, &cue, nullptr, {{}, 1});
  auto s = eng.start_session(Language::EN).state;
  for (auto n : kAllNodes) {
    s.node = n;
    for (auto e : kAllEvents) {
      if (transition(n, e) == Transition::handled) continue;
      EngineEvent ev;
      ev.kind = e;
      try {
        eng.step(s, ev);
        ADD_FAILURE() << to_string(n) << " " << to_string(e);
      } catch (const ProtocolError& err) {
        EXPECT_NE(std::string(err.what()).find(std::string(to_string(n))), std::string::npos);
        EXPECT_NE(std::string(err.what()).find(std::string(to_string(e))), std::string::npos);
      }
    }
  }
}

TEST_F(EngineFixture, StartSession) {
  ConversationEngine eng(content, &cue, nullptr);
  const auto a = eng.start_session(Language::ZH);
  EXPECT_EQ(a.state.node, Node::greet);
  EXPECT_EQ(a.state.language, Language::ZH);
  EXPECT_TRUE(a.state.excluded_protocols.empty());
  EXPECT_NE(eng.start_session(Language::ZH).state.session_id, a.state.session_id);
  EXPECT_THROW(eng.start_session("fr"), ValidationError);
  EXPECT_EQ(eng.start_session("zh").state.language, Language::ZH);
}

TEST_F(EngineFixture, DetectionAsksForConfirmation) {
  testkit::FixedDetector sad(EmotionLabel::sadness);
  ConversationEngine eng(content, &sad, nullptr);
  Conversation c(eng, Language::ZH);
  c.send(EngineEvent::user_text("我很伤心"));
  EXPECT_EQ(c.state().detected_emotion, EmotionLabel::sadness);
  EXPECT_EQ(c.state().node, Node::confirm_emotion);
  EXPECT_EQ(c.last.utterances.back().source, "script:confirm_emotion");
  EXPECT_NE(c.last.utterances.back().text.find("难过"), std::string::npos);
}

TEST_F(EngineFixture, OverrideSelectsBranch) {
  ConversationEngine eng(content, &cue, nullptr);
  Conversation c(eng, Language::EN);
  c.send(EngineEvent::user_text("i feel sad"));
  c.send(EngineEvent::emotion_override(EmotionLabel::anger));
  EXPECT_EQ(c.state().detected_emotion, EmotionLabel::anger);
  EXPECT_TRUE(c.state().emotion_overridden);
  EXPECT_EQ(c.state().node, Node::question);
  EXPECT_EQ(c.last.utterances.back().source, "script:question:" + content.branches.at(EmotionLabel::anger).questions[0].id);
}

TEST_F(EngineFixture, ClassifierFailureFallsBackToSelection) {
  testkit::ThrowingDetector broken;
  ConversationEngine eng(content, &broken, nullptr);
  Conversation c(eng, Language::EN);
  c.send(EngineEvent::user_text("hello"));
  EXPECT_EQ(c.state().node, Node::select_emotion);
  EXPECT_EQ(c.last.utterances.back().source, "script:classifier_fallback");
  c.send(EngineEvent::emotion_override(EmotionLabel::joy_contentment));
  EXPECT_EQ(c.state().node, Node::recommend);
}

TEST_F(EngineFixture, JoyFixtureBranchAndFallback) {
  content.branches[EmotionLabel::joy_contentment] = {{9, 10, 11}, {}};
  ConversationEngine eng(content, &cue, nullptr);
  Conversation c(eng, Language::EN);
  reach_recommend(c, "i am happy", "yes", "no");
  EXPECT_EQ(c.state().recommendation, (std::vector<int>{9, 10, 11}));
  EXPECT_EQ(eng.recommend(c.state()), (std::vector<int>{9, 10, 11}));

  auto s = c.state();
  s.excluded_protocols = {9, 10, 11};
  const auto fb = eng.recommend(s);
  EXPECT_EQ(fb, content.groups.at(content.fallback_group));
  for (int id : {9, 10, 11}) EXPECT_EQ(std::count(fb.begin(), fb.end(), id), 0);

  s.excluded_protocols.insert(fb.begin(), fb.end());
  EXPECT_TRUE(eng.recommend(s).empty());
}

TEST_F(EngineFixture, DeclineExcludesForRestOfSession) {
  ConversationEngine eng(content, &cue, nullptr);
  Conversation c(eng, Language::EN);
  reach_recommend(c, "i am so sad", "yes", "no");
  const auto offered = c.state().recommendation;
  ASSERT_FALSE(offered.empty());
  const int victim = offered.front();
  c.send(EngineEvent::protocol_declined(victim));
  EXPECT_TRUE(c.state().excluded_protocols.count(victim));
  EXPECT_EQ(std::count(c.state().recommendation.begin(), c.state().recommendation.end(), victim), 0);
  // Start over within the same session: still excluded.
  c.send(EngineEvent::protocol_chosen(c.state().recommendation.front()));
  c.send(EngineEvent::feedback(Feedback::better));
  c.send(EngineEvent::user_text("yes"));
  EXPECT_EQ(c.state().node, Node::greet);
  reach_recommend(c, "sad again", "yes", "no");
  EXPECT_EQ(std::count(c.state().recommendation.begin(), c.state().recommendation.end(), victim), 0);
  EXPECT_THROW(c.send(EngineEvent::protocol_chosen(victim)), ValidationError);
}

TEST_F(EngineFixture, QuestionYesExcludesItsProtocols) {
  ConversationEngine eng(content, &cue, nullptr);
  Conversation c(eng, Language::EN);
  c.send(EngineEvent::user_text("i am angry"));
  c.send(EngineEvent::user_text("yes"));
  ASSERT_EQ(c.state().node, Node::question);
  const auto q = content.branches.at(EmotionLabel::anger).questions;
  c.send(EngineEvent::user_text("maybe"));
  EXPECT_EQ(c.last.utterances.back().source, "script:unclear_yes_no");
  c.send(EngineEvent::user_text("yes"));
  for (int id : q[0].exclude_on_yes) EXPECT_TRUE(c.state().excluded_protocols.count(id));
}

TEST_F(EngineFixture, FeedbackWithoutProtocolIsRejected) {
  ConversationEngine eng(content, &cue, nullptr);
  auto s = eng.start_session(Language::EN).state;
  s.node = Node::practice;
  EXPECT_THROW(eng.post_protocol_branch(s, Feedback::better), ProtocolError);
  EXPECT_THROW(eng.step(s, EngineEvent::feedback(Feedback::same_or_worse)), ProtocolError);
}

TEST_F(EngineFixture, AllEightCellsYieldDistinctResponses) {
  ConversationEngine eng(content, &cue, nullptr);
  const std::map<EmotionLabel, std::string> cue_text = {{EmotionLabel::sadness, "i feel low"},
                                                        {EmotionLabel::anger, "i am angry"},
                                                        {EmotionLabel::fear_anxiety, "i am scared"},
                                                        {EmotionLabel::joy_contentment, "i am happy"}};
  std::set<std::string> sources, texts;
  for (auto e : kEmotionOrder) {
    for (auto f : {Feedback::better, Feedback::same_or_worse}) {
      Conversation c(eng, Language::EN);
      reach_recommend(c, cue_text.at(e), "yes", "no");
      c.send(EngineEvent::protocol_chosen(c.state().recommendation.front()));
      EXPECT_EQ(c.state().pre_protocol_emotion, e);
      c.send(EngineEvent::feedback(f));
      const auto& cell = c.last.utterances.front();
      EXPECT_EQ(cell.source, "base:" + std::to_string(content.cell(e, f)));
      sources.insert(cell.source);
      texts.insert(cell.text);
      if (f == Feedback::better) {
        EXPECT_EQ(c.state().node, Node::continue_or_end);
      } else {
        EXPECT_EQ(c.state().node, Node::ask_exclude_last);
        const int last = *c.state().last_protocol;
        c.send(EngineEvent::user_text("yes"));
        EXPECT_TRUE(c.state().excluded_protocols.count(last));
        EXPECT_TRUE(c.state().node == Node::recommend || c.state().node == Node::continue_or_end);
      }
    }
  }
  EXPECT_EQ(sources.size(), 8u);
  EXPECT_EQ(texts.size(), 8u);
}

TEST_F(EngineFixture, StoreResponsesAreServedWhenApproved) {
  store::ResponseStore pool;
  const int ack = content.acknowledgement.at(EmotionLabel::anger);
  std::vector<store::ResponseCandidate> b = {store::ResponseCandidate::pending(
      {"that sounds really frustrating", Language::EN, SemanticClass::checked(ack), store::Source::rl_generated},
      std::nullopt)};
  pool.ingest(b);
  ConversationEngine pending_only(content, &cue, &pool);
  Conversation c1(pending_only, Language::EN);
  c1.send(EngineEvent::user_text("i am angry"));
  c1.send(EngineEvent::user_text("yes"));
  EXPECT_EQ(c1.last.utterances.front().source, "base:" + std::to_string(ack));
  pool.review(1, store::Decision::approve, "r");
  Conversation c2(pending_only, Language::EN);
  c2.send(EngineEvent::user_text("i am angry"));
  c2.send(EngineEvent::user_text("yes"));
  EXPECT_EQ(c2.last.utterances.front().source, "store:1");
  EXPECT_EQ(c2.last.utterances.front().text, "that sounds really frustrating");
}

TEST_F(EngineFixture, ThousandSessionFuzz) {
  ConversationEngine eng(content, &cue, nullptr, {{}, 42});
  std::set<std::pair<EmotionLabel, Feedback>> cells;
  long violations = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) testkit::fuzz_session(eng, i, cells, violations);
  EXPECT_EQ(violations, 0);
  EXPECT_EQ(cells.size(), 8u);
}

TEST_F(EngineFixture, TranscriptsDeterministicUnderSeed) {
  std::set<std::pair<EmotionLabel, Feedback>> cells;
  long v = 0;
  ConversationEngine a(content, &cue, nullptr, {{}, 7});
  ConversationEngine b(content, &cue, nullptr, {{}, 7});
  for (std::uint64_t i = 0; i < 50; ++i) EXPECT_EQ(testkit::fuzz_session(a, i, cells, v), testkit::fuzz_session(b, i, cells, v));
  ConversationEngine c(content, &cue, nullptr, {{}, 7});
  EXPECT_EQ(a.start_session(Language::EN).state.session_id.size(), 32u);
  EXPECT_EQ(ConversationEngine(content, &cue, nullptr, {{}, 9}).start_session(Language::EN).state.session_id,
            ConversationEngine(content, &cue, nullptr, {{}, 9}).start_session(Language::EN).state.session_id);
}

TEST(Content, ShippedBundleVerifies) {
  const auto dir = ContentBundle::shipped_dir();
  EXPECT_NO_THROW(verify_manifest(dir));
  const auto c = ContentBundle::load(dir);
  EXPECT_EQ(c.protocols.size(), 20u);
  EXPECT_EQ(c.base_utterances.size(), 45u);
  for (const auto& p : c.protocols) {
    EXPECT_FALSE(p.title.en.empty());
    EXPECT_FALSE(p.title.zh.empty());
  }
}

TEST(Content, TamperedFileFailsManifest) {
  const auto src = ContentBundle::shipped_dir();
  const auto dir = std::filesystem::temp_directory_path() / "sat_content_tamper";
  std::filesystem::remove_all(dir);
  std::filesystem::copy(src, dir);
  {
    std::ofstream f(dir / "script.json", std::ios::app);
    f << " ";
  }
  EXPECT_THROW(verify_manifest(dir), ValidationError);
  EXPECT_THROW(ContentBundle::load(dir), ValidationError);
  EXPECT_NO_THROW(ContentBundle::load(dir, false));
  std::filesystem::remove_all(dir);
}

TEST(Events, JsonAndValidation) {
  const auto e = EngineEvent::protocol_declined(7);
  const auto back = EngineEvent::from_json(e.to_json());
  EXPECT_EQ(back.kind, EventKind::protocol_declined);
  EXPECT_EQ(back.protocol, 7);
  EngineEvent bad;
  bad.kind = EventKind::protocol_chosen;
  EXPECT_THROW(bad.validate(), ValidationError);
  EXPECT_THROW(EngineEvent::protocol_chosen(21).validate(), ValidationError);
}
