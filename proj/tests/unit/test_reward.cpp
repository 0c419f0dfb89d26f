#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sat/empathy/scoring.hpp"
#include "sat/error.hpp"
#include "sat/rewriting/reward.hpp"
#include "stubs.hpp"
#include "synthetic.hpp"

using namespace sat;
using namespace sat::rewriting;

TEST(EmpathyReward, RawHighLogit) {
  testkit::StubEmpathy e(std::array<double, 3>{0.1, 0.2, 1.7});
  EXPECT_DOUBLE_EQ(empathy::empathy_reward(e, "anything"), 1.7);
  const auto s = empathy::score_empathy(e, "anything");
  EXPECT_EQ(s.label, 2);
  testkit::StubEmpathy low(std::array<double, 3>{3.0, 0.2, -1.0});
  EXPECT_EQ(empathy::score_empathy(low, "x").label, 0);
  EXPECT_DOUBLE_EQ(empathy::empathy_reward(low, "x"), -1.0);
}

TEST(SemanticReward, LogitAtBase) {
  std::vector<double> logits(kNumSemanticClasses);
  for (int i = 0; i < kNumSemanticClasses; ++i) logits[static_cast<std::size_t>(i)] = 0.5 * i;
  testkit::StubSemantic s(logits);
  EXPECT_DOUBLE_EQ(empathy::semantic_reward(s, "x", SemanticClass::checked(7)), 3.5);
  EXPECT_THROW(SemanticClass::checked(45), DomainError);
  EXPECT_THROW(SemanticClass::checked(-1), DomainError);
  testkit::StubSemantic short_s(std::vector<double>{1.0, 2.0});
  EXPECT_THROW(empathy::semantic_reward(short_s, "x", SemanticClass::checked(7)), ConfigurationError);
}

TEST(RepetitionPenalty, StopwordsAreFree) {
  const StopwordSet sw({"the"});
  EXPECT_NEAR(repetition_penalty(std::vector<std::string>{"A", "A", "A", "the", "the"}, sw, 0.1), 0.2, 1e-15);
  EXPECT_DOUBLE_EQ(repetition_penalty(std::vector<std::string>{}, sw, 0.1), 0.0);
  EXPECT_DOUBLE_EQ(repetition_penalty(std::vector<std::string>{"a", "b", "c"}, sw, 0.1), 0.0);
  EXPECT_THROW(repetition_penalty(std::vector<std::string>{"a"}, sw, -0.1), DomainError);
}

TEST(RepetitionPenalty, MatchesPairCountingOracle) {
  // Oracle: count occurrences by scanning earlier positions, no maps.
  std::mt19937_64 rng(9);
  const std::vector<std::string> pool = {"a", "b", "c", "the", "of", "dog", "cat"};
  const StopwordSet sw({"the", "of"});
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> toks(rng() % 15);
    for (auto& t : toks) t = pool[rng() % pool.size()];
    long repeats = 0;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (toks[i] == "the" || toks[i] == "of") continue;
      for (std::size_t j = 0; j < i; ++j) {
        if (toks[j] == toks[i]) {
          ++repeats;
          break;
        }
      }
    }
    const double unit = 0.05 * (1 + trial % 4);
    EXPECT_NEAR(repetition_penalty(toks, sw, unit), unit * static_cast<double>(repeats), 1e-12);
  }
}

TEST(Stopwords, ShippedAndHashed) {
  const auto en = StopwordSet::shipped(Language::EN);
  EXPECT_TRUE(en.contains("the"));
  EXPECT_EQ(en.hash(), StopwordSet::shipped(Language::EN).hash());
  EXPECT_NE(en.hash(), StopwordSet::shipped(Language::ZH).hash());
  EXPECT_EQ(StopwordSet({"b", "a"}).hash(), StopwordSet({"a", "b", "a"}).hash());
}

TEST(FluencyReward, ConstantPerplexityStub) {
  const StopwordSet sw({"the"});
  testkit::FixedProbLM lm({0.25});  // PPL 4 for every text
  EXPECT_NEAR(fluency_reward("dog runs the park", lm, sw), 0.25, 1e-12);
  const double before = fluency_reward("dog runs the park", lm, sw);
  const double after = fluency_reward("dog runs the park dog", lm, sw);
  EXPECT_NEAR(before - after, 0.1, 1e-12);
  EXPECT_NEAR(fluency_reward("dog runs the park the", lm, sw), before, 1e-12);
  EXPECT_LE(fluency_reward("a", testkit::FixedProbLM({1.0}), sw), 1.0);
  // Infinite perplexity contributes nothing.
  EXPECT_NEAR(fluency_reward("dog dog", testkit::FixedProbLM({0.0}), sw, 0.1), -0.1, 1e-12);
}

TEST(FluencyReward, RandomTextsMatchOracle) {
  std::mt19937_64 rng(21);
  const std::vector<std::string> words = {"i", "see", "you", "the", "pain", "feel", "and", "it"};
  const auto sw = StopwordSet::shipped(Language::EN);
  for (int trial = 0; trial < 150; ++trial) {
    std::vector<double> probs(1 + rng() % 4);
    for (auto& p : probs) p = 0.05 + 0.9 * std::uniform_real_distribution<double>()(rng);
    testkit::FixedProbLM lm(probs);
    std::string text;
    std::vector<std::string> toks(1 + rng() % 10);
    for (auto& t : toks) {
      t = words[rng() % words.size()];
      text += t + " ";
    }
    long double logp = 0;
    for (std::size_t i = 0; i < toks.size(); ++i) logp += std::log(static_cast<long double>(probs[i % probs.size()]));
    const long double ppl = std::exp(-logp / static_cast<long double>(toks.size()));
    long repeats = 0;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (sw.contains(toks[i])) continue;
      if (std::find(toks.begin(), toks.begin() + static_cast<long>(i), toks[i]) != toks.begin() + static_cast<long>(i)) ++repeats;
    }
    const double oracle = static_cast<double>(1.0L / ppl) - 0.1 * static_cast<double>(repeats);
    EXPECT_NEAR(fluency_reward(text, lm, sw, 0.1), oracle, 1e-9);
  }
}

TEST(TotalReward, WeightedSum) {
  testkit::StubComponents c(2.0, 0.5, 1.0);
  const auto b = total_reward("x", SemanticClass::checked(0), {1, 2, 3}, c);
  EXPECT_DOUBLE_EQ(b.total, 6.0);
  EXPECT_DOUBLE_EQ(b.r_e, 2.0);
  EXPECT_DOUBLE_EQ(b.r_f, 0.5);
  EXPECT_DOUBLE_EQ(b.r_s, 1.0);
  const auto back = RewardBreakdown::from_json(b.to_json());
  EXPECT_DOUBLE_EQ(back.total, 6.0);
  EXPECT_DOUBLE_EQ(back.weights.w_s, 3.0);
}

TEST(TotalReward, LinearInEachWeightAndRandomOracle) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-3, 3), w(0, 2);
  for (int trial = 0; trial < 200; ++trial) {
    const double e = u(rng), f = u(rng), s = u(rng);
    RewardWeights wt{w(rng), w(rng), w(rng) + 0.01};
    testkit::StubComponents c(e, f, s);
    const auto b = total_reward("x", SemanticClass::checked(trial % 45), wt, c);
    const long double oracle = static_cast<long double>(wt.w_e) * e + static_cast<long double>(wt.w_f) * f +
                               static_cast<long double>(wt.w_s) * s;
    EXPECT_NEAR(b.total, static_cast<double>(oracle), 1e-12);
    auto wt2 = wt;
    wt2.w_e *= 2;
    EXPECT_NEAR(total_reward("x", SemanticClass::checked(0), wt2, c).total - b.total, wt.w_e * e, 1e-12);
  }
}

TEST(Weights, Validation) {
  EXPECT_THROW((RewardWeights{0, 0, 0}.validate()), ValidationError);
  EXPECT_THROW((RewardWeights{-1, 1, 1}.validate()), ValidationError);
  EXPECT_THROW((RewardWeights{NAN, 1, 1}.validate()), ValidationError);
  EXPECT_NO_THROW((RewardWeights{0, 0, 1}.validate()));
}

TEST(Split, EightyTenTenIsADeterministicPartition) {
  auto data = testkit::keyword_task(103, 1);
  const auto a = empathy::split_80_10_10(data, 5);
  const auto b = empathy::split_80_10_10(data, 5);
  EXPECT_EQ(a.train.size(), 82u);
  EXPECT_EQ(a.dev.size(), 10u);
  EXPECT_EQ(a.test.size(), 11u);
  ASSERT_EQ(a.train.size(), b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) EXPECT_EQ(a.train[i].text, b.train[i].text);
  std::multiset<std::string> all, parts;
  for (const auto& ex : data) all.insert(ex.text);
  for (const auto* v : {&a.train, &a.dev, &a.test})
    for (const auto& ex : *v) parts.insert(ex.text);
  EXPECT_EQ(all, parts);
}

TEST(EmpathyClassifier, LearnsMarkerLevels) {
  const auto corpus = testkit::empathy_corpus(12, 3);
  const auto ex = empathy::empathy_examples(corpus);
  std::vector<std::string> texts;
  for (const auto& e : ex) texts.push_back(e.text);
  auto tok = std::make_shared<const nn::Tokenizer>(nn::Tokenizer::build(texts));
  classify::TransformerEncoder enc(tok, testkit::tiny_config(1, 16, 4, 24));
  const auto model = std::make_shared<const classify::TextClassifier>(
      empathy::train_empathy_classifier(enc, corpus, {3, 3e-3, 16, 1}));
  empathy::ClassifierEmpathyScorer scorer(model);
  EXPECT_EQ(empathy::score_empathy(scorer, testkit::rewrite_at_level(3, 2, 99)).label, 2);
  EXPECT_EQ(empathy::score_empathy(scorer, testkit::rewrite_at_level(3, 0, 99)).label, 0);
  EXPECT_GT(empathy::empathy_reward(scorer, testkit::rewrite_at_level(5, 2, 7)),
            empathy::empathy_reward(scorer, testkit::rewrite_at_level(5, 0, 7)));

  auto missing = corpus;
  std::erase_if(missing, [](const dataset::RewritingExample& r) { return r.empathy_label == 1; });
  EXPECT_THROW(empathy::train_empathy_classifier(enc, missing, {1, 3e-3, 16, 1}), ValidationError);
}

TEST(SemanticClassifier, NeedsAllBases) {
  auto corpus = testkit::empathy_corpus(1, 3);
  std::erase_if(corpus, [](const dataset::RewritingExample& r) { return r.base_id == 44; });
  std::vector<std::string> texts;
  for (const auto& r : corpus) texts.push_back(r.rewriting);
  auto tok = std::make_shared<const nn::Tokenizer>(nn::Tokenizer::build(texts));
  classify::TransformerEncoder enc(tok, testkit::tiny_config(1, 8, 4, 24));
  EXPECT_THROW(empathy::train_semantic_classifier(enc, corpus, {1, 3e-3, 16, 1}), ValidationError);
}
