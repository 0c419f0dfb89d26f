#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sat/distill/pipeline.hpp"
#include "sat/error.hpp"
#include "sat/log.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace sat;
using namespace sat::distill;

namespace {

using testkit::oracle_cos;
using testkit::oracle_dist;
using testkit::oracle_softmax;
using testkit::randv;

nn::Matrix row(const std::vector<double>& v) {
  nn::Matrix m(1, static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = v[i];
  return m;
}

}  // namespace

TEST(Softmax, UniformForEqualLogits) {
  const std::vector<double> z(4, 0.0);
  for (double T : {0.5, 1.0, 7.0}) {
    for (double p : softmax_temperature(z, T).probs) EXPECT_DOUBLE_EQ(p, 0.25);
  }
}

TEST(Softmax, TwoClassOracle) {
  const auto s = softmax_temperature(std::vector<double>{2.0, 0.0}, 2.0);
  EXPECT_NEAR(s.probs[0], 0.7310585786300049, 1e-12);
  EXPECT_NEAR(s.probs[1], 0.2689414213699951, 1e-12);
}

TEST(Softmax, HighTemperatureIsNearUniform) {
  const auto s = softmax_temperature(std::vector<double>{3.0, -1.0, 10.0}, 1e6);
  for (double p : s.probs) EXPECT_NEAR(p, 1.0 / 3.0, 1e-5);
}

TEST(Softmax, StableForHugeLogits) {
  const auto s = softmax_temperature(std::vector<double>{1e4, -1e4, 0.0}, 1.0);
  EXPECT_NEAR(s.probs[0], 1.0, 1e-12);
  for (double p : s.probs) EXPECT_TRUE(std::isfinite(p));
}

TEST(Softmax, DomainErrors) {
  EXPECT_THROW(softmax_temperature(std::vector<double>{1, 2}, 0.0), DomainError);
  EXPECT_THROW(softmax_temperature(std::vector<double>{1, NAN}, 1.0), DomainError);
  EXPECT_THROW(softmax_temperature(std::vector<double>{1}, 1.0), DomainError);
}

TEST(Softmax, SumsToOneAndMonotone) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto z = randv(rng, 2 + i % 6, 5.0);
    const double T = 0.1 + (i % 9);
    const auto s = softmax_temperature(z, T);
    double sum = 0;
    for (double p : s.probs) sum += p;
    EXPECT_NEAR(sum, 1.0, 1e-9);
    for (std::size_t a = 0; a < z.size(); ++a)
      for (std::size_t b = 0; b < z.size(); ++b)
        if (z[a] > z[b]) {
          EXPECT_GE(s.probs[a], s.probs[b]);
        }
  }
}

TEST(CeLoss, Cases) {
  EXPECT_DOUBLE_EQ(ce_loss(std::vector<double>{0.0, 1.0}, 1), 0.0);
  EXPECT_NEAR(ce_loss(std::vector<double>{0.25, 0.25, 0.25, 0.25}, 2), 1.3862943611198906, 1e-12);
  EXPECT_NEAR(ce_loss(std::vector<double>{0.7, 0.2, 0.1}, 1), 1.6094379124341003, 1e-12);
  // Zero at the target is floored, not infinite.
  EXPECT_NEAR(ce_loss(std::vector<double>{1.0, 0.0}, 1), -std::log(kProbabilityFloor), 1e-9);
}

TEST(DistLoss, Cases) {
  EXPECT_NEAR(dist_loss(std::vector<double>{0.0, 1.0}, std::vector<double>{1.0, 0.0}, 1.0),
              1.0443202661482277, 1e-12);
  EXPECT_NEAR(dist_loss(std::vector<double>{100.0, 0.0}, std::vector<double>{100.0, 0.0}, 1.0), 0.0, 1e-12);
  const std::vector<double> z{0.3, -1.2, 2.0};
  EXPECT_NEAR(dist_loss(z, z, 2.0), entropy(softmax_temperature(z, 2.0).probs), 1e-12);
  EXPECT_NEAR(dist_loss(z, z, 2.0, true), 4.0 * entropy(softmax_temperature(z, 2.0).probs), 1e-12);
}

TEST(CosLoss, Cases) {
  EXPECT_NEAR(cos_loss(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}), 0.0, 1e-12);
  EXPECT_NEAR(cos_loss(std::vector<double>{1, 2, 3}, std::vector<double>{-1, -2, -3}), 2.0, 1e-12);
  EXPECT_NEAR(cos_loss(std::vector<double>{1, 0}, std::vector<double>{0, 5}), 1.0, 1e-12);
  EXPECT_THROW(cos_loss(std::vector<double>{0, 0}, std::vector<double>{1, 0}), DomainError);
  EXPECT_THROW(cos_loss(std::vector<double>{1, 0}, std::vector<double>{1, 0, 0}), DomainError);
}

TEST(TripleLoss, ArithmeticMean) {
  const auto b = TripleLossBreakdown::from_components(0.9, 0.6, 0.3);
  EXPECT_NEAR(b.l_total, 0.6, 1e-15);
}

TEST(LossOracles, RandomInputsMatchReference) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 150; ++i) {
    const std::size_t C = 2 + i % 5;
    const double T = 0.5 + (i % 4);
    const auto s = randv(rng, C, 3.0);
    const auto t = randv(rng, C, 3.0);
    const auto sm = softmax_temperature(s, T).probs;
    const auto ref = oracle_softmax(s, T);
    for (std::size_t k = 0; k < C; ++k) EXPECT_NEAR(sm[k], static_cast<double>(ref[k]), 1e-12);
    const int target = static_cast<int>(i % C);
    EXPECT_NEAR(ce_loss(sm, target), static_cast<double>(-std::log(ref[static_cast<std::size_t>(target)])), 1e-9);
    EXPECT_NEAR(dist_loss(s, t, T), static_cast<double>(oracle_dist(s, t, T)), 1e-9);
    const auto h1 = randv(rng, 8, 1.0);
    const auto h2 = randv(rng, 8, 1.0);
    const double c = cos_loss(h1, h2);
    EXPECT_NEAR(c, static_cast<double>(oracle_cos(h1, h2)), 1e-12);
    EXPECT_GE(c, 0.0);
    EXPECT_LE(c, 2.0);
    auto scaled = h1;
    for (auto& x : scaled) x *= 3.0;
    EXPECT_NEAR(cos_loss(scaled, h2), cos_loss(h1, h2), 1e-12);
    // Graph versions agree with the scalar ones.
    const auto terms = triple_loss_terms(nn::Tensor::constant(row(s)), row(t), nn::Tensor::constant(row(h2)),
                                         row(h1), target, T);
    const auto v = terms.values();
    EXPECT_NEAR(v.l_ce, -std::log(softmax_temperature(s, 1.0).probs[static_cast<std::size_t>(target)]), 1e-9);
    EXPECT_NEAR(v.l_dist, static_cast<double>(oracle_dist(s, t, T)), 1e-9);
    EXPECT_NEAR(v.l_cos, static_cast<double>(oracle_cos(h1, h2)), 1e-9);
    EXPECT_NEAR(terms.total.item(), (v.l_ce + v.l_dist + v.l_cos) / 3.0, 1e-12);
  }
}

TEST(Gibbs, DistLossBoundedByTeacherEntropy) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t C = 2 + i % 6;
    const double T = 0.25 + (i % 7) * 0.75;
    const auto s = randv(rng, C, 4.0);
    const auto t = randv(rng, C, 4.0);
    const double h = entropy(softmax_temperature(t, T).probs);
    EXPECT_GE(dist_loss(s, t, T), h - 1e-12);
    EXPECT_NEAR(dist_loss(t, t, T), h, 1e-9);
  }
}

TEST(GradientCheck, TripleLossMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t C = 3 + trial % 3;
    const std::size_t H = 6;
    const double T = 1.0 + trial % 3;
    const int target = trial % static_cast<int>(C);
    const auto z = randv(rng, C, 2.0);
    const auto t = randv(rng, C, 2.0);
    const auto hs = randv(rng, H, 1.0);
    const auto ht = randv(rng, H, 1.0);
    auto f = [&](const std::vector<double>& zz, const std::vector<double>& hh) {
      return (ce_loss(softmax_temperature(zz, 1.0).probs, target) + dist_loss(zz, t, T) + cos_loss(ht, hh)) / 3.0;
    };
    auto zl = nn::Tensor::leaf(row(z));
    auto hl = nn::Tensor::leaf(row(hs));
    triple_loss_terms(zl, row(t), hl, row(ht), target, T).total.backward();
    const double eps = 1e-6;
    auto check = [&](const std::vector<double>& base, const nn::Matrix& grad, bool is_logits) {
      for (std::size_t k = 0; k < base.size(); ++k) {
        auto up = base, dn = base;
        up[k] += eps;
        dn[k] -= eps;
        const double fd = is_logits ? (f(up, hs) - f(dn, hs)) / (2 * eps) : (f(z, up) - f(z, dn)) / (2 * eps);
        const double an = grad(0, static_cast<Eigen::Index>(k));
        EXPECT_LT(std::abs(an - fd) / std::max(1e-6, std::abs(fd) + std::abs(an)), 1e-4) << "k=" << k;
      }
    };
    check(z, zl.grad(), true);
    check(hs, hl.grad(), false);
  }
}

TEST(Capacity, StudentLargerThanTeacherRejected) {
  auto data = testkit::keyword_task(40, 1);
  auto tok = testkit::tokenizer_for(data);
  classify::TransformerEncoder small(tok, testkit::tiny_config(1, 16, 1));
  classify::TransformerEncoder big(tok, testkit::tiny_config(2, 32, 1));
  EXPECT_THROW(check_capacity(small, big), ConfigurationError);
  EXPECT_NO_THROW(check_capacity(big, small));
}

TEST(Pipeline, EmptyZeroEpochSecondStageEqualsSingleStage) {
  logger()->set_level(spdlog::level::warn);
  const auto data = testkit::keyword_task(160, 2);
  auto tok = testkit::tokenizer_for(data);
  classify::TransformerEncoder teacher(tok, testkit::tiny_config(2, 16, 1, 16));
  classify::TransformerEncoder student(tok, testkit::tiny_config(1, 8, 2, 16));
  emotion::FinetuneConfig tc1;
  tc1.stages.push_back({"a", data, {1, 3e-3, 16, 1}});
  DistillConfig dc1;
  dc1.stages.push_back({"a", data, {1, 3e-3, 16, 2}});
  auto tc2 = tc1;
  tc2.stages.push_back({"b", {}, {0, 3e-3, 16, 3}});
  auto dc2 = dc1;
  dc2.stages.push_back({"b", {}, {0, 3e-3, 16, 4}});
  const auto r1 = distill_pipeline(teacher, tc1, student, dc1);
  const auto r2 = distill_pipeline(teacher, tc2, student, dc2);
  EXPECT_EQ(r1.teacher.weights_hash(), r2.teacher.weights_hash());
  EXPECT_EQ(r1.student.weights_hash(), r2.student.weights_hash());
  // Teacher is not modified by distillation beyond its own finetuning.
  EXPECT_EQ(r1.student_log.size(), 1u);
  EXPECT_NEAR(r1.student_log[0].loss.l_total,
              (r1.student_log[0].loss.l_ce + r1.student_log[0].loss.l_dist + r1.student_log[0].loss.l_cos) / 3.0,
              1e-12);
}

TEST(Pipeline, BatchTripleLossIsMeanOfComponents) {
  const auto data = testkit::keyword_task(12, 4);
  auto tok = testkit::tokenizer_for(data);
  classify::TextClassifier teacher(std::make_unique<classify::TransformerEncoder>(tok, testkit::tiny_config(2, 16, 1, 16)),
                                   emotion::emotion_class_names(), 3);
  DistilledStudent student(classify::TextClassifier(std::make_unique<classify::TransformerEncoder>(
                                                        tok, testkit::tiny_config(1, 8, 2, 16)),
                                                    emotion::emotion_class_names(), 4),
                           16, 5);
  const auto b = triple_loss(data, teacher, student, 2.0);
  double ce = 0, di = 0, co = 0;
  for (const auto& ex : data) {
    const auto v = triple_loss_example(teacher_targets(teacher, ex.text), student, ex, 2.0).values();
    ce += v.l_ce;
    di += v.l_dist;
    co += v.l_cos;
  }
  const double n = static_cast<double>(data.size());
  EXPECT_NEAR(b.l_ce, ce / n, 1e-9);
  EXPECT_NEAR(b.l_dist, di / n, 1e-9);
  EXPECT_NEAR(b.l_cos, co / n, 1e-9);
  EXPECT_NEAR(b.l_total, (b.l_ce + b.l_dist + b.l_cos) / 3.0, 1e-12);

  // Gradient reaches the student and its projection, never the teacher.
  const std::string teacher_before = teacher.weights_hash();
  auto terms = triple_loss_example(teacher_targets(teacher, data[0].text), student, data[0], 2.0);
  terms.total.backward();
  double proj_grad = 0;
  student.projection.visit_params([&](const std::string&, nn::Tensor& p) { proj_grad += p.grad().cwiseAbs().sum(); });
  EXPECT_GT(proj_grad, 0.0);
  EXPECT_EQ(teacher.weights_hash(), teacher_before);
}

TEST(Latency, ConstantStubClock) {
  double now = 0.0;
  const std::vector<std::string> inputs = {"a", "b", "c"};
  const auto stats = measure_latency([&](const std::string&) { now += 0.25; }, inputs, 1, 10, [&] { return now; });
  EXPECT_DOUBLE_EQ(stats.mean, 0.25);
  EXPECT_DOUBLE_EQ(stats.median, 0.25);
  EXPECT_DOUBLE_EQ(stats.p95, 0.25);
  EXPECT_EQ(stats.samples, 30u);
  EXPECT_THROW(measure_latency([](const std::string&) {}, inputs, 1, 9), ConfigurationError);
  EXPECT_THROW(measure_latency([](const std::string&) {}, inputs, 0, 10), ConfigurationError);
}
