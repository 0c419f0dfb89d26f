#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sat/distill/losses.hpp"
#include "sat/emotion/emotion.hpp"

namespace sat::distill {

using classify::LabeledText;
using classify::TextClassifier;
using classify::TextEncoder;

// Student classifier plus the learned map from its hidden size to the
// teacher's, used only by the cosine term.
struct DistilledStudent {
  TextClassifier model;
  nn::Linear projection;

  DistilledStudent(TextClassifier m, int teacher_hidden, std::uint64_t seed);
  DistilledStudent(const DistilledStudent& other);
  DistilledStudent& operator=(const DistilledStudent& other);
  DistilledStudent(DistilledStudent&&) noexcept = default;
  DistilledStudent& operator=(DistilledStudent&&) noexcept = default;

  void visit_params(const nn::ParamVisitor& v);
  std::string weights_hash() const;

  // Classifier files plus projection.json.
  void save(const std::filesystem::path& dir) const;
};

// Teacher outputs for one example, computed once with the teacher frozen.
struct TeacherTargets {
  nn::Matrix logits;  // 1 x C
  nn::Matrix hidden;  // 1 x H_teacher
};

TeacherTargets teacher_targets(const TextClassifier& teacher, std::string_view text);

// Differentiable triple loss for one example; gradients reach only the
// student (model and projection).
TripleLossTerms triple_loss_example(const TeacherTargets& teacher, const DistilledStudent& student,
                                    const LabeledText& example, double temperature,
                                    bool scale_by_t2 = false);

// Batch-mean breakdown; l_total is exactly the mean of the three components.
TripleLossBreakdown triple_loss(std::span<const LabeledText> batch, const TextClassifier& teacher,
                                const DistilledStudent& student, double temperature,
                                bool scale_by_t2 = false);

struct DistillConfig {
  double temperature = 2.0;
  bool scale_by_t2 = false;
  // Student stages, paired one-to-one with the teacher's finetuning stages.
  std::vector<emotion::FinetuneStage> stages;
  std::uint64_t seed = 11;
  // Optional held-out set evaluated after every stage.
  std::vector<LabeledText> eval_set;

  void validate() const;
};

struct DistillEpochLog {
  int stage = 0;
  int epoch = 0;
  TripleLossBreakdown loss;
};

struct StageMetrics {
  int stage = 0;
  std::string name;
  std::optional<classify::ClassifierMetrics> teacher;
  std::optional<classify::ClassifierMetrics> student;
};

struct DistillResult {
  TextClassifier teacher;
  DistilledStudent student;
  std::vector<classify::EpochLog> teacher_log;
  std::vector<DistillEpochLog> student_log;
  std::vector<StageMetrics> stage_metrics;
};

// Student must not exceed the teacher in depth or width.
void check_capacity(const TextEncoder& teacher, const TextEncoder& student);

// Stage k: finetune the teacher on stage k (continuing from stage k-1), then
// distil the student (continuing from its stage k-1 weights) against it.
DistillResult distill_pipeline(const TextEncoder& teacher_encoder,
                               const emotion::FinetuneConfig& teacher_config,
                               const TextEncoder& student_encoder, const DistillConfig& config);

struct LatencyStats {
  double mean = 0.0;
  double median = 0.0;
  double p95 = 0.0;
  std::size_t samples = 0;

  nlohmann::ordered_json to_json() const;
};

// Seconds from an arbitrary epoch; defaults to std::chrono::steady_clock.
using Clock = std::function<double()>;

// Per-input wall time over `repeats` passes, after `warmup` untimed passes.
// Runs on the calling thread only.
LatencyStats measure_latency(const std::function<void(const std::string&)>& infer,
                             std::span<const std::string> inputs, int warmup, int repeats,
                             Clock clock = {});

}  // namespace sat::distill
