#include "sat/distill/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "sat/error.hpp"
#include "sat/log.hpp"

namespace sat::distill {

DistilledStudent::DistilledStudent(TextClassifier m, int teacher_hidden, std::uint64_t seed)
    : model(std::move(m)) {
  nn::Rng rng(seed);
  projection = nn::Linear(model.encoder().hidden_dim(), teacher_hidden, rng);
}

DistilledStudent::DistilledStudent(const DistilledStudent& other)
    : model(other.model), projection(other.projection) {
  projection.visit_params([](const std::string&, nn::Tensor& p) {
    p = nn::Tensor::leaf(p.value(), p.requires_grad());
  });
}

DistilledStudent& DistilledStudent::operator=(const DistilledStudent& other) {
  if (this != &other) {
    DistilledStudent tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

void DistilledStudent::visit_params(const nn::ParamVisitor& v) {
  model.visit_params(v);
  projection.visit_params(v, "projection.");
}

std::string DistilledStudent::weights_hash() const {
  return nn::params_hash(const_cast<DistilledStudent&>(*this));
}

void DistilledStudent::save(const std::filesystem::path& dir) const {
  model.save(dir);
  auto& self = const_cast<DistilledStudent&>(*this);
  nn::NamedParams proj;
  self.projection.visit_params([&](const std::string& n, nn::Tensor& p) { proj.emplace_back(n, p); });
  std::ofstream out(dir / "projection.json");
  out << nn::params_to_json(proj).dump() << '\n';
}

TeacherTargets teacher_targets(const TextClassifier& teacher, std::string_view text) {
  nn::NoGradGuard guard;
  const auto out = teacher.forward(text);
  return {out.logits.value(), out.hidden.value()};
}

TripleLossTerms triple_loss_example(const TeacherTargets& teacher, const DistilledStudent& student,
                                    const LabeledText& example, double temperature,
                                    bool scale_by_t2) {
  if (example.label < 0) throw ValidationError("distillation example is unlabeled");
  const auto out = student.model.forward(example.text);
  if (out.logits.cols() != teacher.logits.cols()) {
    throw DomainError("teacher and student disagree on the number of classes");
  }
  const nn::Tensor projected = student.projection(out.hidden);
  if (projected.cols() != teacher.hidden.cols()) {
    throw DomainError("projected student hidden size does not match the teacher");
  }
  return triple_loss_terms(out.logits, teacher.logits, projected, teacher.hidden, example.label,
                           temperature, scale_by_t2);
}

TripleLossBreakdown triple_loss(std::span<const LabeledText> batch, const TextClassifier& teacher,
                                const DistilledStudent& student, double temperature,
                                bool scale_by_t2) {
  if (batch.empty()) throw ValidationError("triple_loss: empty batch");
  double ce = 0.0, dist = 0.0, cos = 0.0;
  nn::NoGradGuard guard;
  for (const auto& ex : batch) {
    const auto b = triple_loss_example(teacher_targets(teacher, ex.text), student, ex,
                                       temperature, scale_by_t2)
                       .values();
    ce += b.l_ce;
    dist += b.l_dist;
    cos += b.l_cos;
  }
  const auto n = static_cast<double>(batch.size());
  return TripleLossBreakdown::from_components(ce / n, dist / n, cos / n);
}

void DistillConfig::validate() const {
  if (!(temperature > 0.0)) throw ConfigurationError("temperature must be positive");
  if (stages.empty() || stages.size() > 2) {
    throw ConfigurationError("distillation takes one or two stages");
  }
  for (const auto& st : stages) {
    if (st.hyper.epochs < 0) throw ConfigurationError("epochs must be >= 0");
    if (st.hyper.epochs > 0) {
      if (st.data.empty()) throw ValidationError("distillation stage '" + st.name + "' has no data");
      classify::require_all_classes(st.data, kNumEmotions, "distillation stage '" + st.name + "'");
    }
  }
}

void check_capacity(const TextEncoder& teacher, const TextEncoder& student) {
  if (student.num_layers() > teacher.num_layers() || student.hidden_dim() > teacher.hidden_dim()) {
    throw ConfigurationError("student must not exceed the teacher in layers or hidden size");
  }
}

DistillResult distill_pipeline(const TextEncoder& teacher_encoder,
                               const emotion::FinetuneConfig& teacher_config,
                               const TextEncoder& student_encoder, const DistillConfig& config) {
  teacher_config.validate();
  config.validate();
  check_capacity(teacher_encoder, student_encoder);
  if (teacher_config.stages.size() != config.stages.size()) {
    throw ConfigurationError("teacher and student must have the same number of stages");
  }
  if (student_encoder.tokenizer()->fingerprint() != teacher_encoder.tokenizer()->fingerprint()) {
    throw ConfigurationError("teacher and student must share a tokenizer");
  }

  DistillResult result{
      TextClassifier(teacher_encoder.clone(), emotion::emotion_class_names(),
                     teacher_config.head_seed),
      DistilledStudent(TextClassifier(student_encoder.clone(), emotion::emotion_class_names(),
                                      config.seed),
                       teacher_encoder.hidden_dim(), config.seed + 1),
      {},
      {},
      {}};

  for (std::size_t s = 0; s < config.stages.size(); ++s) {
    const int stage = static_cast<int>(s);
    const auto& tstage = teacher_config.stages[s];
    auto tlog = classify::train_classifier(result.teacher, tstage.data, tstage.hyper, stage);
    result.teacher_log.insert(result.teacher_log.end(), tlog.begin(), tlog.end());

    const auto& sstage = config.stages[s];
    std::vector<TeacherTargets> targets;
    if (sstage.hyper.epochs > 0) {
      targets.reserve(sstage.data.size());
      for (const auto& ex : sstage.data) targets.push_back(teacher_targets(result.teacher, ex.text));
    }
    double ce = 0.0, dist = 0.0, cos = 0.0;
    const auto n = static_cast<double>(sstage.data.size());
    classify::run_epochs(
        nn::collect_params(result.student), sstage.data.size(), sstage.hyper, stage,
        [&](std::size_t i) {
          auto terms = triple_loss_example(targets[i], result.student, sstage.data[i],
                                           config.temperature, config.scale_by_t2);
          ce += terms.ce.item();
          dist += terms.dist.item();
          cos += terms.cos.item();
          return terms.total;
        },
        [&](const classify::EpochLog& e) {
          result.student_log.push_back(
              {stage, e.epoch, TripleLossBreakdown::from_components(ce / n, dist / n, cos / n)});
          ce = dist = cos = 0.0;
        });

    StageMetrics m{stage, sstage.name, std::nullopt, std::nullopt};
    if (!config.eval_set.empty()) {
      m.teacher = classify::evaluate_classifier(result.teacher, config.eval_set);
      m.student = classify::evaluate_classifier(result.student.model, config.eval_set);
      logger()->info("distill stage {}: teacher acc {:.4f} student acc {:.4f}", stage,
                     m.teacher->accuracy, m.student->accuracy);
    }
    result.stage_metrics.push_back(std::move(m));
  }
  return result;
}

nlohmann::ordered_json LatencyStats::to_json() const {
  nlohmann::ordered_json j;
  j["mean_s"] = mean;
  j["median_s"] = median;
  j["p95_s"] = p95;
  j["samples"] = samples;
  return j;
}

LatencyStats measure_latency(const std::function<void(const std::string&)>& infer,
                             std::span<const std::string> inputs, int warmup, int repeats,
                             Clock clock) {
  if (repeats < 10) throw ConfigurationError("latency benchmark needs repeats >= 10");
  if (warmup < 1) throw ConfigurationError("latency benchmark needs warmup >= 1");
  if (inputs.empty()) throw ConfigurationError("latency benchmark needs inputs");
  if (!clock) {
    clock = [] {
      using namespace std::chrono;
      return duration<double>(steady_clock::now().time_since_epoch()).count();
    };
  }
  for (int w = 0; w < warmup; ++w) {
    for (const auto& in : inputs) infer(in);
  }
  std::vector<double> samples;
  samples.reserve(inputs.size() * static_cast<std::size_t>(repeats));
  for (int r = 0; r < repeats; ++r) {
    for (const auto& in : inputs) {
      const double t0 = clock();
      infer(in);
      samples.push_back(clock() - t0);
    }
  }
  LatencyStats st;
  st.samples = samples.size();
  st.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(st.samples);
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  st.median = n % 2 == 1 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  st.p95 = samples[std::max<std::size_t>(rank, 1) - 1];
  return st;
}

}  // namespace sat::distill
