#include <map>
#include <set>

#include "common.hpp"
#include "sat/dataset/fluency.hpp"
#include "sat/distill/pipeline.hpp"
#include "sat/emotion/emotion.hpp"
#include "sat/empathy/scoring.hpp"
#include "sat/text.hpp"

namespace sat::cli {
namespace {

using dataset::EmotionDataset;
using dataset::RewritingDataset;
using classify::LabeledText;

dataset::Schema schema_of(const Options& o) {
  return o.schema == "rewriting" ? dataset::Schema::rewriting : dataset::Schema::emotion;
}

std::vector<LabeledText> labeled_file(const std::filesystem::path& path, const json& node) {
  auto ds = dataset::load_emotion_dataset(path);
  if (node.is_object() && node.contains("split")) {
    ds = ds.filter(dataset::split_from_string(node.at("split").get<std::string>()));
  }
  return emotion::to_labeled(ds.examples);
}

json split_of(const json& cfg, const char* key) {
  return cfg.contains(key) ? json{{"split", cfg.at(key)}} : json::object();
}

std::shared_ptr<const nn::Tokenizer> build_tokenizer(const std::vector<std::string>& corpus,
                                                     const json& cfg) {
  return std::make_shared<const nn::Tokenizer>(
      nn::Tokenizer::build(corpus, cfg.value("vocab_min_count", std::size_t{1})));
}

std::unique_ptr<classify::TextEncoder> build_encoder(const CommandContext& ctx, const json& enc,
                                                     std::shared_ptr<const nn::Tokenizer> tok,
                                                     std::uint64_t offset) {
  json c = enc.is_object() ? enc : json::object();
  c["seed"] = seed_for(ctx, c, 1, offset);
  return classify::make_encoder(c, std::move(tok));
}

// ---- dataset ----

ordered_json run_dataset_validate(CommandContext& ctx) {
  const auto ds = dataset::load_ep_dataset(ctx.opts.path, schema_of(ctx.opts));
  ordered_json j{{"valid", true}};
  std::visit([&](const auto& d) { j["records"] = d.examples.size(); }, ds);
  return j;
}

ordered_json run_dataset_stats(CommandContext& ctx) {
  const auto ds = dataset::load_ep_dataset(ctx.opts.path, schema_of(ctx.opts));
  ordered_json j;
  if (const auto* e = std::get_if<EmotionDataset>(&ds)) {
    const auto counts = e->class_counts();
    ordered_json classes;
    for (auto label : kEmotionOrder) classes[std::string(to_string(label))] = counts[static_cast<std::size_t>(index_of(label))];
    std::map<std::string, std::size_t> langs, splits, origins;
    for (const auto& ex : e->examples) {
      ++langs[std::string(to_string(ex.language))];
      ++splits[std::string(dataset::to_string(ex.split))];
      ++origins[std::string(dataset::to_string(ex.origin))];
    }
    j = {{"schema", "emotion"}, {"total", e->examples.size()}, {"class_counts", classes},
         {"languages", langs}, {"splits", splits}, {"origins", origins}};
  } else {
    const auto& r = std::get<RewritingDataset>(ds);
    std::set<int> bases;
    std::map<std::string, std::size_t> langs;
    for (const auto& ex : r.examples) {
      bases.insert(ex.base_id);
      ++langs[std::string(to_string(ex.language))];
    }
    const auto emp = r.empathy_counts();
    j = {{"schema", "rewriting"}, {"total", r.examples.size()}, {"base_utterances", bases.size()},
         {"annotated", r.num_annotated()}, {"empathy_counts", {emp[0], emp[1], emp[2]}}, {"languages", langs}};
  }
  return j;
}

std::vector<std::string> corpus_for_revision(const std::filesystem::path& path, dataset::Schema schema,
                                             std::optional<dataset::Revision> rev) {
  std::vector<std::string> out;
  const auto ds = dataset::load_ep_dataset(path, schema);
  auto keep = [&](const std::optional<dataset::Revision>& r) {
    return !rev || r.value_or(dataset::Revision::base) == *rev;
  };
  if (const auto* e = std::get_if<EmotionDataset>(&ds)) {
    for (const auto& ex : e->examples) if (keep(ex.revision)) out.push_back(ex.text);
  } else {
    for (const auto& ex : std::get<RewritingDataset>(ds).examples) if (keep(ex.revision)) out.push_back(ex.rewriting);
  }
  return out;
}

ordered_json run_dataset_eval_fluency(CommandContext& ctx) {
  const auto schema = schema_of(ctx.opts);
  const auto rev = dataset::revision_from_string(ctx.opts.revision);
  const auto corpus = corpus_for_revision(ctx.opts.path, schema, rev);
  if (corpus.empty()) throw ValidationError("no sentences at revision " + ctx.opts.revision);
  // The fluency models are fitted on every revision unless a reference corpus is given.
  const auto reference = ctx.opts.reference.empty() ? corpus_for_revision(ctx.opts.path, schema, std::nullopt)
                                                    : corpus_for_revision(ctx.opts.reference, schema, std::nullopt);
  auto lm = std::make_shared<const dataset::BigramLanguageModel>(reference);
  auto uni = std::make_shared<const dataset::AddOneUnigramModel>(reference);
  dataset::ScorerSet scorers;
  scorers.perplexity = std::make_shared<dataset::PerplexityScorer>(lm);
  scorers.slor = std::make_shared<dataset::SlorScorer>(lm, uni);
  if (!ctx.opts.prism_src.empty()) scorers.prism_src = std::make_shared<dataset::HttpSentenceScorer>(ctx.opts.prism_src);
  const auto report = dataset::evaluate_revision(corpus, rev, scorers);
  return {{"report", report.to_json()}};
}

// ---- emotion ----

ordered_json run_emotion_train(CommandContext& ctx) {
  const auto& cfg = ctx.config;
  emotion::FinetuneConfig fc;
  std::vector<std::string> corpus;
  std::size_t i = 0;
  for (const auto& st : cfg.at("stages")) {
    emotion::FinetuneStage stage;
    stage.name = st.value("name", "stage" + std::to_string(i + 1));
    stage.data = labeled_file(resolve(ctx, st.at("data").get<std::string>()), st);
    stage.hyper = train_stage(ctx, st, 2 + i);
    for (const auto& ex : stage.data) corpus.push_back(ex.text);
    fc.stages.push_back(std::move(stage));
    ++i;
  }
  fc.head_seed = ctx.opts.seed ? *ctx.opts.seed + 1 : cfg.value("head_seed", fc.head_seed);
  auto encoder = build_encoder(ctx, cfg.value("encoder", json::object()), build_tokenizer(corpus, cfg), 0);
  auto result = emotion::finetune(*encoder, fc);
  ordered_json epochs = ordered_json::array();
  for (const auto& e : result.log) {
    ctx.emit(epoch_json(e));
    epochs.push_back(epoch_json(e));
  }
  ordered_json j{{"weights_sha256", result.model.weights_hash()}, {"epochs", epochs}};
  if (const auto test = optional_config_path(ctx, "testset"); !test.empty()) {
    j["test"] = metrics_json(emotion::evaluate(result.model, labeled_file(test, split_of(cfg, "testset_split"))));
  }
  const auto dir = out_dir(ctx);
  result.model.save(dir);
  j["model"] = dir.string();
  return j;
}

ordered_json run_emotion_eval(CommandContext& ctx) {
  const auto model = classify::TextClassifier::load(ctx.opts.model);
  const auto test = dataset::load_emotion_dataset(ctx.opts.testset);
  return {{"metrics", metrics_json(emotion::evaluate(model, test))}};
}

ordered_json run_emotion_predict(CommandContext& ctx) {
  const auto model = classify::TextClassifier::load(ctx.opts.model);
  const auto p = emotion::classify(model, ctx.opts.text);
  ordered_json probs;
  for (auto label : kEmotionOrder) probs[std::string(to_string(label))] = p.distribution[label];
  return {{"label", std::string(to_string(p.label()))}, {"probs", probs},
          {"logits", p.logits}, {"truncated", p.truncated}};
}

// ---- distill ----

const json& stage_part(const json& st, const char* who) {
  return st.contains(who) ? st.at(who) : st;
}

ordered_json run_distill(CommandContext& ctx) {
  const auto& cfg = ctx.config;
  emotion::FinetuneConfig teacher_cfg;
  distill::DistillConfig dc;
  std::vector<std::string> corpus;
  std::size_t i = 0;
  for (const auto& st : cfg.at("stages")) {
    const std::string name = st.value("name", "stage" + std::to_string(i + 1));
    std::vector<LabeledText> data;
    if (st.contains("data")) data = labeled_file(resolve(ctx, st.at("data").get<std::string>()), st);
    for (const auto& ex : data) corpus.push_back(ex.text);
    teacher_cfg.stages.push_back({name, data, train_stage(ctx, stage_part(st, "teacher"), 10 + i)});
    dc.stages.push_back({name, data, train_stage(ctx, stage_part(st, "student"), 20 + i)});
    ++i;
  }
  const json teacher_node = cfg.value("teacher", json::object());
  const json student_node = cfg.value("student", json::object());
  teacher_cfg.head_seed = ctx.opts.seed ? *ctx.opts.seed + 1 : teacher_node.value("head_seed", teacher_cfg.head_seed);
  dc.temperature = cfg.value("temperature", dc.temperature);
  dc.scale_by_t2 = cfg.value("scale_by_t2", dc.scale_by_t2);
  dc.seed = seed_for(ctx, cfg, dc.seed, 3);
  if (const auto ev = optional_config_path(ctx, "eval"); !ev.empty()) {
    dc.eval_set = labeled_file(ev, split_of(cfg, "eval_split"));
  }
  auto tok = build_tokenizer(corpus, cfg);
  auto teacher_enc = build_encoder(ctx, teacher_node.value("encoder", json::object()), tok, 0);
  auto student_enc = build_encoder(ctx, student_node.value("encoder", json::object()), tok, 4);

  auto result = distill::distill_pipeline(*teacher_enc, teacher_cfg, *student_enc, dc);

  for (const auto& e : result.teacher_log) {
    auto r = epoch_json(e);
    r["record"] = "teacher_epoch";
    ctx.emit(r);
  }
  ordered_json student_epochs = ordered_json::array();
  for (const auto& e : result.student_log) {
    ordered_json r{{"record", "student_epoch"}, {"stage", e.stage}, {"epoch", e.epoch},
                   {"l_ce", e.loss.l_ce}, {"l_dist", e.loss.l_dist}, {"l_cos", e.loss.l_cos},
                   {"l_total", e.loss.l_total}};
    ctx.emit(r);
    student_epochs.push_back(r);
  }
  ordered_json stages = ordered_json::array();
  for (const auto& m : result.stage_metrics) {
    ordered_json r{{"record", "stage_metrics"}, {"stage", m.stage}, {"name", m.name}};
    r["teacher"] = m.teacher ? metrics_json(*m.teacher) : ordered_json(nullptr);
    r["student"] = m.student ? metrics_json(*m.student) : ordered_json(nullptr);
    ctx.emit(r);
    stages.push_back(r);
  }
  ordered_json j{{"teacher_sha256", result.teacher.weights_hash()},
                 {"student_sha256", result.student.weights_hash()},
                 {"stages", stages},
                 {"final_student_loss", student_epochs.empty() ? ordered_json(nullptr) : student_epochs.back()}};
  if (!result.stage_metrics.empty() && result.stage_metrics.back().teacher && result.stage_metrics.back().student) {
    const double t = result.stage_metrics.back().teacher->accuracy;
    j["accuracy_retention"] = t > 0 ? result.stage_metrics.back().student->accuracy / t : 0.0;
  }
  if (!ctx.opts.out.empty()) {
    const std::filesystem::path dir(ctx.opts.out);
    result.teacher.save(dir / "teacher");
    result.student.save(dir / "student");
    j["out"] = dir.string();
  }
  return j;
}

ordered_json run_distill_bench(CommandContext& ctx) {
  const auto teacher = classify::TextClassifier::load(ctx.opts.teacher);
  const auto student = classify::TextClassifier::load(ctx.opts.student);
  std::vector<std::string> inputs;
  for (const auto& ex : dataset::load_emotion_dataset(ctx.opts.inputs).examples) inputs.push_back(ex.text);
  auto time = [&](const classify::TextClassifier& m) {
    return distill::measure_latency([&](const std::string& s) { (void)m.logits(s); }, inputs,
                                    ctx.opts.warmup, ctx.opts.repeats);
  };
  const auto t = time(teacher);
  const auto s = time(student);
  return {{"teacher", t.to_json()}, {"student", s.to_json()},
          {"speedup", s.mean > 0 ? t.mean / s.mean : 0.0}};
}

// ---- score ----

std::shared_ptr<const classify::TextClassifier> load_shared(const std::string& dir) {
  return std::make_shared<const classify::TextClassifier>(classify::TextClassifier::load(dir));
}

ordered_json run_score_empathy(CommandContext& ctx) {
  empathy::ClassifierEmpathyScorer scorer(load_shared(ctx.opts.model));
  const auto s = empathy::score_empathy(scorer, ctx.opts.text);
  return {{"logits", s.logits}, {"label", s.label}, {"reward", empathy::empathy_reward(scorer, ctx.opts.text)}};
}

ordered_json run_score_semantic(CommandContext& ctx) {
  empathy::ClassifierSemanticScorer scorer(load_shared(ctx.opts.model));
  const double r = empathy::semantic_reward(scorer, ctx.opts.text, SemanticClass::checked(ctx.opts.base));
  const auto logits = scorer.logits(ctx.opts.text);
  const auto best = std::max_element(logits.begin(), logits.end()) - logits.begin();
  return {{"base", ctx.opts.base}, {"reward", r}, {"predicted", best}};
}

using ExamplesFn = std::vector<LabeledText> (*)(std::span<const dataset::RewritingExample>);

template <typename Train>
ordered_json train_scorer(CommandContext& ctx, ExamplesFn examples, bool empathy_labels, Train train) {
  const auto& cfg = ctx.config;
  const auto data = dataset::load_rewriting_dataset(config_path(ctx, "data"));
  std::vector<std::string> corpus;
  for (const auto& r : data.examples) {
    corpus.push_back(r.rewriting);
    corpus.push_back(r.base_text);
  }
  const auto split = empathy::split_80_10_10(examples(data.examples), seed_for(ctx, cfg.value("split", json::object()), 1, 7));
  std::vector<dataset::RewritingExample> train_set;
  for (const auto& ex : split.train) {
    dataset::RewritingExample r;
    r.rewriting = ex.text;
    if (empathy_labels) r.empathy_label = ex.label; else r.base_id = ex.label;
    train_set.push_back(std::move(r));
  }
  auto encoder = build_encoder(ctx, cfg.value("encoder", json::object()), build_tokenizer(corpus, cfg), 0);
  const auto hyper = train_stage(ctx, cfg.value("train", json::object()), 2);
  const auto model = train(*encoder, train_set, hyper, ctx.opts.seed ? *ctx.opts.seed + 1 : cfg.value("head_seed", std::uint64_t{5}));
  ordered_json j{{"train_examples", split.train.size()}, {"weights_sha256", model.weights_hash()}};
  j["train"] = metrics_json(classify::evaluate_classifier(model, split.train));
  if (!split.test.empty()) j["test"] = metrics_json(classify::evaluate_classifier(model, split.test));
  const auto dir = out_dir(ctx);
  model.save(dir);
  j["model"] = dir.string();
  return j;
}

ordered_json run_train_empathy(CommandContext& ctx) {
  return train_scorer(ctx, &empathy::empathy_examples, true,
                      [](const auto& enc, const auto& data, const auto& hyper, std::uint64_t seed) {
                        return empathy::train_empathy_classifier(enc, data, hyper, seed);
                      });
}

ordered_json run_train_semantic(CommandContext& ctx) {
  return train_scorer(ctx, &empathy::semantic_examples, false,
                      [](const auto& enc, const auto& data, const auto& hyper, std::uint64_t seed) {
                        return empathy::train_semantic_classifier(enc, data, hyper, seed);
                      });
}

}  // namespace

void register_data_commands(std::vector<CommandSpec>& out) {
  using O = OptionSet;
  out.push_back({"dataset", "validate", "Parse and validate a record file", O::path | O::schema, false,
                 {"dataset.load_ep_dataset"}, run_dataset_validate});
  out.push_back({"dataset", "stats", "Per-class and per-field counts", O::path | O::schema, false, {}, run_dataset_stats});
  out.push_back({"dataset", "eval-fluency", "Mean PPL, SLOR and optional PRISM-SRC of one revision",
                 O::path | O::schema | O::revision | O::prism_src | O::reference, false,
                 {"dataset.compute_perplexity", "dataset.compute_slor", "dataset.evaluate_revision"},
                 run_dataset_eval_fluency});
  out.push_back({"emotion", "train", "Single or double finetuning", O::none, true, {"emotion.finetune"}, run_emotion_train});
  out.push_back({"emotion", "eval", "Accuracy, F1 and confusion on a test set", O::model | O::testset, false,
                 {"emotion.evaluate"}, run_emotion_eval});
  out.push_back({"emotion", "predict", "Emotion distribution for one text", O::model | O::text, false,
                 {"emotion.classify"}, run_emotion_predict});
  out.push_back({"distill", "run", "Two-stage teacher finetuning with student distillation", O::none, true,
                 {"distill.softmax_temperature", "distill.ce_loss", "distill.dist_loss", "distill.cos_loss",
                  "distill.triple_loss", "distill.distill_pipeline"},
                 run_distill});
  out.push_back({"distill", "bench", "Single-input latency of teacher and student",
                 O::teacher | O::student | O::inputs | O::bench, false, {"distill.measure_latency"}, run_distill_bench});
  out.push_back({"score", "empathy", "Empathy logits and reward", O::model | O::text, false,
                 {"empathy.empathy_reward"}, run_score_empathy});
  out.push_back({"score", "semantic", "Semantic reward against a base utterance", O::model | O::text | O::base,
                 false, {"empathy.semantic_reward"}, run_score_semantic});
  out.push_back({"score", "train-empathy", "Train the 3-level empathy classifier", O::none, true,
                 {"empathy.train_empathy_classifier"}, run_train_empathy});
  out.push_back({"score", "train-semantic", "Train the 45-way semantic classifier", O::none, true,
                 {"empathy.train_semantic_classifier"}, run_train_semantic});
}

}  // namespace sat::cli
