#include <fstream>
#include <map>
#include <random>

#include "common.hpp"
#include "sat/dataset/fluency.hpp"
#include "sat/empathy/scoring.hpp"
#include "sat/engine/content.hpp"
#include "sat/rewriting/rl.hpp"
#include "sat/rewriting/sl.hpp"

namespace sat::cli {
namespace {

using rewriting::Generator;

// Frozen reward models named by the config. ModelRewards keeps references,
// so everything lives behind one stable allocation.
struct RewardSetup {
  std::shared_ptr<const classify::TextClassifier> empathy_model;
  std::shared_ptr<const classify::TextClassifier> semantic_model;
  std::unique_ptr<empathy::ClassifierEmpathyScorer> empathy;
  std::unique_ptr<empathy::ClassifierSemanticScorer> semantic;
  std::unique_ptr<dataset::BigramLanguageModel> lm;
  std::unique_ptr<rewriting::ModelRewards> rewards;
  rewriting::RewardWeights weights;

  std::string hash() const {
    return empathy_model->weights_hash() + ":" + semantic_model->weights_hash();
  }
};

Language config_language(const CommandContext& ctx) {
  return language_from_string(ctx.config.value("language", ctx.opts.lang));
}

std::unique_ptr<RewardSetup> reward_setup(const CommandContext& ctx) {
  auto r = std::make_unique<RewardSetup>();
  r->empathy_model = std::make_shared<const classify::TextClassifier>(
      classify::TextClassifier::load(config_path(ctx, "empathy_model")));
  r->semantic_model = std::make_shared<const classify::TextClassifier>(
      classify::TextClassifier::load(config_path(ctx, "semantic_model")));
  r->empathy = std::make_unique<empathy::ClassifierEmpathyScorer>(r->empathy_model);
  r->semantic = std::make_unique<empathy::ClassifierSemanticScorer>(r->semantic_model);
  const auto corpus_ds = dataset::load_rewriting_dataset(config_path(ctx, "fluency_corpus"));
  std::vector<std::string> corpus;
  for (const auto& ex : corpus_ds.examples) corpus.push_back(ex.rewriting);
  r->lm = std::make_unique<dataset::BigramLanguageModel>(corpus);
  const Language lang = config_language(ctx);
  const auto sw_path = optional_config_path(ctx, "stopwords");
  auto sw = sw_path.empty() ? rewriting::StopwordSet::shipped(lang) : rewriting::StopwordSet::load(sw_path, lang);
  r->rewards = std::make_unique<rewriting::ModelRewards>(*r->empathy, *r->lm, *r->semantic, std::move(sw),
                                                         ctx.config.value("unit_penalty", 0.1));
  if (ctx.config.contains("weights")) r->weights = rewriting::RewardWeights::from_json(ctx.config.at("weights"));
  r->weights.validate();
  return r;
}

std::vector<rewriting::BaseUtterance> content_bases(Language lang) {
  const auto content = engine::ContentBundle::shipped();
  std::vector<rewriting::BaseUtterance> out;
  for (const auto& b : content.base_utterances) out.push_back({b.text.in(lang), lang, SemanticClass::checked(b.class_id)});
  return out;
}

void write_candidates(const std::filesystem::path& path, const std::vector<store::ResponseCandidate>& cands) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  for (const auto& c : cands) out << c.to_json().dump() << '\n';
  if (!out) throw Error("cannot write " + path.string());
}

// ---- rl ----

ordered_json run_rl_warm_start(CommandContext& ctx) {
  const auto& cfg = ctx.config;
  const auto data = dataset::load_rewriting_dataset(config_path(ctx, "data"));
  auto pairs = rewriting::high_empathy_pairs(data.examples);
  if (pairs.empty()) throw ValidationError("no high-empathy rewritings to warm start on");
  std::mt19937_64 rng(seed_for(ctx, cfg.value("split", json::object()), 1, 7));
  std::shuffle(pairs.begin(), pairs.end(), rng);
  const double frac = cfg.value("heldout_fraction", 0.1);
  const auto n_held = std::min(pairs.size() - 1, static_cast<std::size_t>(frac * static_cast<double>(pairs.size())));
  const std::vector<rewriting::RewritePair> held(pairs.begin(), pairs.begin() + static_cast<long>(n_held));
  const std::vector<rewriting::RewritePair> train(pairs.begin() + static_cast<long>(n_held), pairs.end());

  auto tok = std::make_shared<const nn::Tokenizer>(rewriting::build_generator_tokenizer(data.examples));
  auto gcfg = nn::TransformerConfig::from_json(cfg.value("generator", json::object()));
  gcfg.seed = seed_for(ctx, cfg.value("generator", json::object()), gcfg.seed, 0);
  Generator gen(tok, gcfg);
  ordered_json j{{"pairs", train.size()}, {"heldout", held.size()}};
  if (!held.empty()) j["heldout_loss_before"] = rewriting::mean_lm_loss(gen, held);
  for (const auto& e : rewriting::warm_start(gen, train, train_stage(ctx, cfg.value("train", json::object()), 1))) {
    ctx.emit(epoch_json(e));
  }
  if (!held.empty()) j["heldout_loss_after"] = rewriting::mean_lm_loss(gen, held);
  j["weights_sha256"] = gen.weights_hash();
  const auto dir = out_dir(ctx);
  gen.save(dir);
  j["model"] = dir.string();
  return j;
}

std::vector<rewriting::RlPrompt> rl_prompts(const CommandContext& ctx) {
  std::vector<rewriting::RlPrompt> out;
  if (const auto p = optional_config_path(ctx, "prompts"); !p.empty()) {
    std::map<int, std::string> seen;
    for (const auto& ex : dataset::load_rewriting_dataset(p).examples) seen.emplace(ex.base_id, ex.base_text);
    for (const auto& [id, text] : seen) out.push_back({text, SemanticClass::checked(id)});
  } else {
    for (const auto& b : content_bases(config_language(ctx))) out.push_back({b.text, b.base});
  }
  return out;
}

ordered_json run_rl_train(CommandContext& ctx) {
  const auto warm = Generator::load(config_path(ctx, "generator"));
  auto rewards = reward_setup(ctx);
  auto ppo = rewriting::PpoConfig::from_json(ctx.config.value("ppo", json::object()));
  ppo.seed = seed_for(ctx, ctx.config.value("ppo", json::object()), ppo.seed, 0);
  const auto prompts = rl_prompts(ctx);
  const std::string before = rewards->hash();
  auto result = rewriting::ppo_train(warm, prompts, rewriting::make_reward_fn(*rewards->rewards, rewards->weights), ppo,
                                     [&](const rewriting::PpoStepLog& s) {
                                       ordered_json r{{"record", "ppo_step"}};
                                       for (auto& [k, v] : s.to_json().items()) r[k] = v;
                                       ctx.emit(r);
                                     });
  const std::string after = rewards->hash();
  ordered_json j{{"steps", result.log.size()}, {"prompts", prompts.size()}, {"config", ppo.to_json()}};
  if (!result.log.empty()) {
    j["first_mean_reward"] = result.log.front().mean_reward;
    j["last_mean_reward"] = result.log.back().mean_reward;
  }
  j["reward_models_sha256_before"] = before;
  j["reward_models_sha256_after"] = after;
  j["reward_models_frozen"] = before == after;
  j["policy_sha256"] = result.policy.weights_hash();
  const auto dir = out_dir(ctx);
  result.policy.save(dir);
  j["model"] = dir.string();
  return j;
}

rewriting::CandidateConfig candidate_config(const CommandContext& ctx) {
  rewriting::CandidateConfig cc;
  if (ctx.opts.n_per_base < 1) throw UsageError("--n-per-base must be at least 1");
  cc.n_per_base = ctx.opts.n_per_base;
  cc.sampling.temperature = ctx.opts.temperature;
  cc.sampling.max_new_tokens = ctx.config.value("max_new_tokens", cc.sampling.max_new_tokens);
  cc.seed = seed_for(ctx, ctx.config, cc.seed, 0);
  return cc;
}

ordered_json summarize_candidates(const CommandContext& ctx, const std::vector<store::ResponseCandidate>& cands) {
  const std::filesystem::path out = need(ctx.opts.out, "--out");
  write_candidates(out, cands);
  double mean_total = 0.0;
  for (const auto& c : cands) mean_total += c.reward ? c.reward->total : 0.0;
  return {{"candidates", cands.size()}, {"mean_total_reward", cands.empty() ? 0.0 : mean_total / static_cast<double>(cands.size())},
          {"out", out.string()}};
}

ordered_json run_rl_generate(CommandContext& ctx) {
  const auto gen = Generator::load(ctx.opts.generator);
  auto rewards = reward_setup(ctx);
  const auto bases = content_bases(language_from_string(ctx.opts.lang));
  const auto cands = rewriting::generate_candidates(gen, bases, candidate_config(ctx),
                                                    rewriting::make_reward_fn(*rewards->rewards, rewards->weights),
                                                    store::Source::rl_generated);
  return summarize_candidates(ctx, cands);
}

// ---- sl ----

std::vector<rewriting::SlExample> sl_examples(std::span<const dataset::RewritingExample> data,
                                              const engine::ContentBundle& content) {
  std::vector<rewriting::SlExample> out;
  for (const auto& p : rewriting::high_empathy_pairs(data)) {
    out.push_back({rewriting::render_prompt(content.base(p.base_id).emotion, p.source), p.target});
  }
  return out;
}

ordered_json run_sl_train(CommandContext& ctx) {
  const auto& cfg = ctx.config;
  const auto start = Generator::load(config_path(ctx, "generator"));
  const auto data = dataset::load_rewriting_dataset(config_path(ctx, "data"));
  const auto content = engine::ContentBundle::shipped();
  const auto examples = sl_examples(data.examples, content);
  if (examples.empty()) throw ValidationError("no high-empathy rewritings to train on");

  std::optional<rewriting::ReheadedEmpathyView> view;
  if (cfg.value("use_ec", true)) {
    const auto three = classify::TextClassifier::load(config_path(ctx, "empathy_model"));
    std::vector<dataset::RewritingExample> annotated;
    for (const auto& r : data.examples) if (r.empathy_label) annotated.push_back(r);
    view.emplace(rewriting::ReheadedEmpathyView::train(three, annotated,
                                                       train_stage(ctx, cfg.value("rehead", json::object()), 5)));
  }
  std::vector<rewriting::SlPrompt> prompts;
  std::map<std::string, bool> seen;
  for (const auto& e : examples) {
    if (!seen.emplace(e.prompt.low_text, true).second) continue;
    prompts.push_back(e.prompt);
  }
  const std::string ec_before = view ? view->model().weights_hash() : "";
  ordered_json j{{"examples", examples.size()}, {"use_ec", view.has_value()}};
  if (view) j["mean_high_probability_before"] = rewriting::mean_high_probability(start, prompts, *view);
  auto result = rewriting::sl_train(start, examples, view ? &*view : nullptr,
                                    train_stage(ctx, cfg.value("train", json::object()), 1),
                                    [&](const rewriting::SlStepLog& s) {
                                      ordered_json r{{"record", "sl_step"}};
                                      for (auto& [k, v] : s.to_json().items()) r[k] = v;
                                      ctx.emit(r);
                                    });
  if (view) {
    j["mean_high_probability_after"] = rewriting::mean_high_probability(result.generator, prompts, *view);
    j["ec_frozen"] = ec_before == view->model().weights_hash();
  }
  j["steps"] = result.log.size();
  j["weights_sha256"] = result.generator.weights_hash();
  const auto dir = out_dir(ctx);
  result.generator.save(dir);
  j["model"] = dir.string();
  return j;
}

ordered_json run_sl_generate(CommandContext& ctx) {
  const auto gen = Generator::load(ctx.opts.generator);
  auto rewards = reward_setup(ctx);
  const auto content = engine::ContentBundle::shipped();
  const auto bases = content_bases(language_from_string(ctx.opts.lang));
  auto render = [&](const rewriting::BaseUtterance& b) {
    return rewriting::prompt_ids(gen.tokenizer(),
                                 rewriting::render_prompt(content.base(b.base.class_id).emotion, b.text), gen.max_len());
  };
  const auto cands = rewriting::generate_candidates(gen, bases, candidate_config(ctx),
                                                    rewriting::make_reward_fn(*rewards->rewards, rewards->weights),
                                                    store::Source::sl_generated, render);
  return summarize_candidates(ctx, cands);
}

}  // namespace

void register_generation_commands(std::vector<CommandSpec>& out) {
  using O = OptionSet;
  out.push_back({"rl", "warm-start", "Supervised warm start on high-empathy pairs", O::none, true,
                 {"rl.warm_start"}, run_rl_warm_start});
  out.push_back({"rl", "train", "PPO against the composite reward", O::none, true,
                 {"rl.repetition_penalty", "rl.fluency_reward", "rl.total_reward", "rl.ppo_train"}, run_rl_train});
  out.push_back({"rl", "generate", "Pending candidates from an RL generator",
                 O::n_per_base | O::generator | O::lang | O::temperature, true, {"rl.generate_candidates"},
                 run_rl_generate});
  out.push_back({"sl", "train", "Prompted finetuning with LM and empathy-classifier losses", O::none, true,
                 {"sl.render_prompt", "sl.ec_loss", "sl.sl_train"}, run_sl_train});
  out.push_back({"sl", "generate", "Pending candidates from an SL generator",
                 O::n_per_base | O::generator | O::lang | O::temperature, true, {}, run_sl_generate});
}

}  // namespace sat::cli
