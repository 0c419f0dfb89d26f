#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "common.hpp"
#include "sat/hash.hpp"
#include "sat/io.hpp"
#include "sat/log.hpp"

namespace sat::cli {

const std::string& need(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string("missing required option ") + flag);
  return value;
}

namespace {

std::filesystem::path config_dir(const CommandContext& ctx) {
  return std::filesystem::path(ctx.opts.config).parent_path();
}

}  // namespace

std::filesystem::path resolve(const CommandContext& ctx, const std::string& p) {
  const std::filesystem::path path(p);
  if (path.is_absolute() || ctx.opts.config.empty()) return path;
  return config_dir(ctx) / path;
}

std::filesystem::path config_path(const CommandContext& ctx, const char* key) {
  if (!ctx.config.contains(key)) throw ConfigurationError(std::string("config needs '") + key + "'");
  return resolve(ctx, ctx.config.at(key).get<std::string>());
}

std::filesystem::path optional_config_path(const CommandContext& ctx, const char* key) {
  if (!ctx.config.contains(key)) return {};
  return resolve(ctx, ctx.config.at(key).get<std::string>());
}

std::uint64_t seed_for(const CommandContext& ctx, const json& node, std::uint64_t fallback,
                       std::uint64_t offset) {
  if (ctx.opts.seed) return *ctx.opts.seed + offset;
  return node.is_object() ? node.value("seed", fallback) : fallback;
}

classify::TrainStage train_stage(const CommandContext& ctx, const json& node, std::uint64_t offset) {
  classify::TrainStage s;
  s.epochs = node.value("epochs", s.epochs);
  s.learning_rate = node.value("learning_rate", s.learning_rate);
  s.batch_size = node.value("batch_size", s.batch_size);
  s.seed = seed_for(ctx, node, s.seed, offset);
  if (s.epochs < 0 || s.batch_size < 1) throw ConfigurationError("epochs must be >= 0 and batch_size >= 1");
  return s;
}

ordered_json metrics_json(const classify::ClassifierMetrics& m) {
  return {{"accuracy", m.accuracy},     {"macro_f1", m.macro_f1}, {"weighted_f1", m.weighted_f1},
          {"per_class_f1", m.per_class_f1}, {"confusion", m.confusion}, {"total", m.total}};
}

ordered_json epoch_json(const classify::EpochLog& e) {
  return {{"record", "epoch"}, {"stage", e.stage}, {"epoch", e.epoch}, {"mean_loss", e.mean_loss}};
}

std::filesystem::path out_dir(const CommandContext& ctx) {
  return need(ctx.opts.out, "--out");
}

const std::vector<CommandSpec>& registry() {
  static const std::vector<CommandSpec> specs = [] {
    std::vector<CommandSpec> v;
    register_data_commands(v);
    register_generation_commands(v);
    register_store_commands(v);
    return v;
  }();
  return specs;
}

const std::vector<std::string>& module_operations() {
  static const std::vector<std::string> ops = {
      "dataset.load_ep_dataset",
      "dataset.compute_perplexity",
      "dataset.compute_slor",
      "dataset.evaluate_revision",
      "emotion.finetune",
      "emotion.classify",
      "emotion.evaluate",
      "distill.softmax_temperature",
      "distill.ce_loss",
      "distill.dist_loss",
      "distill.cos_loss",
      "distill.triple_loss",
      "distill.distill_pipeline",
      "distill.measure_latency",
      "empathy.train_empathy_classifier",
      "empathy.empathy_reward",
      "empathy.train_semantic_classifier",
      "empathy.semantic_reward",
      "rl.repetition_penalty",
      "rl.fluency_reward",
      "rl.total_reward",
      "rl.warm_start",
      "rl.ppo_train",
      "rl.generate_candidates",
      "sl.render_prompt",
      "sl.ec_loss",
      "sl.sl_train",
      "store.ingest",
      "store.review",
      "store.retrieve",
      "engine.start_session",
      "engine.step",
      "engine.recommend",
      "engine.post_protocol_branch",
      "service.http_api",
      "service.purge",
      "service.questionnaire",
  };
  return ops;
}

namespace {

void add_options(CLI::App& app, const CommandSpec& spec, Options& o) {
  app.add_option("--seed", o.seed, "Override every seed in the config");
  app.add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--out", o.out, "Output path");
  const auto s = spec.options;
  if (has(s, OptionSet::path)) app.add_option("path", o.path, "Input file")->required();
  if (has(s, OptionSet::schema)) {
    app.add_option("--schema", o.schema, "Record schema")->check(CLI::IsMember({"emotion", "rewriting"}));
  }
  if (has(s, OptionSet::revision)) {
    app.add_option("--revision", o.revision, "Revision to score")->check(CLI::IsMember({"base", "v1", "v2"}));
  }
  if (has(s, OptionSet::prism_src)) app.add_option("--prism-src", o.prism_src, "PRISM-SRC scorer endpoint");
  if (has(s, OptionSet::reference)) app.add_option("--reference", o.reference, "Corpus for the fluency models");
  if (has(s, OptionSet::model)) app.add_option("--model", o.model, "Model directory")->required();
  if (has(s, OptionSet::testset)) app.add_option("--testset", o.testset, "Labelled records")->required();
  if (has(s, OptionSet::text)) app.add_option("--text", o.text, "Input text")->required();
  if (has(s, OptionSet::base)) app.add_option("--base", o.base, "Semantic class id")->required();
  if (has(s, OptionSet::teacher)) app.add_option("--teacher", o.teacher, "Teacher model directory")->required();
  if (has(s, OptionSet::student)) app.add_option("--student", o.student, "Student model directory")->required();
  if (has(s, OptionSet::inputs)) app.add_option("--inputs", o.inputs, "Emotion records to time")->required();
  if (has(s, OptionSet::bench)) {
    app.add_option("--warmup", o.warmup, "Untimed passes");
    app.add_option("--repeats", o.repeats, "Timed passes");
  }
  if (has(s, OptionSet::n_per_base)) app.add_option("--n-per-base", o.n_per_base, "Candidates per base")->required();
  if (has(s, OptionSet::generator)) app.add_option("--generator", o.generator, "Generator directory")->required();
  if (has(s, OptionSet::lang)) app.add_option("--lang", o.lang, "Language")->check(CLI::IsMember({"en", "zh"}));
  if (has(s, OptionSet::temperature)) app.add_option("--temperature", o.temperature, "Sampling temperature; 0 is greedy");
  if (has(s, OptionSet::pool)) app.add_option("--pool", o.pool, "Response pool log")->required();
  if (has(s, OptionSet::id)) app.add_option("--id", o.id, "Candidate id")->required();
  if (has(s, OptionSet::decision)) {
    app.add_option("--decision", o.decision, "approve or reject")->required()->check(CLI::IsMember({"approve", "reject"}));
  }
  if (has(s, OptionSet::reviewer)) app.add_option("--reviewer", o.reviewer, "Reviewer name")->required();
  if (has(s, OptionSet::note)) app.add_option("--note", o.note, "Reviewer note");
  if (has(s, OptionSet::approved)) app.add_flag("--approved", o.approved, "Export approved candidates");
  if (has(s, OptionSet::k)) app.add_option("--k", o.k, "Number of results");
}

std::string usage_footer() {
  std::ostringstream ss;
  ss << "Commands:\n";
  for (const auto& c : registry()) ss << "  " << c.group << ' ' << c.name << "  " << c.description << '\n';
  ss << "Exit codes: 0 success, 1 operational error, 2 usage error.";
  return ss.str();
}

}  // namespace

CommandResult dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Self-attachment chatbot toolchain", "satctl"};
  app.require_subcommand(1);
  app.footer(usage_footer());

  Options opts;
  std::map<std::string, CLI::App*> groups;
  std::vector<std::pair<CLI::App*, const CommandSpec*>> leaves;
  for (const auto& spec : registry()) {
    CLI::App* leaf = nullptr;
    if (spec.name.empty()) {
      leaf = app.add_subcommand(spec.group, spec.description);
    } else {
      auto& g = groups[spec.group];
      if (!g) {
        g = app.add_subcommand(spec.group, spec.group + " commands");
        g->require_subcommand(1);
      }
      leaf = g->add_subcommand(spec.name, spec.description);
    }
    add_options(*leaf, spec, opts);
    leaves.emplace_back(leaf, &spec);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return {kExitOk, {}};
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return {kExitOk, {}};
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    err << app.help() << '\n';
    return {kExitUsage, {}};
  }

  const CommandSpec* chosen = nullptr;
  for (const auto& [leaf, spec] : leaves) {
    if (leaf->parsed()) chosen = spec;
  }
  if (!chosen) {
    err << app.help() << '\n';
    return {kExitUsage, {}};
  }
  const std::string command = chosen->name.empty() ? chosen->group : chosen->group + " " + chosen->name;

  auto emit = [&out](const ordered_json& rec) { out << rec.dump() << '\n' << std::flush; };
  try {
    CommandContext ctx{opts, json::object(), "", emit};
    if (!opts.config.empty()) {
      ctx.config = io::read_json(opts.config);
      ctx.config_sha256 = sha256_file(opts.config);
    } else if (chosen->requires_config) {
      throw UsageError("missing required option --config");
    }
    ordered_json body = chosen->run(ctx);
    ordered_json summary{{"record", "summary"}, {"command", command}};
    summary["config_sha256"] = ctx.config_sha256.empty() ? ordered_json(nullptr) : ordered_json(ctx.config_sha256);
    summary["seed"] = opts.seed ? ordered_json(*opts.seed) : ordered_json(nullptr);
    for (auto& [k, v] : body.items()) summary[k] = v;
    emit(summary);
    return {kExitOk, summary};
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return {kExitUsage, {}};
  } catch (const std::exception& e) {
    ordered_json rec{{"record", "error"}, {"command", command}, {"message", e.what()}};
    err << rec.dump() << '\n';
    return {kExitError, rec};
  }
}

int main_entry(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args, std::cout, std::cerr).exit_code;
}

}  // namespace sat::cli
