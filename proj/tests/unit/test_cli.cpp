#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "sat/cli/satctl.hpp"
#include "sat/distill/pipeline.hpp"
#include "sat/emotion/emotion.hpp"
#include "sat/store/response_store.hpp"

using namespace sat;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::vector<json> records;
  std::string out;
  std::string err;
};

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("sat_cli_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

Run satctl(const std::vector<std::string>& args) {
  static int n = 0;
  const auto err_file = std::filesystem::temp_directory_path() / ("sat_cli_err_" + std::to_string(::getpid()) + "_" +
                                                                  std::to_string(n++));
  std::string cmd = SATCTL_PATH;
  for (const auto& a : args) cmd += " " + quote(a);
  cmd += " 2>" + quote(err_file.string());
  Run r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, got);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream e(err_file);
  std::stringstream ss;
  ss << e.rdbuf();
  r.err = ss.str();
  std::filesystem::remove(err_file);
  std::istringstream lines(r.out);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] != '{') continue;
    r.records.push_back(json::parse(line));
  }
  return r;
}

const json& summary(const Run& r) {
  static const json none;
  return r.records.empty() ? none : r.records.back();
}

std::vector<json> of_kind(const Run& r, const std::string& kind) {
  std::vector<json> out;
  for (const auto& rec : r.records) {
    if (rec.value("record", "") == kind) out.push_back(rec);
  }
  return out;
}

}  // namespace

TEST(Cli, HelpListsEveryCommand) {
  const auto r = satctl({"--help"});
  EXPECT_EQ(r.code, 0);
  for (const auto& spec : cli::registry()) {
    const std::string line = spec.name.empty() ? spec.group : spec.group + " " + spec.name;
    EXPECT_NE(r.out.find("  " + line + "  "), std::string::npos) << line;
  }
  EXPECT_NE(r.out.find("Exit codes"), std::string::npos);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(satctl({"frobnicate"}).code, 2);
  EXPECT_EQ(satctl({}).code, 2);
  EXPECT_EQ(satctl({"store"}).code, 2);
  EXPECT_EQ(satctl({"store", "frobnicate"}).code, 2);
  EXPECT_EQ(satctl({"distill", "run"}).code, 2);  // --config required
  EXPECT_EQ(satctl({"dataset", "validate"}).code, 2);
  EXPECT_EQ(satctl({"store", "review", "--pool", "p", "--id", "1", "--decision", "maybe", "--reviewer", "r"}).code, 2);
  const auto r = satctl({"frobnicate"});
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST(Cli, OperationalErrorsExitOne) {
  const auto r = satctl({"dataset", "validate", "/nonexistent/records.jsonl"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("\"record\":\"error\""), std::string::npos);
}

TEST(Cli, UniformFlagsOnEveryCommand) {
  for (const auto& spec : cli::registry()) {
    std::vector<std::string> args = {spec.group};
    if (!spec.name.empty()) args.push_back(spec.name);
    args.push_back("--help");
    const auto r = satctl(args);
    EXPECT_EQ(r.code, 0) << spec.group << ' ' << spec.name;
    for (const char* flag : {"--seed", "--config", "--out"}) {
      EXPECT_NE(r.out.find(flag), std::string::npos) << spec.group << ' ' << spec.name << " lacks " << flag;
    }
  }
}

TEST(Cli, RegistryIsExhaustive) {
  std::map<std::string, int> reached;
  std::set<std::string> commands;
  for (const auto& spec : cli::registry()) {
    EXPECT_TRUE(commands.insert(spec.group + " " + spec.name).second) << "duplicate command " << spec.group << ' ' << spec.name;
    EXPECT_TRUE(static_cast<bool>(spec.run));
    for (const auto& op : spec.operations) ++reached[op];
  }
  const auto& ops = cli::module_operations();
  EXPECT_EQ(std::set<std::string>(ops.begin(), ops.end()).size(), ops.size());
  for (const auto& op : ops) EXPECT_EQ(reached[op], 1) << op;
  for (const auto& [op, n] : reached) {
    EXPECT_NE(std::find(ops.begin(), ops.end(), op), ops.end()) << "unlisted operation " << op;
  }
  for (const char* g : {"dataset", "emotion", "distill", "score", "rl", "sl", "store", "serve"}) {
    EXPECT_TRUE(std::any_of(cli::registry().begin(), cli::registry().end(),
                            [&](const auto& s) { return s.group == g; }))
        << g;
  }
}

TEST(Cli, DatasetCommandsOnFixture) {
  const std::string fixture = std::string(SAT_FIXTURE_DIR) + "/ep_emotion_en.jsonl";
  const auto v = satctl({"dataset", "validate", fixture});
  ASSERT_EQ(v.code, 0) << v.err;
  EXPECT_EQ(summary(v).at("records"), 1181);
  EXPECT_EQ(summary(v).at("command"), "dataset validate");
  EXPECT_TRUE(summary(v).at("config_sha256").is_null());
  const auto s = satctl({"dataset", "stats", fixture, "--seed", "4"});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_EQ(summary(s).at("total"), 1181);
  EXPECT_EQ(summary(s).at("seed"), 4);
}

TEST(Cli, DistillRunSummaryMatchesLibraryRun) {
  const auto dir = scratch("distill");
  const std::string fixture = std::string(SAT_FIXTURE_DIR) + "/ep_emotion_en.jsonl";
  const json cfg = {
      {"stages", json::array({{{"name", "ep"},
                               {"data", fixture},
                               {"split", "train"},
                               {"teacher", {{"epochs", 1}, {"learning_rate", 3e-3}, {"batch_size", 32}}},
                               {"student", {{"epochs", 1}, {"learning_rate", 3e-3}, {"batch_size", 32}}}}})},
      {"teacher", {{"encoder", {{"layers", 2}, {"hidden", 16}, {"ffn", 32}, {"max_len", 24}}}}},
      {"student", {{"encoder", {{"layers", 1}, {"hidden", 8}, {"ffn", 16}, {"max_len", 24}}}}},
      {"temperature", 2.0},
      {"eval", fixture},
      {"eval_split", "test"}};
  const auto cfg_path = dir / "distill.json";
  std::ofstream(cfg_path) << cfg.dump(2);

  const auto r = satctl({"distill", "run", "--config", cfg_path.string(), "--seed", "5", "--out", (dir / "m").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto& s = summary(r);
  EXPECT_EQ(s.at("record"), "summary");
  EXPECT_EQ(s.at("config_sha256").get<std::string>().size(), 64u);
  EXPECT_TRUE(std::filesystem::exists(dir / "m" / "teacher"));
  EXPECT_TRUE(std::filesystem::exists(dir / "m" / "student"));

  // The summary restates the streamed records.
  const auto student_epochs = of_kind(r, "student_epoch");
  const auto stage_records = of_kind(r, "stage_metrics");
  ASSERT_FALSE(student_epochs.empty());
  EXPECT_EQ(s.at("final_student_loss"), student_epochs.back());
  EXPECT_EQ(s.at("stages"), json(stage_records));

  // Same run through the library.
  auto ds = dataset::load_emotion_dataset(fixture);
  const auto train = emotion::to_labeled(ds.filter(dataset::Split::train).examples);
  std::vector<std::string> corpus;
  for (const auto& ex : train) corpus.push_back(ex.text);
  auto tok = std::make_shared<const nn::Tokenizer>(nn::Tokenizer::build(corpus, 1));
  json tenc = cfg["teacher"]["encoder"], senc = cfg["student"]["encoder"];
  tenc["seed"] = 5;
  senc["seed"] = 9;
  auto teacher = classify::make_encoder(tenc, tok);
  auto student = classify::make_encoder(senc, tok);
  emotion::FinetuneConfig tc;
  tc.stages.push_back({"ep", train, {1, 3e-3, 32, 15}});
  tc.head_seed = 6;
  distill::DistillConfig dc;
  dc.stages.push_back({"ep", train, {1, 3e-3, 32, 25}});
  dc.temperature = 2.0;
  dc.seed = 8;
  dc.eval_set = emotion::to_labeled(ds.filter(dataset::Split::test).examples);
  const auto lib = distill::distill_pipeline(*teacher, tc, *student, dc);

  EXPECT_EQ(s.at("teacher_sha256"), lib.teacher.weights_hash());
  EXPECT_EQ(s.at("student_sha256"), lib.student.weights_hash());
  ASSERT_EQ(student_epochs.size(), lib.student_log.size());
  for (std::size_t i = 0; i < lib.student_log.size(); ++i) {
    EXPECT_EQ(student_epochs[i].at("l_ce").get<double>(), lib.student_log[i].loss.l_ce);
    EXPECT_EQ(student_epochs[i].at("l_dist").get<double>(), lib.student_log[i].loss.l_dist);
    EXPECT_EQ(student_epochs[i].at("l_cos").get<double>(), lib.student_log[i].loss.l_cos);
    EXPECT_EQ(student_epochs[i].at("l_total").get<double>(), lib.student_log[i].loss.l_total);
  }
  ASSERT_EQ(stage_records.size(), lib.stage_metrics.size());
  const auto& m = lib.stage_metrics.back();
  ASSERT_TRUE(m.teacher && m.student);
  EXPECT_EQ(stage_records.back().at("teacher").at("accuracy").get<double>(), m.teacher->accuracy);
  EXPECT_EQ(stage_records.back().at("student").at("macro_f1").get<double>(), m.student->macro_f1);
  EXPECT_DOUBLE_EQ(s.at("accuracy_retention").get<double>(), m.student->accuracy / m.teacher->accuracy);
  std::filesystem::remove_all(dir);
}

TEST(Cli, StoreIngestReviewExportRetrieve) {
  const auto dir = scratch("store");
  const auto batch_path = dir / "batch.jsonl";
  {
    std::ofstream out(batch_path);
    for (int i = 0; i < 4; ++i) {
      auto c = store::ResponseCandidate::pending(
          {"reply number " + std::to_string(i), Language::EN, SemanticClass::checked(7), store::Source::sl_generated},
          std::nullopt);
      out << c.to_json().dump() << '\n';
    }
  }
  const std::string pool = (dir / "pool.jsonl").string();
  auto r = satctl({"store", "ingest", batch_path.string(), "--pool", pool});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(summary(r).at("added"), 4);
  r = satctl({"store", "ingest", batch_path.string(), "--pool", pool});
  EXPECT_EQ(summary(r).at("added"), 0);
  EXPECT_EQ(summary(r).at("pool_size"), 4);

  const auto idx = store::ResponseStore::open(pool)->candidates(store::Status::pending);
  ASSERT_EQ(idx.size(), 4u);
  const auto first = std::to_string(idx[0].id), second = std::to_string(idx[1].id);
  r = satctl({"store", "review", "--pool", pool, "--id", first, "--decision", "approve", "--reviewer", "kim"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(summary(r).at("candidate").at("status"), "approved");
  EXPECT_EQ(satctl({"store", "review", "--pool", pool, "--id", second, "--decision", "reject", "--reviewer", "kim"}).code, 0);
  // Decisions are final.
  EXPECT_EQ(satctl({"store", "review", "--pool", pool, "--id", first, "--decision", "reject", "--reviewer", "x"}).code, 1);
  EXPECT_EQ(satctl({"store", "review", "--pool", pool, "--id", "999", "--decision", "approve", "--reviewer", "x"}).code, 1);

  EXPECT_EQ(satctl({"store", "export", "--pool", pool, "--out", (dir / "x.jsonl").string()}).code, 2);
  r = satctl({"store", "export", "--pool", pool, "--approved", "--out", (dir / "approved.jsonl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(summary(r).at("exported"), 1);
  const auto exported = store::ResponseStore::open(dir / "approved.jsonl");
  EXPECT_EQ(exported->size(), 1u);

  r = satctl({"store", "retrieve", "--pool", pool, "--base", "7", "--k", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_EQ(summary(r).at("results").size(), 1u);
  EXPECT_EQ(summary(r).at("results")[0].at("id"), idx[0].id);
  EXPECT_EQ(satctl({"store", "retrieve", "--pool", pool, "--base", "45"}).code, 1);
  std::filesystem::remove_all(dir);
}

TEST(Cli, InProcessDispatchReportsSummary) {
  std::ostringstream out, err;
  const std::string fixture = std::string(SAT_FIXTURE_DIR) + "/ep_emotion_en.jsonl";
  const auto r = cli::dispatch({"dataset", "validate", fixture}, out, err);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.summary.at("records"), 1181);
  EXPECT_EQ(json::parse(out.str()), json(r.summary));
  EXPECT_EQ(cli::dispatch({"nope"}, out, err).exit_code, 2);
}
