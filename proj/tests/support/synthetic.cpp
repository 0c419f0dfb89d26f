#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "sat/text.hpp"

namespace sat::testkit {
namespace {

const std::vector<std::vector<std::string>>& keywords() {
  static const std::vector<std::vector<std::string>> k = {
      {"storm", "shadow", "tremble", "alarm", "dread"},
      {"shout", "slam", "burn", "clash", "rage"},
      {"rain", "grey", "empty", "tears", "alone"},
      {"sun", "laugh", "dance", "bloom", "glow"},
  };
  return k;
}

std::vector<std::string> fillers() {
  std::vector<std::string> out;
  const char* cons = "bdfgklmnprst";
  const char* vow = "aeiou";
  for (int i = 0; out.size() < 80; ++i) {
    std::string w;
    w += cons[i % 12];
    w += vow[(i / 12) % 5];
    w += cons[(i / 60) * 5 + 2];
    w += vow[(i * 3 + 1) % 5];
    out.push_back(w);
  }
  return out;
}

const std::vector<std::string> kTopics = {"sleep", "work", "family", "breathing", "friends",
                                          "walking", "music", "food", "memories"};
const std::vector<std::string> kActions = {"talk about", "think about", "plan", "write about", "focus on"};
const std::vector<std::string> kMild = {"okay ,", "alright ,", "so ,"};
const std::vector<std::string> kStrong = {"i understand ,", "i understand how you feel ,",
                                          "i really understand ,"};
const std::vector<std::string> kTail = {"", " now", " today", " together"};

}  // namespace

std::vector<std::string> keyword_vocabulary() {
  std::vector<std::string> v;
  for (const auto& c : keywords()) v.insert(v.end(), c.begin(), c.end());
  const auto f = fillers();
  v.insert(v.end(), f.begin(), f.end());
  return v;
}

std::vector<LabeledText> keyword_task(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto fill = fillers();
  std::vector<LabeledText> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 4);
    std::vector<std::string> words;
    const int len = 6 + static_cast<int>(rng() % 5);
    const int nk = 1 + static_cast<int>(rng() % 2);
    for (int k = 0; k < nk; ++k) words.push_back(keywords()[static_cast<std::size_t>(label)][rng() % 5]);
    while (static_cast<int>(words.size()) < len) words.push_back(fill[rng() % fill.size()]);
    std::shuffle(words.begin(), words.end(), rng);
    std::string t;
    for (const auto& w : words) t += (t.empty() ? "" : " ") + w;
    out.push_back({t, label});
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

double bow_baseline_accuracy(std::span<const LabeledText> train, std::span<const LabeledText> test,
                             int num_classes) {
  std::vector<std::map<std::string, double>> counts(static_cast<std::size_t>(num_classes));
  std::vector<double> totals(static_cast<std::size_t>(num_classes), 0.0);
  std::vector<double> prior(static_cast<std::size_t>(num_classes), 0.0);
  std::set<std::string> vocab;
  for (const auto& ex : train) {
    prior[static_cast<std::size_t>(ex.label)] += 1;
    for (const auto& w : text::pretokenize(ex.text)) {
      counts[static_cast<std::size_t>(ex.label)][w] += 1;
      totals[static_cast<std::size_t>(ex.label)] += 1;
      vocab.insert(w);
    }
  }
  const double v = static_cast<double>(vocab.size()) + 1;
  std::size_t correct = 0;
  for (const auto& ex : test) {
    int best = 0;
    double best_score = -INFINITY;
    for (int c = 0; c < num_classes; ++c) {
      const auto cu = static_cast<std::size_t>(c);
      double s = std::log((prior[cu] + 1) / (static_cast<double>(train.size()) + num_classes));
      for (const auto& w : text::pretokenize(ex.text)) {
        const auto it = counts[cu].find(w);
        s += std::log(((it == counts[cu].end() ? 0.0 : it->second) + 1) / (totals[cu] + v));
      }
      if (s > best_score) {
        best_score = s;
        best = c;
      }
    }
    correct += best == ex.label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

std::string base_template(int cls) {
  const auto c = static_cast<std::size_t>(cls);
  return "let us " + kActions[c % kActions.size()] + " " + kTopics[c / kActions.size()] + " .";
}

std::string rewrite_at_level(int cls, int level, std::uint64_t variant) {
  const std::string base = base_template(cls);
  const std::string core = base.substr(0, base.size() - 2) + kTail[variant % kTail.size()] + " .";
  if (level == 0) return core;
  if (level == 1) return kMild[(variant / kTail.size()) % kMild.size()] + " " + core;
  return kStrong[(variant / kTail.size()) % kStrong.size()] + " " + core;
}

std::vector<dataset::RewritingExample> empathy_corpus(int per_level, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<dataset::RewritingExample> out;
  for (int cls = 0; cls < 45; ++cls) {
    for (int level = 0; level < 3; ++level) {
      for (int k = 0; k < per_level; ++k) {
        dataset::RewritingExample r;
        r.base_id = cls;
        r.base_text = base_template(cls);
        r.rewriting = rewrite_at_level(cls, level, rng() % 12);
        r.empathy_label = level;
        out.push_back(std::move(r));
      }
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

int count_marker(std::string_view t) {
  int n = 0;
  for (const auto& w : text::pretokenize(t)) n += w == kMarker ? 1 : 0;
  return n;
}

int nearest_template(std::string_view t) {
  int best = 0;
  double best_sim = -1;
  for (int c = 0; c < 45; ++c) {
    const double s = text::token_jaccard(t, base_template(c));
    if (s > best_sim) {
      best_sim = s;
      best = c;
    }
  }
  return best;
}

nn::TransformerConfig tiny_config(int layers, int hidden, std::uint64_t seed, int max_len) {
  nn::TransformerConfig c;
  c.layers = layers;
  c.hidden = hidden;
  c.heads = 2;
  c.ffn = hidden * 2;
  c.max_len = max_len;
  c.seed = seed;
  return c;
}

std::shared_ptr<const nn::Tokenizer> tokenizer_for(std::span<const LabeledText> data) {
  std::vector<std::string> corpus;
  for (const auto& ex : data) corpus.push_back(ex.text);
  return std::make_shared<const nn::Tokenizer>(nn::Tokenizer::build(corpus));
}

std::vector<LabeledText> take(std::span<const LabeledText> data, std::size_t from, std::size_t n) {
  const auto end = std::min(data.size(), from + n);
  return {data.begin() + static_cast<long>(from), data.begin() + static_cast<long>(end)};
}

}  // namespace sat::testkit
