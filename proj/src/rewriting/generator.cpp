#include "sat/rewriting/generator.hpp"

#include <algorithm>
#include <cmath>

#include "sat/error.hpp"
#include "sat/io.hpp"
#include "sat/text.hpp"

namespace sat::rewriting {
namespace fs = std::filesystem;
using nn::Matrix;
using nn::Tokenizer;

namespace {

constexpr double kMasked = -1e9;

Tensor make_mask(std::size_t vocab) {
  Matrix m = Matrix::Zero(1, static_cast<Eigen::Index>(vocab));
  for (int id = 0; id < Tokenizer::kNumReserved && id < static_cast<int>(vocab); ++id) {
    if (id != Tokenizer::kEos && id != Tokenizer::kUnk) m(0, id) = kMasked;
  }
  return Tensor::constant(std::move(m));
}

void check_prefix(std::span<const int> seq, std::size_t prefix_len) {
  if (prefix_len < 1 || prefix_len >= seq.size()) {
    throw DomainError("continuation needs 1 <= prefix_len < sequence length");
  }
}

}  // namespace

Generator::Generator(std::shared_ptr<const Tokenizer> tokenizer, nn::TransformerConfig cfg)
    : tokenizer_(std::move(tokenizer)) {
  if (!tokenizer_) throw ConfigurationError("generator requires a tokenizer");
  cfg.vocab_size = static_cast<int>(tokenizer_->size());
  stack_ = nn::TransformerStack(cfg);
  nn::Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  head_ = nn::Linear(cfg.hidden, cfg.vocab_size, rng);
  mask_ = make_mask(tokenizer_->size());
}

Generator::Generator(const Generator& other)
    : tokenizer_(other.tokenizer_), stack_(other.stack_), head_(other.head_), mask_(other.mask_) {
  nn::detach_params(*this);
}

Generator& Generator::operator=(const Generator& other) {
  if (this != &other) {
    Generator tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

Tensor Generator::logits(std::span<const int> ids) const {
  if (ids.empty()) throw DomainError("generator input is empty");
  if (static_cast<int>(ids.size()) > max_len()) throw DomainError("sequence exceeds context");
  return add_row(head_(stack_.forward(stack_.embed_ids(ids), true)), mask_);
}

Tensor Generator::continuation_log_probs(std::span<const int> seq, std::size_t prefix_len,
                                         double temperature) const {
  check_prefix(seq, prefix_len);
  if (!(temperature > 0.0)) throw DomainError("log-probs need a positive temperature");
  const auto m = static_cast<Eigen::Index>(seq.size() - prefix_len);
  Tensor rows = slice_rows(logits(seq.first(seq.size() - 1)),
                           static_cast<Eigen::Index>(prefix_len) - 1, m);
  if (temperature != 1.0) rows = scale(rows, 1.0 / temperature);
  return pick_per_row(log_softmax_rows(rows), seq.subspan(prefix_len));
}

Tensor Generator::continuation_distributions(std::span<const int> seq,
                                             std::size_t prefix_len) const {
  check_prefix(seq, prefix_len);
  const auto m = static_cast<Eigen::Index>(seq.size() - prefix_len);
  return softmax_rows(slice_rows(logits(seq.first(seq.size() - 1)),
                                 static_cast<Eigen::Index>(prefix_len) - 1, m));
}

Tensor Generator::lm_loss(std::span<const int> seq, std::size_t prefix_len) const {
  return neg(mean(continuation_log_probs(seq, prefix_len)));
}

Generation Generator::generate(std::span<const int> prompt, const SamplingConfig& sampling,
                               nn::Rng& rng) const {
  if (prompt.empty()) throw DomainError("empty prompt");
  if (sampling.max_new_tokens < 1) throw ConfigurationError("max_new_tokens must be >= 1");
  if (sampling.temperature < 0.0) throw ConfigurationError("temperature must be >= 0");
  nn::NoGradGuard guard;
  std::vector<int> seq(prompt.begin(), prompt.end());
  if (static_cast<int>(seq.size()) >= max_len()) throw DomainError("prompt fills the context");
  const int budget = std::min(sampling.max_new_tokens, max_len() - static_cast<int>(seq.size()));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Generation g;
  for (int step = 0; step < budget; ++step) {
    const Tensor l = logits(seq);
    Eigen::RowVectorXd row = l.value().row(l.rows() - 1);
    int next = 0;
    if (sampling.temperature == 0.0) {
      row.maxCoeff(&next);
    } else {
      row /= sampling.temperature;
      const double mx = row.maxCoeff();
      Eigen::RowVectorXd p = (row.array() - mx).exp();
      const double u = unif(rng) * p.sum();
      double acc = 0.0;
      next = static_cast<int>(p.size()) - 1;
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        acc += p(i);
        if (u < acc) {
          next = static_cast<int>(i);
          break;
        }
      }
    }
    if (next == Tokenizer::kEos) {
      g.finished = true;
      break;
    }
    seq.push_back(next);
    g.tokens.push_back(next);
  }
  g.text = tokenizer_->decode(g.tokens);
  if (!g.finished) {
    g.truncated = true;
    g.text = text::truncate_at_sentence_boundary(g.text);
  }
  return g;
}

void Generator::visit_params(const nn::ParamVisitor& v) {
  stack_.visit_params(v, "generator.");
  head_.visit_params(v, "generator.lm_head.");
}

std::string Generator::weights_hash() const {
  return nn::params_hash(const_cast<Generator&>(*this));
}

void Generator::save(const fs::path& dir) const {
  fs::create_directories(dir);
  io::write_json(dir / "config.json", {{"format", "sat.generator"},
                                       {"version", 1},
                                       {"model", stack_.config().to_json()}});
  io::write_json(dir / "vocab.json", tokenizer_->to_json());
  auto& self = const_cast<Generator&>(*this);
  io::write_json(dir / "weights.json", nn::params_to_json(nn::collect_params(self)));
}

Generator Generator::load(const fs::path& dir) {
  const auto config = io::read_json(dir / "config.json");
  if (config.value("format", "") != "sat.generator") {
    throw ValidationError(dir.string() + " is not a generator model directory");
  }
  auto tok = std::make_shared<const Tokenizer>(Tokenizer::from_json(io::read_json(dir / "vocab.json")));
  Generator g(tok, nn::TransformerConfig::from_json(config.at("model")));
  nn::params_from_json(io::read_json(dir / "weights.json"), nn::collect_params(g));
  return g;
}

Tokenizer build_generator_tokenizer(std::span<const dataset::RewritingExample> corpus) {
  std::vector<std::string> texts;
  for (const auto& r : corpus) {
    texts.push_back(r.base_text);
    texts.push_back(r.rewriting);
  }
  return Tokenizer::build(texts);
}

std::vector<int> render_rewrite_prompt(const Tokenizer& tok, std::string_view base, int max_len) {
  auto body = tok.encode(base);
  const std::size_t room = static_cast<std::size_t>(std::max(1, max_len / 2 - 2));
  if (body.size() > room) body.resize(room);
  std::vector<int> out{Tokenizer::kBos};
  out.insert(out.end(), body.begin(), body.end());
  out.push_back(Tokenizer::kSep);
  return out;
}

std::vector<int> append_target(std::vector<int> prompt, const Tokenizer& tok,
                               std::string_view target, int max_len) {
  auto body = tok.encode(target);
  const long room = static_cast<long>(max_len) - static_cast<long>(prompt.size()) - 1;
  if (room < 1) throw DomainError("prompt leaves no room for a target");
  if (static_cast<long>(body.size()) > room) body.resize(static_cast<std::size_t>(room));
  prompt.insert(prompt.end(), body.begin(), body.end());
  prompt.push_back(Tokenizer::kEos);
  return prompt;
}

std::vector<RewritePair> high_empathy_pairs(std::span<const dataset::RewritingExample> data) {
  std::vector<RewritePair> out;
  for (const auto& r : data) {
    if (r.empathy_label && *r.empathy_label == 2) out.push_back({r.base_text, r.rewriting, r.base_id});
  }
  return out;
}

std::vector<classify::EpochLog> warm_start(Generator& generator, std::span<const RewritePair> pairs,
                                           const classify::TrainStage& stage) {
  if (pairs.empty()) throw ValidationError("warm start needs at least one pair");
  std::vector<std::vector<int>> seqs;
  std::vector<std::size_t> prefix;
  for (const auto& p : pairs) {
    auto prompt = render_rewrite_prompt(generator.tokenizer(), p.source, generator.max_len());
    prefix.push_back(prompt.size());
    seqs.push_back(append_target(std::move(prompt), generator.tokenizer(), p.target,
                                 generator.max_len()));
  }
  return classify::run_epochs(nn::collect_params(generator), pairs.size(), stage, 0,
                              [&](std::size_t i) { return generator.lm_loss(seqs[i], prefix[i]); });
}

double mean_lm_loss(const Generator& generator, std::span<const RewritePair> pairs) {
  if (pairs.empty()) throw ValidationError("loss over an empty set");
  nn::NoGradGuard guard;
  double total = 0.0;
  for (const auto& p : pairs) {
    auto prompt = render_rewrite_prompt(generator.tokenizer(), p.source, generator.max_len());
    const std::size_t k = prompt.size();
    const auto seq = append_target(std::move(prompt), generator.tokenizer(), p.target,
                                   generator.max_len());
    total += generator.lm_loss(seq, k).item();
  }
  return total / static_cast<double>(pairs.size());
}

std::string greedy_rewrite(const Generator& generator, std::string_view base, int max_new_tokens) {
  nn::Rng rng(0);
  const auto prompt = render_rewrite_prompt(generator.tokenizer(), base, generator.max_len());
  return generator.generate(prompt, {0.0, max_new_tokens}, rng).text;
}

}  // namespace sat::rewriting
