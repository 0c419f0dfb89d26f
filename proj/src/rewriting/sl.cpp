#include "sat/rewriting/sl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sat/distill/losses.hpp"
#include "sat/error.hpp"
#include "sat/log.hpp"
#include "sat/nn/optim.hpp"
#include "sat/text.hpp"

namespace sat::rewriting {
using nn::Matrix;
using nn::Tokenizer;

namespace {

std::string label_token(EmotionLabel e) { return "<" + std::string(to_string(e)) + ">"; }

}  // namespace

SlPrompt render_prompt(EmotionLabel emotion, std::string_view low_text) {
  if (low_text.empty()) throw ValidationError("low-empathy text is empty");
  SlPrompt p{emotion, std::string(low_text), {kEmoToken, label_token(emotion), kLowToken}};
  for (auto& t : text::pretokenize(low_text)) p.rendered.push_back(std::move(t));
  p.rendered.push_back(kHighToken);
  return p;
}

SlPrompt parse_prompt(std::span<const std::string> r) {
  if (r.size() < 4 || r[0] != kEmoToken || r[2] != kLowToken || r.back() != kHighToken) {
    throw ValidationError("not a rendered prompt");
  }
  std::optional<EmotionLabel> emotion;
  for (auto e : kEmotionOrder) {
    if (label_token(e) == r[1]) emotion = e;
  }
  if (!emotion) throw ValidationError("unknown emotion token " + r[1]);
  const auto body = r.subspan(3, r.size() - 4);
  for (const auto& t : body) {
    if (t == kEmoToken || t == kLowToken || t == kHighToken) {
      throw ValidationError("delimiter inside prompt text");
    }
  }
  return render_prompt(*emotion, text::detokenize(body));
}

std::vector<int> prompt_ids(const Tokenizer& tok, const SlPrompt& prompt, int max_len) {
  std::vector<int> body;
  for (std::size_t i = 3; i + 1 < prompt.rendered.size(); ++i) body.push_back(tok.id(prompt.rendered[i]));
  const std::size_t room = static_cast<std::size_t>(std::max(1, max_len / 2 - 4));
  if (body.size() > room) body.resize(room);
  std::vector<int> ids{Tokenizer::kBos, Tokenizer::kEmo, Tokenizer::emotion_token(prompt.emotion),
                       Tokenizer::kLow};
  ids.insert(ids.end(), body.begin(), body.end());
  ids.push_back(Tokenizer::kHigh);
  return ids;
}

int binary_empathy_label(int three_class_label) {
  if (three_class_label < 0 || three_class_label > 2) throw DomainError("empathy label outside 0..2");
  return three_class_label == 2 ? 1 : 0;
}

ReheadedEmpathyView::ReheadedEmpathyView(classify::TextClassifier binary)
    : model_(std::move(binary)) {
  if (model_.num_classes() != 2) throw ConfigurationError("binary view needs a two-class model");
  nn::set_trainable(model_, false);
}

ReheadedEmpathyView ReheadedEmpathyView::train(const classify::TextClassifier& three_class,
                                               std::span<const dataset::RewritingExample> annotated,
                                               const classify::TrainStage& hyper,
                                               std::uint64_t head_seed) {
  std::vector<classify::LabeledText> data;
  for (const auto& r : annotated) {
    if (r.empathy_label) data.push_back({r.rewriting, binary_empathy_label(*r.empathy_label)});
  }
  classify::require_all_classes(data, 2, "binary empathy view");
  classify::TextClassifier binary(three_class.encoder().clone(), {"low", "high"}, head_seed);
  nn::NamedParams head;
  binary.visit_params([&](const std::string& n, Tensor& p) {
    if (n.rfind("head.", 0) == 0) {
      head.emplace_back(n, p);
    } else {
      p.set_requires_grad(false);
    }
  });
  classify::run_epochs(head, data.size(), hyper, 0, [&](std::size_t i) {
    const auto out = binary.forward(data[i].text);
    const int label = data[i].label;
    return neg(pick_per_row(log_softmax_rows(out.logits), std::span<const int>(&label, 1)));
  });
  return ReheadedEmpathyView(std::move(binary));
}

Tensor ReheadedEmpathyView::high_probability(const Tensor& token_weights) const {
  return element(softmax_rows(model_.forward_soft(token_weights).logits), 0, 1);
}

double ReheadedEmpathyView::high_probability(std::string_view text) const {
  const auto l = model_.logits(text);
  const double mx = std::max(l[0], l[1]);
  const double a = std::exp(l[0] - mx), b = std::exp(l[1] - mx);
  return b / (a + b);
}

Matrix vocabulary_bridge(const Tokenizer& generator, const Tokenizer& classifier) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(generator.size()),
                          static_cast<Eigen::Index>(classifier.size()));
  for (int g = 0; g < static_cast<int>(generator.size()); ++g) {
    const int c = Tokenizer::is_special(g) ? g : classifier.id(generator.token(g));
    m(g, c) = 1.0;
  }
  return m;
}

double ec_loss(std::span<const double> high_probs) {
  if (high_probs.empty()) throw ValidationError("ec_loss of an empty batch");
  double total = 0.0;
  for (double p : high_probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("probability outside [0,1]");
    total -= std::log(std::max(p, distill::kProbabilityFloor));
  }
  return total / static_cast<double>(high_probs.size());
}

Tensor ec_loss(const std::vector<Tensor>& high_probs) {
  if (high_probs.empty()) throw ValidationError("ec_loss of an empty batch");
  std::vector<Tensor> terms;
  for (const auto& p : high_probs) {
    const double v = p.item();
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("probability outside [0,1]");
    terms.push_back(v < distill::kProbabilityFloor ? Tensor::scalar(std::log(distill::kProbabilityFloor))
                                                   : log(p));
  }
  return scale(sum(concat_rows(terms)), -1.0 / static_cast<double>(high_probs.size()));
}

nlohmann::json SlStepLog::to_json() const {
  return {{"step", step}, {"epoch", epoch}, {"l_lm", loss.l_lm}, {"l_ec", loss.l_ec},
          {"l_total", loss.l_total}};
}

std::vector<int> sl_sequence(const Tokenizer& tok, const SlExample& ex, int max_len,
                             std::size_t& prefix_len) {
  auto ids = prompt_ids(tok, ex.prompt, max_len);
  prefix_len = ids.size();
  return append_target(std::move(ids), tok, ex.target, max_len);
}

SlLossTerms sl_example_loss(const Generator& gen, std::span<const int> seq, std::size_t prefix_len,
                            const BinaryEmpathyView* ec, const Tensor& bridge) {
  SlLossTerms t;
  t.lm = gen.lm_loss(seq, prefix_len);
  if (!ec) {
    t.ec = Tensor::scalar(0.0);
    t.total = t.lm;
    return t;
  }
  // Soft relaxation: the classifier reads the teacher-forced output
  // distributions, mapped into its own vocabulary.
  const Tensor soft = matmul(gen.continuation_distributions(seq, prefix_len), bridge);
  t.ec = ec_loss(std::vector<Tensor>{ec->high_probability(soft)});
  t.total = add(t.lm, t.ec);
  return t;
}

SlResult sl_train(const Generator& start, std::span<const SlExample> data,
                  const BinaryEmpathyView* ec, const classify::TrainStage& hyper,
                  const std::function<void(const SlStepLog&)>& on_step) {
  if (data.empty()) throw ValidationError("sl_train needs at least one example");
  if (hyper.batch_size < 1) throw ConfigurationError("batch size must be >= 1");
  SlResult result{Generator(start), {}};
  Generator& gen = result.generator;
  const Tensor bridge =
      ec ? Tensor::constant(vocabulary_bridge(gen.tokenizer(), ec->tokenizer())) : Tensor();

  std::vector<std::vector<int>> seqs;
  std::vector<std::size_t> prefix;
  for (const auto& ex : data) {
    std::size_t k = 0;
    seqs.push_back(sl_sequence(gen.tokenizer(), ex, gen.max_len(), k));
    prefix.push_back(k);
  }

  nn::AdamConfig ac;
  ac.learning_rate = hyper.learning_rate;
  nn::Adam opt(nn::collect_params(gen), ac);
  nn::Rng rng(hyper.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  int step = 0;
  const auto bs = static_cast<std::size_t>(hyper.batch_size);
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t s = 0; s < order.size(); s += bs) {
      const std::size_t e = std::min(order.size(), s + bs);
      const double inv = 1.0 / static_cast<double>(e - s);
      opt.zero_grad();
      SlStepLog log;
      log.step = step;
      log.epoch = epoch;
      for (std::size_t k = s; k < e; ++k) {
        const std::size_t i = order[k];
        const SlLossTerms t = sl_example_loss(gen, seqs[i], prefix[i], ec, bridge);
        log.loss.l_lm += t.lm.item() * inv;
        if (ec) log.loss.l_ec += t.ec.item() * inv;
        scale(t.total, inv).backward();
      }
      log.loss.l_total = log.loss.l_lm + log.loss.l_ec;
      opt.step();
      logger()->info("sl step {} l_lm {:.4f} l_ec {:.4f}", step, log.loss.l_lm, log.loss.l_ec);
      if (on_step) on_step(log);
      result.log.push_back(log);
      ++step;
    }
  }
  return result;
}

std::string sl_generate(const Generator& generator, const SlPrompt& prompt,
                        const SamplingConfig& sampling, nn::Rng& rng) {
  return generator.generate(prompt_ids(generator.tokenizer(), prompt, generator.max_len()), sampling,
                            rng).text;
}

double mean_high_probability(const Generator& generator, std::span<const SlPrompt> prompts,
                             const BinaryEmpathyView& ec, int max_new_tokens) {
  if (prompts.empty()) throw ValidationError("no prompts");
  nn::Rng rng(0);
  double total = 0.0;
  for (const auto& p : prompts) {
    const auto text = sl_generate(generator, p, {0.0, max_new_tokens}, rng);
    total += text.empty() ? 0.0 : ec.high_probability(text);
  }
  return total / static_cast<double>(prompts.size());
}

}  // namespace sat::rewriting
