#include "sat/classify/text_classifier.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include "sat/error.hpp"
#include "sat/io.hpp"
#include "sat/log.hpp"
#include "sat/nn/optim.hpp"

namespace sat::classify {
namespace fs = std::filesystem;
using nlohmann::json;

using io::read_json;
using io::write_json;

TextClassifier::TextClassifier(std::unique_ptr<TextEncoder> encoder,
                               std::vector<std::string> labels, std::uint64_t head_seed)
    : encoder_(std::move(encoder)), labels_(std::move(labels)) {
  if (!encoder_) throw ConfigurationError("classifier requires an encoder");
  if (labels_.size() < 2) throw ConfigurationError("classifier needs at least two classes");
  nn::Rng rng(head_seed);
  head_ = nn::Linear(encoder_->hidden_dim(), static_cast<int>(labels_.size()), rng);
}

TextClassifier::TextClassifier(const TextClassifier& other)
    : encoder_(other.encoder_->clone()), head_(other.head_), labels_(other.labels_) {
  head_.visit_params([](const std::string&, Tensor& p) {
    p = Tensor::leaf(p.value(), p.requires_grad());
  });
}

TextClassifier& TextClassifier::operator=(const TextClassifier& other) {
  if (this != &other) {
    TextClassifier tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

std::vector<int> TextClassifier::prepare(std::string_view text, bool* truncated) const {
  std::vector<int> ids{nn::Tokenizer::kCls};
  const auto body = tokenizer().encode(text);
  ids.insert(ids.end(), body.begin(), body.end());
  const auto limit = static_cast<std::size_t>(encoder_->max_len());
  const bool cut = ids.size() > limit;
  if (cut) {
    logger()->warn("input of {} tokens truncated to {}", ids.size(), limit);
    ids.resize(limit);
  }
  if (truncated) *truncated = cut;
  return ids;
}

ClassifierOutput TextClassifier::forward_ids(std::span<const int> ids) const {
  const Tensor states = encoder_->encode(ids);
  const Tensor hidden = nn::slice_rows(states, 0, 1);
  return {hidden, head_(hidden)};
}

ClassifierOutput TextClassifier::forward(std::string_view text) const {
  const auto ids = prepare(text);
  return forward_ids(ids);
}

ClassifierOutput TextClassifier::forward_soft(const Tensor& token_weights) const {
  const auto vocab = static_cast<Eigen::Index>(tokenizer().size());
  if (token_weights.cols() != vocab) {
    throw DomainError("soft input width does not match classifier vocabulary");
  }
  nn::Matrix cls = nn::Matrix::Zero(1, vocab);
  cls(0, nn::Tokenizer::kCls) = 1.0;
  Tensor rows = token_weights;
  const auto limit = static_cast<Eigen::Index>(encoder_->max_len()) - 1;
  if (rows.rows() > limit) rows = nn::slice_rows(rows, 0, limit);
  const Tensor seq = nn::concat_rows({Tensor::constant(std::move(cls)), rows});
  const Tensor states = encoder_->encode_soft(seq);
  const Tensor hidden = nn::slice_rows(states, 0, 1);
  return {hidden, head_(hidden)};
}

std::vector<double> TextClassifier::logits(std::string_view text) const {
  nn::NoGradGuard guard;
  const auto out = forward(text);
  const auto& v = out.logits.value();
  return std::vector<double>(v.data(), v.data() + v.size());
}

int TextClassifier::predict(std::string_view text) const {
  const auto l = logits(text);
  return static_cast<int>(std::max_element(l.begin(), l.end()) - l.begin());
}

void TextClassifier::visit_params(const nn::ParamVisitor& v) {
  encoder_->visit_params(v);
  head_.visit_params(v, "head.");
}

std::string TextClassifier::weights_hash() const {
  return nn::params_hash(const_cast<TextClassifier&>(*this));
}

void TextClassifier::save(const fs::path& dir) const {
  fs::create_directories(dir);
  write_json(dir / "config.json",
             {{"format", "sat.text-classifier"}, {"version", 1},
              {"encoder", encoder_->config_json()}});
  write_json(dir / "classes.json", {{"classes", labels_}});
  write_json(dir / "vocab.json", tokenizer().to_json());
  auto& self = const_cast<TextClassifier&>(*this);
  write_json(dir / "weights.json", nn::params_to_json(nn::collect_params(self)));
}

TextClassifier TextClassifier::load(const fs::path& dir) {
  const json config = read_json(dir / "config.json");
  if (config.value("format", "") != "sat.text-classifier") {
    throw ValidationError(dir.string() + " is not a classifier model directory");
  }
  auto tok = std::make_shared<const nn::Tokenizer>(
      nn::Tokenizer::from_json(read_json(dir / "vocab.json")));
  auto labels = read_json(dir / "classes.json").at("classes").get<std::vector<std::string>>();
  TextClassifier model(make_encoder(config.at("encoder"), tok), std::move(labels), 0);
  nn::params_from_json(read_json(dir / "weights.json"), nn::collect_params(model));
  return model;
}

std::vector<EpochLog> run_epochs(nn::NamedParams params, std::size_t n, const TrainStage& stage,
                                 int stage_index,
                                 const std::function<Tensor(std::size_t)>& example_loss,
                                 const std::function<void(const EpochLog&)>& on_epoch_end) {
  if (stage.batch_size < 1) throw ConfigurationError("batch size must be >= 1");
  std::vector<EpochLog> log;
  if (stage.epochs <= 0 || n == 0) return log;
  nn::AdamConfig ac;
  ac.learning_rate = stage.learning_rate;
  nn::Adam opt(std::move(params), ac);
  nn::Rng rng(stage.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 0; epoch < stage.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(stage.batch_size)) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(stage.batch_size));
      const double inv = 1.0 / static_cast<double>(end - start);
      opt.zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        const Tensor loss = example_loss(order[k]);
        total += loss.item();
        nn::scale(loss, inv).backward();
      }
      opt.step();
    }
    log.push_back({stage_index, epoch, total / static_cast<double>(n)});
    logger()->info("stage {} epoch {} loss {:.6f}", stage_index, epoch, log.back().mean_loss);
    if (on_epoch_end) on_epoch_end(log.back());
  }
  return log;
}

std::vector<EpochLog> train_classifier(TextClassifier& model, std::span<const LabeledText> data,
                                       const TrainStage& stage, int stage_index) {
  std::vector<std::vector<int>> ids;
  ids.reserve(data.size());
  for (const auto& ex : data) {
    if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= model.num_classes()) {
      throw ValidationError("training example has no valid label");
    }
    ids.push_back(model.prepare(ex.text));
  }
  return run_epochs(nn::collect_params(model), data.size(), stage, stage_index,
                    [&](std::size_t i) {
                      const auto out = model.forward_ids(ids[i]);
                      const Tensor lp = nn::log_softmax_rows(out.logits);
                      return nn::neg(nn::element(lp, 0, data[i].label));
                    });
}

void require_all_classes(std::span<const LabeledText> data, std::size_t num_classes,
                         std::string_view what) {
  std::vector<bool> seen(num_classes, false);
  for (const auto& ex : data) {
    if (ex.label >= 0 && static_cast<std::size_t>(ex.label) < num_classes) {
      seen[static_cast<std::size_t>(ex.label)] = true;
    }
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (!seen[c]) {
      throw ValidationError(std::string(what) + ": class " + std::to_string(c) +
                            " is missing from the training data");
    }
  }
}

ClassifierMetrics compute_metrics(std::span<const int> truth, std::span<const int> predicted,
                                  std::size_t num_classes) {
  if (truth.size() != predicted.size()) throw DomainError("metrics: length mismatch");
  if (truth.empty()) throw ValidationError("metrics: empty test set");
  ClassifierMetrics m;
  m.confusion.assign(num_classes, std::vector<long>(num_classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || static_cast<std::size_t>(truth[i]) >= num_classes) {
      throw ValidationError("metrics: unlabeled or out-of-range example");
    }
    if (predicted[i] < 0 || static_cast<std::size_t>(predicted[i]) >= num_classes) {
      throw DomainError("metrics: prediction out of range");
    }
    ++m.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
  }
  m.total = static_cast<long>(truth.size());
  long trace = 0;
  m.per_class_f1.assign(num_classes, 0.0);
  double weighted = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    const long tp = m.confusion[c][c];
    trace += tp;
    long support = 0, predicted_c = 0;
    for (std::size_t k = 0; k < num_classes; ++k) {
      support += m.confusion[c][k];
      predicted_c += m.confusion[k][c];
    }
    const double denom = static_cast<double>(support + predicted_c);
    m.per_class_f1[c] = denom > 0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
    weighted += m.per_class_f1[c] * static_cast<double>(support);
  }
  m.accuracy = static_cast<double>(trace) / static_cast<double>(m.total);
  m.macro_f1 = std::accumulate(m.per_class_f1.begin(), m.per_class_f1.end(), 0.0) /
               static_cast<double>(num_classes);
  m.weighted_f1 = weighted / static_cast<double>(m.total);
  return m;
}

ClassifierMetrics evaluate_classifier(const TextClassifier& model,
                                      std::span<const LabeledText> testset) {
  if (testset.empty()) throw ValidationError("evaluate: empty test set");
  std::vector<int> truth, pred;
  truth.reserve(testset.size());
  pred.reserve(testset.size());
  for (const auto& ex : testset) {
    if (ex.label < 0) throw ValidationError("evaluate: unlabeled example '" + ex.text + "'");
    truth.push_back(ex.label);
    pred.push_back(model.predict(ex.text));
  }
  return compute_metrics(truth, pred, model.num_classes());
}

}  // namespace sat::classify
