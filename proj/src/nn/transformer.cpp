#include "sat/nn/transformer.hpp"

#include <cmath>
#include <limits>

#include "sat/error.hpp"

namespace sat::nn {

void TransformerConfig::validate() const {
  if (vocab_size <= 0 || layers < 1 || hidden < 1 || heads < 1 || ffn < 1 || max_len < 2) {
    throw ConfigurationError("invalid transformer configuration");
  }
  if (hidden % heads != 0) {
    throw ConfigurationError("hidden size must be divisible by the number of heads");
  }
}

nlohmann::json TransformerConfig::to_json() const {
  return {{"vocab_size", vocab_size}, {"layers", layers},   {"hidden", hidden},
          {"heads", heads},           {"ffn", ffn},         {"max_len", max_len},
          {"seed", seed}};
}

TransformerConfig TransformerConfig::from_json(const nlohmann::json& j) {
  TransformerConfig c;
  c.vocab_size = j.value("vocab_size", 0);
  c.layers = j.value("layers", c.layers);
  c.hidden = j.value("hidden", c.hidden);
  c.heads = j.value("heads", c.heads);
  c.ffn = j.value("ffn", c.ffn);
  c.max_len = j.value("max_len", c.max_len);
  c.seed = j.value("seed", c.seed);
  return c;
}

TransformerBlock::TransformerBlock(const TransformerConfig& cfg, Rng& rng)
    : ln1(cfg.hidden),
      ln2(cfg.hidden),
      query(cfg.hidden, cfg.hidden, rng),
      key(cfg.hidden, cfg.hidden, rng),
      value(cfg.hidden, cfg.hidden, rng),
      out(cfg.hidden, cfg.hidden, rng),
      ff_in(cfg.hidden, cfg.ffn, rng),
      ff_out(cfg.ffn, cfg.hidden, rng),
      heads(cfg.heads) {}

Tensor TransformerBlock::forward(const Tensor& x, bool causal) const {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  const Eigen::Index dh = d / heads;
  const Tensor h = ln1(x);
  const Tensor q = query(h);
  const Tensor k = key(h);
  const Tensor v = value(h);
  Tensor mask;
  if (causal && n > 1) {
    Matrix m = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) m(i, j) = -1e9;
    }
    mask = Tensor::constant(std::move(m));
  }
  const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Tensor> head_out;
  head_out.reserve(static_cast<std::size_t>(heads));
  for (int hd = 0; hd < heads; ++hd) {
    const Tensor qh = heads == 1 ? q : slice_cols(q, hd * dh, dh);
    const Tensor kh = heads == 1 ? k : slice_cols(k, hd * dh, dh);
    const Tensor vh = heads == 1 ? v : slice_cols(v, hd * dh, dh);
    Tensor scores = scale(matmul(qh, transpose(kh)), inv);
    if (mask.defined()) scores = add(scores, mask);
    head_out.push_back(matmul(softmax_rows(scores), vh));
  }
  const Tensor attn = heads == 1 ? head_out[0] : concat_cols(head_out);
  const Tensor x1 = add(x, out(attn));
  const Tensor f = ff_out(gelu(ff_in(ln2(x1))));
  return add(x1, f);
}

void TransformerBlock::visit_params(const ParamVisitor& v, const std::string& prefix) {
  ln1.visit_params(v, prefix + "ln1.");
  query.visit_params(v, prefix + "query.");
  key.visit_params(v, prefix + "key.");
  value.visit_params(v, prefix + "value.");
  out.visit_params(v, prefix + "out.");
  ln2.visit_params(v, prefix + "ln2.");
  ff_in.visit_params(v, prefix + "ff_in.");
  ff_out.visit_params(v, prefix + "ff_out.");
}

TransformerStack::TransformerStack(const TransformerConfig& cfg) : config_(cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  tok_emb_ = Tensor::leaf(normal_matrix(cfg.vocab_size, cfg.hidden, 0.1, rng));
  pos_emb_ = Tensor::leaf(normal_matrix(cfg.max_len, cfg.hidden, 0.02, rng));
  for (int i = 0; i < cfg.layers; ++i) blocks_.emplace_back(cfg, rng);
  ln_final_ = LayerNorm(cfg.hidden);
}

Tensor TransformerStack::embed_ids(std::span<const int> ids) const {
  return embedding(tok_emb_, ids);
}

Tensor TransformerStack::embed_soft(const Tensor& weights) const {
  if (weights.cols() != tok_emb_.rows()) {
    throw DomainError("embed_soft: weight width does not match vocabulary");
  }
  return matmul(weights, tok_emb_);
}

Tensor TransformerStack::forward(const Tensor& token_embeddings, bool causal) const {
  const Eigen::Index n = token_embeddings.rows();
  if (n < 1) throw DomainError("empty sequence");
  if (n > config_.max_len) throw DomainError("sequence longer than max_len");
  Tensor x = add(token_embeddings, slice_rows(pos_emb_, 0, n));
  for (const auto& b : blocks_) x = b.forward(x, causal);
  return ln_final_(x);
}

void TransformerStack::visit_params(const ParamVisitor& v, const std::string& prefix) {
  v(prefix + "tok_emb", tok_emb_);
  v(prefix + "pos_emb", pos_emb_);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    blocks_[i].visit_params(v, prefix + "block" + std::to_string(i) + ".");
  }
  ln_final_.visit_params(v, prefix + "ln_final.");
}

}  // namespace sat::nn
