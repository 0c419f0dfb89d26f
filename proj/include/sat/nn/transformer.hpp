#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "sat/nn/layers.hpp"

namespace sat::nn {

struct TransformerConfig {
  int vocab_size = 0;
  int layers = 2;
  int hidden = 32;
  int heads = 2;
  int ffn = 64;
  int max_len = 128;
  std::uint64_t seed = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static TransformerConfig from_json(const nlohmann::json& j);
  friend bool operator==(const TransformerConfig&, const TransformerConfig&) = default;
};

// Pre-LayerNorm transformer block with multi-head self-attention.
struct TransformerBlock {
  LayerNorm ln1, ln2;
  Linear query, key, value, out;
  Linear ff_in, ff_out;
  int heads = 1;

  TransformerBlock() = default;
  TransformerBlock(const TransformerConfig& cfg, Rng& rng);

  Tensor forward(const Tensor& x, bool causal) const;
  void visit_params(const ParamVisitor& v, const std::string& prefix = "");
};

// Token + position embeddings, N blocks, final LayerNorm. Used bidirectionally
// as an encoder and with a causal mask as a decoder.
class TransformerStack {
 public:
  TransformerStack() = default;
  explicit TransformerStack(const TransformerConfig& cfg);

  const TransformerConfig& config() const { return config_; }
  const Tensor& token_embedding() const { return tok_emb_; }

  Tensor embed_ids(std::span<const int> ids) const;
  // `weights` is (n x vocab): each row mixes token embeddings.
  Tensor embed_soft(const Tensor& weights) const;
  // Adds positions and runs the blocks over (n x hidden) token embeddings.
  Tensor forward(const Tensor& token_embeddings, bool causal) const;

  void visit_params(const ParamVisitor& v, const std::string& prefix = "");

 private:
  TransformerConfig config_;
  Tensor tok_emb_;
  Tensor pos_emb_;
  std::vector<TransformerBlock> blocks_;
  LayerNorm ln_final_;
};

}  // namespace sat::nn
