#pragma once

#include <nlohmann/json.hpp>

#include <memory>
#include <span>

#include "sat/nn/tokenizer.hpp"
#include "sat/nn/transformer.hpp"

namespace sat::classify {

using nn::Tensor;

// Multilingual sentence encoder. Production deployments wrap a pretrained
// model; the desk-scale implementation is `TransformerEncoder`.
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;

  // Deep copy: the clone shares no parameter storage with this encoder.
  virtual std::unique_ptr<TextEncoder> clone() const = 0;

  virtual std::shared_ptr<const nn::Tokenizer> tokenizer() const = 0;
  virtual int hidden_dim() const = 0;
  virtual int num_layers() const = 0;
  virtual int max_len() const = 0;

  // (n x hidden) contextual states for token ids; row 0 is the state of the
  // sequence-start token.
  virtual Tensor encode(std::span<const int> ids) const = 0;
  // Same, but each input row is a distribution over the vocabulary.
  virtual Tensor encode_soft(const Tensor& token_weights) const = 0;

  virtual void visit_params(const nn::ParamVisitor& v) = 0;
  virtual nlohmann::json config_json() const = 0;
};

class TransformerEncoder final : public TextEncoder {
 public:
  TransformerEncoder(std::shared_ptr<const nn::Tokenizer> tokenizer, nn::TransformerConfig cfg);

  std::unique_ptr<TextEncoder> clone() const override;
  std::shared_ptr<const nn::Tokenizer> tokenizer() const override { return tokenizer_; }
  int hidden_dim() const override { return stack_.config().hidden; }
  int num_layers() const override { return stack_.config().layers; }
  int max_len() const override { return stack_.config().max_len; }
  Tensor encode(std::span<const int> ids) const override;
  Tensor encode_soft(const Tensor& token_weights) const override;
  void visit_params(const nn::ParamVisitor& v) override { stack_.visit_params(v, "encoder."); }
  nlohmann::json config_json() const override;

 private:
  std::shared_ptr<const nn::Tokenizer> tokenizer_;
  nn::TransformerStack stack_;
};

// Builds an encoder from `{"kind": "transformer", ...TransformerConfig}`;
// vocab_size is taken from the tokenizer.
std::unique_ptr<TextEncoder> make_encoder(const nlohmann::json& config,
                                          std::shared_ptr<const nn::Tokenizer> tokenizer);

}  // namespace sat::classify
