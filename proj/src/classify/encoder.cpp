#include "sat/classify/encoder.hpp"

#include "sat/error.hpp"

namespace sat::classify {

TransformerEncoder::TransformerEncoder(std::shared_ptr<const nn::Tokenizer> tokenizer,
                                       nn::TransformerConfig cfg)
    : tokenizer_(std::move(tokenizer)) {
  if (!tokenizer_) throw ConfigurationError("encoder requires a tokenizer");
  cfg.vocab_size = static_cast<int>(tokenizer_->size());
  stack_ = nn::TransformerStack(cfg);
}

std::unique_ptr<TextEncoder> TransformerEncoder::clone() const {
  auto copy = std::make_unique<TransformerEncoder>(*this);
  nn::detach_params(*copy);
  return copy;
}

Tensor TransformerEncoder::encode(std::span<const int> ids) const {
  return stack_.forward(stack_.embed_ids(ids), false);
}

Tensor TransformerEncoder::encode_soft(const Tensor& token_weights) const {
  return stack_.forward(stack_.embed_soft(token_weights), false);
}

nlohmann::json TransformerEncoder::config_json() const {
  auto j = stack_.config().to_json();
  j["kind"] = "transformer";
  return j;
}

std::unique_ptr<TextEncoder> make_encoder(const nlohmann::json& config,
                                          std::shared_ptr<const nn::Tokenizer> tokenizer) {
  const std::string kind = config.value("kind", "transformer");
  if (kind != "transformer") throw ConfigurationError("unknown encoder kind '" + kind + "'");
  return std::make_unique<TransformerEncoder>(std::move(tokenizer),
                                              nn::TransformerConfig::from_json(config));
}

}  // namespace sat::classify
