#include "sat/rewriting/rl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sat/error.hpp"
#include "sat/log.hpp"
#include "sat/nn/optim.hpp"

namespace sat::rewriting {
using nn::Matrix;

void PpoConfig::validate() const {
  if (steps < 0) throw ConfigurationError("steps must be >= 0");
  if (batch_size < 1) throw ConfigurationError("batch_size must be >= 1");
  if (!(learning_rate >= 0.0)) throw ConfigurationError("learning_rate must be >= 0");
  if (!(clip_range > 0.0 && clip_range < 1.0)) throw ConfigurationError("clip_range must be in (0,1)");
  if (!(kl_coefficient >= 0.0)) throw ConfigurationError("kl_coefficient must be >= 0");
  if (!(kl_target > 0.0) || !(kl_horizon > 0.0)) {
    throw ConfigurationError("kl_target and kl_horizon must be positive");
  }
  if (ppo_epochs < 1) throw ConfigurationError("ppo_epochs must be >= 1");
  if (max_generation_length < 1) throw ConfigurationError("max_generation_length must be >= 1");
  if (!(temperature > 0.0)) throw ConfigurationError("sampling temperature must be > 0 for PPO");
}

nlohmann::json PpoConfig::to_json() const {
  return {{"steps", steps},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"clip_range", clip_range},
          {"kl_coefficient", kl_coefficient},
          {"adaptive_kl", adaptive_kl},
          {"kl_target", kl_target},
          {"kl_horizon", kl_horizon},
          {"ppo_epochs", ppo_epochs},
          {"max_generation_length", max_generation_length},
          {"temperature", temperature},
          {"seed", seed}};
}

PpoConfig PpoConfig::from_json(const nlohmann::json& j) {
  PpoConfig c;
  c.steps = j.value("steps", c.steps);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.clip_range = j.value("clip_range", c.clip_range);
  c.kl_coefficient = j.value("kl_coefficient", c.kl_coefficient);
  c.adaptive_kl = j.value("adaptive_kl", c.adaptive_kl);
  c.kl_target = j.value("kl_target", c.kl_target);
  c.kl_horizon = j.value("kl_horizon", c.kl_horizon);
  c.ppo_epochs = j.value("ppo_epochs", c.ppo_epochs);
  c.max_generation_length = j.value("max_generation_length", c.max_generation_length);
  c.temperature = j.value("temperature", c.temperature);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

RewardFn make_reward_fn(const RewardComponents& models, RewardWeights weights) {
  weights.validate();
  return [&models, weights](std::string_view text, SemanticClass base) {
    if (text.empty()) return RewardBreakdown::make(0.0, 0.0, 0.0, weights);
    return total_reward(text, base, weights, models);
  };
}

nlohmann::json PpoStepLog::to_json() const {
  return {{"step", step},
          {"mean_reward", mean_reward},
          {"mean_kl", mean_kl},
          {"kl_coefficient", kl_coefficient},
          {"mean_r_e", mean_r_e},
          {"mean_r_f", mean_r_f},
          {"mean_r_s", mean_r_s},
          {"mean_abs_advantage", mean_abs_advantage},
          {"episodes", episodes},
          {"skipped", skipped}};
}

Tensor clipped_surrogate(const Tensor& log_probs, const Matrix& old_log_probs, double adv,
                         double clip_range) {
  if (log_probs.rows() != old_log_probs.rows() || log_probs.cols() != 1 ||
      old_log_probs.cols() != 1 || log_probs.rows() == 0) {
    throw DomainError("clipped_surrogate: shape mismatch");
  }
  const Eigen::Index m = log_probs.rows();
  const Matrix ratio = (log_probs.value() - old_log_probs).array().exp().matrix();
  Matrix pass(m, 1);  // d(term)/d(log_prob) per token
  double total = 0.0;
  for (Eigen::Index t = 0; t < m; ++t) {
    const double r = ratio(t, 0);
    const double clipped = std::clamp(r, 1.0 - clip_range, 1.0 + clip_range);
    const double a = r * adv;
    const double b = clipped * adv;
    if (a <= b) {
      total += a;
      pass(t, 0) = a;
    } else {
      total += b;
      pass(t, 0) = 0.0;
    }
  }
  const double inv = 1.0 / static_cast<double>(m);
  return nn::custom_op(Matrix::Constant(1, 1, total * inv), {log_probs},
                       [pass, inv](nn::Node& s) {
                         nn::Node& p = *s.parents[0];
                         if (!p.requires_grad) return;
                         p.ensure_grad();
                         p.grad += pass * (s.grad(0, 0) * inv);
                       });
}

namespace {

struct Episode {
  std::vector<int> seq;
  std::size_t prefix = 0;
  Matrix old_lp;
  double kl = 0.0;
  RewardBreakdown reward;
  double advantage = 0.0;
};

}  // namespace

PpoResult ppo_train(const Generator& warm, std::span<const RlPrompt> prompts,
                    const RewardFn& reward_fn, const PpoConfig& config,
                    const std::function<void(const PpoStepLog&)>& on_step) {
  config.validate();
  if (prompts.empty()) throw ValidationError("PPO needs at least one prompt");
  const Generator reference(warm);
  PpoResult result{Generator(warm), {}};
  Generator& policy = result.policy;

  nn::AdamConfig ac;
  ac.learning_rate = config.learning_rate;
  nn::Adam opt(nn::collect_params(policy), ac);
  nn::Rng rng(config.seed);
  std::vector<std::size_t> order(prompts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;
  double beta = config.kl_coefficient;
  const SamplingConfig sampling{config.temperature, config.max_generation_length};

  for (int step = 0; step < config.steps; ++step) {
    std::vector<Episode> batch;
    bool finite = true;
    for (int b = 0; b < config.batch_size; ++b) {
      if (cursor == order.size()) {
        cursor = 0;
        std::shuffle(order.begin(), order.end(), rng);
      }
      const RlPrompt& p = prompts[order[cursor++]];
      Episode ep;
      ep.seq = render_rewrite_prompt(policy.tokenizer(), p.base_text, policy.max_len());
      ep.prefix = ep.seq.size();
      const Generation g = policy.generate(ep.seq, sampling, rng);
      ep.seq.insert(ep.seq.end(), g.tokens.begin(), g.tokens.end());
      if (g.finished) ep.seq.push_back(nn::Tokenizer::kEos);
      {
        nn::NoGradGuard guard;
        ep.old_lp = policy.continuation_log_probs(ep.seq, ep.prefix, config.temperature).value();
        const Matrix ref_lp =
            reference.continuation_log_probs(ep.seq, ep.prefix, config.temperature).value();
        ep.kl = (ep.old_lp - ref_lp).sum();
      }
      ep.reward = reward_fn(g.text, p.base);
      if (!std::isfinite(ep.reward.total)) finite = false;
      batch.push_back(std::move(ep));
    }

    PpoStepLog log;
    log.step = step;
    log.episodes = static_cast<int>(batch.size());
    log.kl_coefficient = beta;
    const double n = static_cast<double>(batch.size());
    for (const auto& ep : batch) {
      log.mean_reward += ep.reward.total / n;
      log.mean_kl += ep.kl / n;
      log.mean_r_e += ep.reward.r_e / n;
      log.mean_r_f += ep.reward.r_f / n;
      log.mean_r_s += ep.reward.r_s / n;
    }

    if (!finite) {
      log.skipped = true;
      logger()->warn("ppo step {}: non-finite reward, update skipped", step);
    } else {
      std::vector<double> score(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        score[i] = batch[i].reward.total - beta * batch[i].kl;
      }
      const double mu = std::accumulate(score.begin(), score.end(), 0.0) / n;
      double var = 0.0;
      for (double s : score) var += (s - mu) * (s - mu) / n;
      const double sd = std::sqrt(var);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        batch[i].advantage = sd > 1e-8 ? (score[i] - mu) / sd : 0.0;
        log.mean_abs_advantage += std::abs(batch[i].advantage) / n;
      }
      for (int e = 0; e < config.ppo_epochs; ++e) {
        opt.zero_grad();
        for (const auto& ep : batch) {
          if (ep.advantage == 0.0) continue;
          const Tensor lp = policy.continuation_log_probs(ep.seq, ep.prefix, config.temperature);
          const Tensor loss =
              scale(clipped_surrogate(lp, ep.old_lp, ep.advantage, config.clip_range), -1.0 / n);
          loss.backward();
        }
        opt.step();
      }
      if (config.adaptive_kl) {
        const double err = std::clamp(log.mean_kl / config.kl_target - 1.0, -0.2, 0.2);
        beta *= 1.0 + err * n / config.kl_horizon;
      }
    }
    logger()->info("ppo step {} reward {:.4f} kl {:.4f} beta {:.4f}", step, log.mean_reward,
                   log.mean_kl, log.kl_coefficient);
    if (on_step) on_step(log);
    result.log.push_back(log);
  }
  return result;
}

std::vector<store::ResponseCandidate> generate_candidates(
    const Generator& generator, std::span<const BaseUtterance> bases, const CandidateConfig& config,
    const RewardFn& reward_fn, store::Source source,
    const std::function<std::vector<int>(const BaseUtterance&)>& render) {
  if (config.n_per_base < 1) throw ConfigurationError("n_per_base must be >= 1");
  constexpr int kAttempts = 8;
  nn::Rng rng(config.seed);
  std::vector<store::ResponseCandidate> out;
  for (const auto& b : bases) {
    const auto prompt = render ? render(b)
                               : render_rewrite_prompt(generator.tokenizer(), b.text,
                                                       generator.max_len());
    for (int k = 0; k < config.n_per_base; ++k) {
      std::string text;
      for (int a = 0; a < kAttempts && text.empty(); ++a) {
        text = generator.generate(prompt, config.sampling, rng).text;
        if (config.sampling.temperature == 0.0) break;
      }
      if (text.empty()) {
        logger()->warn("empty generation for base {}; keeping the base utterance", b.base.class_id);
        text = b.text;
      }
      store::Utterance u{text, b.language, b.base, source};
      out.push_back(store::ResponseCandidate::pending(std::move(u), reward_fn(text, b.base)));
    }
  }
  return out;
}

}  // namespace sat::rewriting
