#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sat/rewriting/generator.hpp"
#include "sat/rewriting/reward.hpp"
#include "sat/store/candidate.hpp"

namespace sat::rewriting {

struct PpoConfig {
  int steps = 60;
  int batch_size = 8;
  double learning_rate = 1e-3;
  double clip_range = 0.2;
  double kl_coefficient = 0.05;  // initial value; adapted toward kl_target
  bool adaptive_kl = true;
  double kl_target = 6.0;
  double kl_horizon = 10000.0;
  int ppo_epochs = 2;
  int max_generation_length = 16;
  double temperature = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static PpoConfig from_json(const nlohmann::json& j);
};

struct RlPrompt {
  std::string base_text;
  SemanticClass base;
};

// Scores one completed generation. Must be pure and accept empty text.
using RewardFn = std::function<RewardBreakdown(std::string_view text, SemanticClass base)>;

// total_reward over `models`, with empty generations scored as zero.
RewardFn make_reward_fn(const RewardComponents& models, RewardWeights weights);

struct PpoStepLog {
  int step = 0;
  double mean_reward = 0.0;  // mean total reward of the step's episodes
  double mean_kl = 0.0;      // mean sequence KL to the reference
  double kl_coefficient = 0.0;
  double mean_r_e = 0.0;
  double mean_r_f = 0.0;
  double mean_r_s = 0.0;
  double mean_abs_advantage = 0.0;
  int episodes = 0;
  bool skipped = false;

  nlohmann::json to_json() const;
};

struct PpoResult {
  Generator policy;
  std::vector<PpoStepLog> log;
};

// Mean clipped surrogate over tokens, for one episode with advantage `adv`.
Tensor clipped_surrogate(const Tensor& log_probs, const nn::Matrix& old_log_probs, double adv,
                         double clip_range);

// Episode-level rewards, batch-mean baseline (no value head), KL penalty to
// the frozen starting model.
PpoResult ppo_train(const Generator& warm, std::span<const RlPrompt> prompts,
                    const RewardFn& reward_fn, const PpoConfig& config,
                    const std::function<void(const PpoStepLog&)>& on_step = {});

struct CandidateConfig {
  int n_per_base = 3;
  SamplingConfig sampling;
  std::uint64_t seed = 1;
};

struct BaseUtterance {
  std::string text;
  Language language = Language::EN;
  SemanticClass base;
};

// Every candidate is pending and carries its reward breakdown.
std::vector<store::ResponseCandidate> generate_candidates(
    const Generator& generator, std::span<const BaseUtterance> bases, const CandidateConfig& config,
    const RewardFn& reward_fn, store::Source source = store::Source::rl_generated,
    const std::function<std::vector<int>(const BaseUtterance&)>& render = {});

}  // namespace sat::rewriting
