#pragma once

#include <nlohmann/json.hpp>

namespace sat::rewriting {

struct RewardWeights {
  double w_e = 1.0;
  double w_f = 1.0;
  double w_s = 1.0;

  // Each weight finite and >= 0, not all zero.
  void validate() const;
  nlohmann::json to_json() const;
  static RewardWeights from_json(const nlohmann::json& j);
};

struct RewardBreakdown {
  double r_e = 0.0;
  double r_f = 0.0;
  double r_s = 0.0;
  RewardWeights weights;
  double total = 0.0;

  static RewardBreakdown make(double r_e, double r_f, double r_s, const RewardWeights& w);
  nlohmann::json to_json() const;
  static RewardBreakdown from_json(const nlohmann::json& j);
};

}  // namespace sat::rewriting
