#include "sat/rewriting/breakdown.hpp"

#include <cmath>

#include "sat/error.hpp"

namespace sat::rewriting {

void RewardWeights::validate() const {
  for (double w : {w_e, w_f, w_s}) {
    if (!std::isfinite(w) || w < 0.0) throw ValidationError("reward weights must be finite and >= 0");
  }
  if (w_e == 0.0 && w_f == 0.0 && w_s == 0.0) {
    throw ValidationError("reward weights must not all be zero");
  }
}

nlohmann::json RewardWeights::to_json() const { return {{"w_e", w_e}, {"w_f", w_f}, {"w_s", w_s}}; }

RewardWeights RewardWeights::from_json(const nlohmann::json& j) {
  RewardWeights w;
  w.w_e = j.value("w_e", 1.0);
  w.w_f = j.value("w_f", 1.0);
  w.w_s = j.value("w_s", 1.0);
  w.validate();
  return w;
}

RewardBreakdown RewardBreakdown::make(double r_e, double r_f, double r_s, const RewardWeights& w) {
  w.validate();
  RewardBreakdown b{r_e, r_f, r_s, w, 0.0};
  b.total = w.w_e * r_e + w.w_f * r_f + w.w_s * r_s;
  return b;
}

nlohmann::json RewardBreakdown::to_json() const {
  return {{"r_e", r_e}, {"r_f", r_f}, {"r_s", r_s}, {"weights", weights.to_json()}, {"total", total}};
}

RewardBreakdown RewardBreakdown::from_json(const nlohmann::json& j) {
  RewardBreakdown b = make(j.at("r_e").get<double>(), j.at("r_f").get<double>(),
                           j.at("r_s").get<double>(), RewardWeights::from_json(j.at("weights")));
  if (j.contains("total") && j.at("total").get<double>() != b.total) {
    throw ValidationError("reward breakdown total is inconsistent with its parts");
  }
  return b;
}

}  // namespace sat::rewriting
