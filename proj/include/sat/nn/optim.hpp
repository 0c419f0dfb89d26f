#pragma once

#include <vector>

#include "sat/nn/params.hpp"

namespace sat::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Global gradient-norm clip; <= 0 disables.
  double clip_norm = 1.0;
};

class Adam {
 public:
  Adam(NamedParams params, AdamConfig config);

  void zero_grad();
  void step();
  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  long steps() const { return t_; }

 private:
  NamedParams params_;
  AdamConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long t_ = 0;
};

}  // namespace sat::nn
