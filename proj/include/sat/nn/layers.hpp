#pragma once

#include <random>
#include <string>

#include "sat/nn/params.hpp"
#include "sat/nn/tensor.hpp"

namespace sat::nn {

using Rng = std::mt19937_64;

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng);

struct Linear {
  Tensor weight;  // in x out
  Tensor bias;    // 1 x out

  Linear() = default;
  Linear(int in, int out, Rng& rng);

  Tensor operator()(const Tensor& x) const { return add_row(matmul(x, weight), bias); }
  int in_features() const { return static_cast<int>(weight.rows()); }
  int out_features() const { return static_cast<int>(weight.cols()); }

  void visit_params(const ParamVisitor& v, const std::string& prefix = "") {
    v(prefix + "weight", weight);
    v(prefix + "bias", bias);
  }
};

struct LayerNorm {
  Tensor gamma;
  Tensor beta;

  LayerNorm() = default;
  explicit LayerNorm(int dim);

  Tensor operator()(const Tensor& x) const { return layer_norm_rows(x, gamma, beta); }

  void visit_params(const ParamVisitor& v, const std::string& prefix = "") {
    v(prefix + "gamma", gamma);
    v(prefix + "beta", beta);
  }
};

}  // namespace sat::nn
