#include "sat/nn/layers.hpp"

#include <cmath>

namespace sat::nn {

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = dist(rng);
  return m;
}

Linear::Linear(int in, int out, Rng& rng)
    : weight(Tensor::leaf(normal_matrix(in, out, std::sqrt(2.0 / (in + out)), rng))),
      bias(Tensor::leaf(Matrix::Zero(1, out))) {}

LayerNorm::LayerNorm(int dim)
    : gamma(Tensor::leaf(Matrix::Ones(1, dim))), beta(Tensor::leaf(Matrix::Zero(1, dim))) {}

}  // namespace sat::nn
