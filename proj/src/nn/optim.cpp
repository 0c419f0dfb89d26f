#include "sat/nn/optim.hpp"

#include <cmath>

namespace sat::nn {

Adam::Adam(NamedParams params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  for (const auto& [name, p] : params_) {
    m_.push_back(Matrix::Zero(p.rows(), p.cols()));
    v_.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
}

void Adam::zero_grad() {
  for (auto& [name, p] : params_) p.zero_grad();
}

void Adam::step() {
  ++t_;
  double scale_factor = 1.0;
  if (config_.clip_norm > 0) {
    double sq = 0.0;
    for (const auto& [name, p] : params_) {
      if (p.grad().size() > 0) sq += p.grad().squaredNorm();
    }
    const double norm = std::sqrt(sq);
    if (norm > config_.clip_norm) scale_factor = config_.clip_norm / norm;
  }
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i].second;
    if (p.grad().size() == 0) continue;
    const Matrix g = p.grad() * scale_factor;
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.cwiseProduct(g);
    const Matrix update =
        ((m_[i] / bc1).array() / ((v_[i] / bc2).array().sqrt() + config_.eps)).matrix();
    p.mutable_value() -= config_.learning_rate * update;
  }
}

}  // namespace sat::nn
