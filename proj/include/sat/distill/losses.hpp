#pragma once

#include <span>
#include <vector>

#include "sat/nn/tensor.hpp"

namespace sat::distill {

struct SoftenedDistribution {
  std::vector<double> probs;
  double temperature = 1.0;
};

// exp(z_i/T) / Σ_j exp(z_j/T), computed with max subtraction.
// DomainError for T <= 0, fewer than two classes or a non-finite logit.
SoftenedDistribution softmax_temperature(std::span<const double> logits, double temperature);

double entropy(std::span<const double> probs);

// Probability floor applied by ce_loss at the target class.
inline constexpr double kProbabilityFloor = 1e-12;

// -log p[target]. Losses are negated relative to the printed "Σ q log c" so
// that they are non-negative and minimised.
double ce_loss(std::span<const double> student_probs, int target);

// -Σ t_i log s_i over temperature-softened teacher (t) and student (s)
// distributions, optionally scaled by T².
double dist_loss(std::span<const double> student_logits, std::span<const double> teacher_logits,
                 double temperature, bool scale_by_t2 = false);

// 1 - cos(teacher, student); DomainError for zero vectors or size mismatch.
double cos_loss(std::span<const double> teacher_hidden, std::span<const double> student_hidden);

struct TripleLossBreakdown {
  double l_ce = 0.0;
  double l_dist = 0.0;
  double l_cos = 0.0;
  double l_total = 0.0;

  static TripleLossBreakdown from_components(double ce, double dist, double cos) {
    return {ce, dist, cos, (ce + dist + cos) / 3.0};
  }
};

// Differentiable counterparts used during training. Teacher quantities are
// plain values: no gradient reaches the teacher.
struct TripleLossTerms {
  nn::Tensor ce;
  nn::Tensor dist;
  nn::Tensor cos;
  nn::Tensor total;

  TripleLossBreakdown values() const {
    return TripleLossBreakdown::from_components(ce.item(), dist.item(), cos.item());
  }
};

nn::Tensor ce_loss_graph(const nn::Tensor& student_logits, int target);
nn::Tensor dist_loss_graph(const nn::Tensor& student_logits, const nn::Matrix& teacher_logits,
                           double temperature, bool scale_by_t2 = false);
nn::Tensor cos_loss_graph(const nn::Matrix& teacher_hidden, const nn::Tensor& student_hidden);

TripleLossTerms triple_loss_terms(const nn::Tensor& student_logits,
                                  const nn::Matrix& teacher_logits,
                                  const nn::Tensor& student_hidden,
                                  const nn::Matrix& teacher_hidden, int target,
                                  double temperature, bool scale_by_t2 = false);

}  // namespace sat::distill
