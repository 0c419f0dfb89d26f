#include "sat/distill/losses.hpp"

#include <algorithm>
#include <cmath>

#include "sat/error.hpp"
#include "sat/log.hpp"

namespace sat::distill {

SoftenedDistribution softmax_temperature(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw DomainError("temperature must be positive and finite");
  }
  if (logits.size() < 2) throw DomainError("softmax needs at least two classes");
  for (double z : logits) {
    if (!std::isfinite(z)) throw DomainError("non-finite logit");
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  SoftenedDistribution out;
  out.temperature = temperature;
  out.probs.resize(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.probs[i] = std::exp((logits[i] - m) / temperature);
    z += out.probs[i];
  }
  for (double& p : out.probs) p /= z;
  return out;
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double ce_loss(std::span<const double> student_probs, int target) {
  if (target < 0 || static_cast<std::size_t>(target) >= student_probs.size()) {
    throw DomainError("target class out of range");
  }
  double p = student_probs[static_cast<std::size_t>(target)];
  if (p < kProbabilityFloor) {
    logger()->warn("ce_loss: target probability {} clamped to {}", p, kProbabilityFloor);
    p = kProbabilityFloor;
  }
  return -std::log(p);
}

double dist_loss(std::span<const double> student_logits, std::span<const double> teacher_logits,
                 double temperature, bool scale_by_t2) {
  if (student_logits.size() != teacher_logits.size()) {
    throw DomainError("student and teacher logits differ in size");
  }
  const auto t = softmax_temperature(teacher_logits, temperature);
  // log-softmax directly, so tiny student probabilities stay finite.
  const double m = *std::max_element(student_logits.begin(), student_logits.end());
  double z = 0.0;
  for (double v : student_logits) z += std::exp((v - m) / temperature);
  const double log_z = std::log(z);
  double loss = 0.0;
  for (std::size_t i = 0; i < t.probs.size(); ++i) {
    const double log_s = (student_logits[i] - m) / temperature - log_z;
    loss -= t.probs[i] * log_s;
  }
  return scale_by_t2 ? loss * temperature * temperature : loss;
}

double cos_loss(std::span<const double> teacher_hidden, std::span<const double> student_hidden) {
  if (teacher_hidden.size() != student_hidden.size()) {
    throw DomainError("hidden vectors differ in dimension");
  }
  double dot = 0.0, nt = 0.0, ns = 0.0;
  for (std::size_t i = 0; i < teacher_hidden.size(); ++i) {
    dot += teacher_hidden[i] * student_hidden[i];
    nt += teacher_hidden[i] * teacher_hidden[i];
    ns += student_hidden[i] * student_hidden[i];
  }
  if (nt == 0.0 || ns == 0.0) throw DomainError("cosine loss of a zero vector");
  const double c = std::clamp(dot / (std::sqrt(nt) * std::sqrt(ns)), -1.0, 1.0);
  return 1.0 - c;
}

nn::Tensor ce_loss_graph(const nn::Tensor& student_logits, int target) {
  if (target < 0 || target >= student_logits.cols()) throw DomainError("target out of range");
  return nn::neg(nn::element(nn::log_softmax_rows(student_logits), 0, target));
}

nn::Tensor dist_loss_graph(const nn::Tensor& student_logits, const nn::Matrix& teacher_logits,
                           double temperature, bool scale_by_t2) {
  if (student_logits.cols() != teacher_logits.cols() || teacher_logits.rows() != 1) {
    throw DomainError("student and teacher logits differ in shape");
  }
  const auto& tv = teacher_logits;
  const auto t = softmax_temperature(std::span<const double>(tv.data(), tv.size()), temperature);
  nn::Matrix tm(1, tv.cols());
  for (Eigen::Index i = 0; i < tv.cols(); ++i) tm(0, i) = t.probs[static_cast<std::size_t>(i)];
  const nn::Tensor log_s = nn::log_softmax_rows(nn::scale(student_logits, 1.0 / temperature));
  nn::Tensor loss = nn::neg(nn::sum(nn::mul(nn::Tensor::constant(tm), log_s)));
  if (scale_by_t2) loss = nn::scale(loss, temperature * temperature);
  return loss;
}

nn::Tensor cos_loss_graph(const nn::Matrix& teacher_hidden, const nn::Tensor& student_hidden) {
  if (teacher_hidden.cols() != student_hidden.cols() || teacher_hidden.rows() != 1 ||
      student_hidden.rows() != 1) {
    throw DomainError("hidden vectors differ in dimension after projection");
  }
  const double nt = teacher_hidden.norm();
  if (nt == 0.0 || student_hidden.value().norm() == 0.0) {
    throw DomainError("cosine loss of a zero vector");
  }
  const nn::Tensor t = nn::Tensor::constant(teacher_hidden / nt);
  const nn::Tensor dot = nn::sum(nn::mul(t, student_hidden));
  const nn::Tensor ns = nn::sqrt(nn::sum(nn::mul(student_hidden, student_hidden)));
  return nn::add_scalar(nn::neg(nn::div(dot, ns)), 1.0);
}

TripleLossTerms triple_loss_terms(const nn::Tensor& student_logits,
                                  const nn::Matrix& teacher_logits,
                                  const nn::Tensor& student_hidden,
                                  const nn::Matrix& teacher_hidden, int target,
                                  double temperature, bool scale_by_t2) {
  TripleLossTerms terms;
  terms.ce = ce_loss_graph(student_logits, target);
  terms.dist = dist_loss_graph(student_logits, teacher_logits, temperature, scale_by_t2);
  terms.cos = cos_loss_graph(teacher_hidden, student_hidden);
  terms.total = nn::scale(nn::add(nn::add(terms.ce, terms.dist), terms.cos), 1.0 / 3.0);
  return terms;
}

}  // namespace sat::distill
