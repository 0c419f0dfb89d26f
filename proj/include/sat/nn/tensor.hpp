#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace sat::nn {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads `self.grad` and accumulates into the parents' grads.
  std::function<void(Node& self)> backward_fn;

  void ensure_grad() {
    if (grad.rows() != value.rows() || grad.cols() != value.cols()) {
      grad = Matrix::Zero(value.rows(), value.cols());
    }
  }
};

// Handle to a node in a dynamically built computation graph. Copies share the
// node; use `detach()`/`leaf()` for an independent value.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Matrix value);
  static Tensor leaf(Matrix value, bool requires_grad = true);
  static Tensor scalar(double v) { return constant(Matrix::Constant(1, 1, v)); }

  bool defined() const { return static_cast<bool>(node_); }
  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  const Matrix& grad() const { return node_->grad; }
  Matrix& mutable_grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  double item() const;

  void zero_grad();
  Tensor detach() const { return constant(value()); }

  // Reverse-mode sweep from a 1x1 tensor.
  void backward() const;

  const std::shared_ptr<Node>& node() const { return node_; }
  static Tensor from_node(std::shared_ptr<Node> n) {
    Tensor t;
    t.node_ = std::move(n);
    return t;
  }

 private:
  std::shared_ptr<Node> node_;
};

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// ---- Ops. Every op is differentiable in all tensor arguments. ----
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
// a (n x m) + row (1 x m) broadcast over rows.
Tensor add_row(const Tensor& a, const Tensor& row);
// a (n x m) * col (n x 1) broadcast over columns.
Tensor mul_col(const Tensor& a, const Tensor& col);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor neg(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor gelu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
Tensor log_softmax_rows(const Tensor& a);
Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma,
                       const Tensor& beta, double eps = 1e-5);
// Gathers rows of `table` (V x d).
Tensor embedding(const Tensor& table, std::span<const int> ids);
Tensor slice_rows(const Tensor& a, Eigen::Index start, Eigen::Index count);
Tensor slice_cols(const Tensor& a, Eigen::Index start, Eigen::Index count);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor transpose(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor row_sums(const Tensor& a);
Tensor element(const Tensor& a, Eigen::Index r, Eigen::Index c);
// out(i,0) = a(i, index[i]).
Tensor pick_per_row(const Tensor& a, std::span<const int> index);

// Escape hatch for ops defined elsewhere. `backward` reads self.grad and
// accumulates into the parents that require grad.
Tensor custom_op(Matrix value, std::vector<Tensor> inputs, std::function<void(Node&)> backward);

}  // namespace sat::nn
