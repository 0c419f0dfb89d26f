#include "sat/nn/tensor.hpp"

#include <cmath>
#include <numbers>
#include <unordered_set>

#include "sat/error.hpp"

namespace sat::nn {
namespace {

thread_local bool g_grad_enabled = true;

Tensor make(Matrix value, std::vector<Tensor> inputs,
            std::function<void(Node&)> fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (g_grad_enabled) {
    bool any = false;
    for (const auto& t : inputs) any = any || t.requires_grad();
    if (any) {
      node->requires_grad = true;
      node->parents.reserve(inputs.size());
      for (const auto& t : inputs) node->parents.push_back(t.node());
      node->backward_fn = std::move(fn);
    }
  }
  return Tensor::from_node(std::move(node));
}

// Accumulates `g` into parent `i` when it participates in the gradient.
template <typename Expr>
void acc(Node& self, std::size_t i, const Expr& g) {
  Node& p = *self.parents[i];
  if (!p.requires_grad) return;
  p.ensure_grad();
  p.grad += g;
}

bool wants(const Node& self, std::size_t i) {
  return self.parents[i]->requires_grad;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DomainError(std::string(op) + ": shape mismatch");
  }
}

}  // namespace

Tensor Tensor::constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return from_node(std::move(node));
}

Tensor Tensor::leaf(Matrix value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return from_node(std::move(node));
}

double Tensor::item() const {
  if (rows() != 1 || cols() != 1) throw DomainError("item() on non-scalar");
  return node_->value(0, 0);
}

void Tensor::zero_grad() {
  if (node_->grad.size() > 0) node_->grad.setZero();
}

void Tensor::backward() const {
  if (rows() != 1 || cols() != 1) {
    throw DomainError("backward() requires a scalar tensor");
  }
  if (!node_->requires_grad) return;
  // Iterative post-order DFS for a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, idx] = stack.back();
    if (idx < n->parents.size()) {
      Node* p = n->parents[idx++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  for (Node* n : order) {
    if (n->backward_fn) n->grad = Matrix::Zero(n->value.rows(), n->value.cols());
  }
  node_->ensure_grad();
  node_->grad(0, 0) += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) throw DomainError("matmul: inner dim mismatch");
  return make(a.value() * b.value(), {a, b}, [](Node& s) {
    const Matrix& av = s.parents[0]->value;
    const Matrix& bv = s.parents[1]->value;
    if (wants(s, 0)) acc(s, 0, s.grad * bv.transpose());
    if (wants(s, 1)) acc(s, 1, av.transpose() * s.grad);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  return make(a.value() + b.value(), {a, b}, [](Node& s) {
    acc(s, 0, s.grad);
    acc(s, 1, s.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  return make(a.value() - b.value(), {a, b}, [](Node& s) {
    acc(s, 0, s.grad);
    acc(s, 1, -s.grad);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  return make(a.value().cwiseProduct(b.value()), {a, b}, [](Node& s) {
    if (wants(s, 0)) acc(s, 0, s.grad.cwiseProduct(s.parents[1]->value));
    if (wants(s, 1)) acc(s, 1, s.grad.cwiseProduct(s.parents[0]->value));
  });
}

Tensor div(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "div");
  return make(a.value().cwiseQuotient(b.value()), {a, b}, [](Node& s) {
    const Matrix& av = s.parents[0]->value;
    const Matrix& bv = s.parents[1]->value;
    if (wants(s, 0)) acc(s, 0, s.grad.cwiseQuotient(bv));
    if (wants(s, 1)) {
      acc(s, 1, -s.grad.cwiseProduct(av).cwiseQuotient(bv.cwiseProduct(bv)));
    }
  });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw DomainError("add_row: shape mismatch");
  }
  Matrix v = a.value().rowwise() + row.value().row(0);
  return make(std::move(v), {a, row}, [](Node& s) {
    acc(s, 0, s.grad);
    if (wants(s, 1)) acc(s, 1, s.grad.colwise().sum());
  });
}

Tensor mul_col(const Tensor& a, const Tensor& col) {
  if (col.cols() != 1 || col.rows() != a.rows()) {
    throw DomainError("mul_col: shape mismatch");
  }
  Matrix v = a.value().array().colwise() * col.value().col(0).array();
  return make(std::move(v), {a, col}, [](Node& s) {
    const Matrix& av = s.parents[0]->value;
    const Matrix& cv = s.parents[1]->value;
    if (wants(s, 0)) {
      acc(s, 0, Matrix(s.grad.array().colwise() * cv.col(0).array()));
    }
    if (wants(s, 1)) acc(s, 1, s.grad.cwiseProduct(av).rowwise().sum());
  });
}

Tensor scale(const Tensor& a, double k) {
  return make(a.value() * k, {a}, [k](Node& s) { acc(s, 0, s.grad * k); });
}

Tensor add_scalar(const Tensor& a, double k) {
  return make(a.value().array() + k, {a}, [](Node& s) { acc(s, 0, s.grad); });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor tanh(const Tensor& a) {
  Matrix v = a.value().array().tanh();
  return make(std::move(v), {a}, [](Node& s) {
    acc(s, 0, Matrix(s.grad.array() * (1.0 - s.value.array().square())));
  });
}

Tensor gelu(const Tensor& a) {
  constexpr double k = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double c = 0.044715;
  const Matrix& x = a.value();
  Matrix v(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x(i);
    v(i) = 0.5 * xi * (1.0 + std::tanh(k * (xi + c * xi * xi * xi)));
  }
  return make(std::move(v), {a}, [](Node& s) {
    const Matrix& xv = s.parents[0]->value;
    Matrix g(xv.rows(), xv.cols());
    for (Eigen::Index i = 0; i < xv.size(); ++i) {
      const double xi = xv(i);
      const double t = std::tanh(k * (xi + c * xi * xi * xi));
      const double dt = (1.0 - t * t) * k * (1.0 + 3.0 * c * xi * xi);
      g(i) = s.grad(i) * (0.5 * (1.0 + t) + 0.5 * xi * dt);
    }
    acc(s, 0, g);
  });
}

Tensor exp(const Tensor& a) {
  Matrix v = a.value().array().exp();
  return make(std::move(v), {a}, [](Node& s) {
    acc(s, 0, s.grad.cwiseProduct(s.value));
  });
}

Tensor log(const Tensor& a) {
  Matrix v = a.value().array().log();
  return make(std::move(v), {a}, [](Node& s) {
    acc(s, 0, s.grad.cwiseQuotient(s.parents[0]->value));
  });
}

Tensor sqrt(const Tensor& a) {
  Matrix v = a.value().array().sqrt();
  return make(std::move(v), {a}, [](Node& s) {
    acc(s, 0, Matrix(s.grad.array() * 0.5 / s.value.array()));
  });
}

Tensor softmax_rows(const Tensor& a) {
  Matrix v = a.value();
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const double m = v.row(r).maxCoeff();
    v.row(r) = (v.row(r).array() - m).exp();
    v.row(r) /= v.row(r).sum();
  }
  return make(std::move(v), {a}, [](Node& s) {
    const Matrix& y = s.value;
    Eigen::VectorXd dots = (s.grad.cwiseProduct(y)).rowwise().sum();
    Matrix g = y.cwiseProduct(Matrix(s.grad.colwise() - dots));
    acc(s, 0, g);
  });
}

Tensor log_softmax_rows(const Tensor& a) {
  Matrix v = a.value();
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const double m = v.row(r).maxCoeff();
    const double lse = m + std::log((v.row(r).array() - m).exp().sum());
    v.row(r).array() -= lse;
  }
  return make(std::move(v), {a}, [](Node& s) {
    Matrix p = s.value.array().exp();
    Eigen::VectorXd gs = s.grad.rowwise().sum();
    Matrix g = s.grad - Matrix(p.array().colwise() * gs.array());
    acc(s, 0, g);
  });
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma,
                       const Tensor& beta, double eps) {
  const Eigen::Index d = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != d || beta.rows() != 1 ||
      beta.cols() != d) {
    throw DomainError("layer_norm: parameter shape mismatch");
  }
  const Matrix& xv = x.value();
  Matrix xhat(xv.rows(), d);
  Eigen::VectorXd inv_std(xv.rows());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const double mu = xv.row(r).mean();
    const double var = (xv.row(r).array() - mu).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mu) * inv_std(r);
  }
  Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array())
                   .rowwise() +
               beta.value().row(0).array();
  return make(std::move(out), {x, gamma, beta},
              [xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& s) {
                const Matrix& gv = s.parents[1]->value;
                const auto dd = static_cast<double>(gv.cols());
                if (wants(s, 0)) {
                  Matrix dxhat = s.grad.array().rowwise() * gv.row(0).array();
                  Matrix dx(dxhat.rows(), dxhat.cols());
                  for (Eigen::Index r = 0; r < dxhat.rows(); ++r) {
                    const double m1 = dxhat.row(r).sum() / dd;
                    const double m2 = dxhat.row(r).dot(xhat.row(r)) / dd;
                    dx.row(r) = (dxhat.row(r).array() - m1 -
                                 xhat.row(r).array() * m2) *
                                inv_std(r);
                  }
                  acc(s, 0, dx);
                }
                if (wants(s, 1)) {
                  acc(s, 1, s.grad.cwiseProduct(xhat).colwise().sum());
                }
                if (wants(s, 2)) acc(s, 2, s.grad.colwise().sum());
              });
}

Tensor embedding(const Tensor& table, std::span<const int> ids) {
  Matrix v(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows()) {
      throw DomainError("embedding: id out of range");
    }
    v.row(static_cast<Eigen::Index>(i)) = table.value().row(ids[i]);
  }
  std::vector<int> idv(ids.begin(), ids.end());
  return make(std::move(v), {table}, [idv = std::move(idv)](Node& s) {
    Node& p = *s.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t i = 0; i < idv.size(); ++i) {
      p.grad.row(idv[i]) += s.grad.row(static_cast<Eigen::Index>(i));
    }
  });
}

Tensor slice_rows(const Tensor& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw DomainError("slice_rows: out of range");
  }
  Matrix v = a.value().middleRows(start, count);
  return make(std::move(v), {a}, [start, count](Node& s) {
    Node& p = *s.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    p.grad.middleRows(start, count) += s.grad;
  });
}

Tensor slice_cols(const Tensor& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw DomainError("slice_cols: out of range");
  }
  Matrix v = a.value().middleCols(start, count);
  return make(std::move(v), {a}, [start, count](Node& s) {
    Node& p = *s.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    p.grad.middleCols(start, count) += s.grad;
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DomainError("concat_rows: no inputs");
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts[0].cols();
  for (const auto& p : parts) {
    if (p.cols() != cols) throw DomainError("concat_rows: column mismatch");
    rows += p.rows();
  }
  Matrix v(rows, cols);
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    v.middleRows(off, p.rows()) = p.value();
    off += p.rows();
  }
  return make(std::move(v), parts, [](Node& s) {
    Eigen::Index o = 0;
    for (std::size_t i = 0; i < s.parents.size(); ++i) {
      const Eigen::Index r = s.parents[i]->value.rows();
      if (wants(s, i)) acc(s, i, s.grad.middleRows(o, r));
      o += r;
    }
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DomainError("concat_cols: no inputs");
  Eigen::Index cols = 0;
  const Eigen::Index rows = parts[0].rows();
  for (const auto& p : parts) {
    if (p.rows() != rows) throw DomainError("concat_cols: row mismatch");
    cols += p.cols();
  }
  Matrix v(rows, cols);
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    v.middleCols(off, p.cols()) = p.value();
    off += p.cols();
  }
  return make(std::move(v), parts, [](Node& s) {
    Eigen::Index o = 0;
    for (std::size_t i = 0; i < s.parents.size(); ++i) {
      const Eigen::Index c = s.parents[i]->value.cols();
      if (wants(s, i)) acc(s, i, s.grad.middleCols(o, c));
      o += c;
    }
  });
}

Tensor transpose(const Tensor& a) {
  return make(a.value().transpose(), {a},
              [](Node& s) { acc(s, 0, s.grad.transpose()); });
}

Tensor sum(const Tensor& a) {
  return make(Matrix::Constant(1, 1, a.value().sum()), {a}, [](Node& s) {
    const Matrix& pv = s.parents[0]->value;
    acc(s, 0, Matrix::Constant(pv.rows(), pv.cols(), s.grad(0, 0)));
  });
}

Tensor mean(const Tensor& a) {
  const auto n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Tensor row_sums(const Tensor& a) {
  Matrix v = a.value().rowwise().sum();
  return make(std::move(v), {a}, [](Node& s) {
    const Eigen::Index c = s.parents[0]->value.cols();
    acc(s, 0, s.grad.replicate(1, c));
  });
}

Tensor element(const Tensor& a, Eigen::Index r, Eigen::Index c) {
  if (r < 0 || c < 0 || r >= a.rows() || c >= a.cols()) {
    throw DomainError("element: index out of range");
  }
  return make(Matrix::Constant(1, 1, a.value()(r, c)), {a}, [r, c](Node& s) {
    Node& p = *s.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    p.grad(r, c) += s.grad(0, 0);
  });
}

Tensor pick_per_row(const Tensor& a, std::span<const int> index) {
  if (static_cast<Eigen::Index>(index.size()) != a.rows()) {
    throw DomainError("pick_per_row: index length mismatch");
  }
  Matrix v(a.rows(), 1);
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const int c = index[static_cast<std::size_t>(r)];
    if (c < 0 || c >= a.cols()) throw DomainError("pick_per_row: bad index");
    v(r, 0) = a.value()(r, c);
  }
  std::vector<int> idx(index.begin(), index.end());
  return make(std::move(v), {a}, [idx = std::move(idx)](Node& s) {
    Node& p = *s.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t r = 0; r < idx.size(); ++r) {
      p.grad(static_cast<Eigen::Index>(r), idx[r]) +=
          s.grad(static_cast<Eigen::Index>(r), 0);
    }
  });
}

Tensor custom_op(Matrix value, std::vector<Tensor> inputs, std::function<void(Node&)> backward) {
  return make(std::move(value), std::move(inputs), std::move(backward));
}

}  // namespace sat::nn
