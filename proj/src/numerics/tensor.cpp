#include "clear/numerics/tensor.hpp"

#include <unordered_set>

#include "clear/errors.hpp"

namespace clear {
namespace {

Shape normalize_shape(const Matrix& value, Shape shape) {
  if (shape.empty()) {
    if (value.rows() == 1 && value.cols() == 1) return {};
    return {value.rows(), value.cols()};
  }
  CLEAR_REQUIRE(shape_numel(shape) == value.size(), "tensor shape does not match data size");
  CLEAR_REQUIRE(shape.front() == value.rows(), "leading dimension must equal row count");
  return shape;
}

}  // namespace

void check_finite(const Matrix& m, const std::string& op) {
  if (!m.allFinite()) throw NumericFault(op, "non-finite value produced");
}

Tensor Tensor::constant(Matrix value, Shape shape) {
  auto n = std::make_shared<detail::Node>();
  n->shape = normalize_shape(value, std::move(shape));
  n->value = std::move(value);
  n->op = "constant";
  return Tensor(std::move(n));
}

Tensor Tensor::parameter(Matrix value, Shape shape) {
  Tensor t = constant(std::move(value), std::move(shape));
  t.node_->requires_grad = true;
  t.node_->op = "parameter";
  return t;
}

Tensor Tensor::scalar(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return constant(std::move(m));
}

Matrix& Tensor::mutable_value() {
  CLEAR_REQUIRE(!node_->backward, "mutable_value() on a non-leaf tensor");
  return node_->value;
}

Matrix Tensor::grad() const {
  if (node_->grad.size() == 0) return Matrix::Zero(node_->value.rows(), node_->value.cols());
  return node_->grad;
}

double Tensor::item() const {
  CLEAR_REQUIRE(node_->value.size() == 1, "item() on a non-scalar tensor");
  return node_->value(0, 0);
}

Tensor Tensor::detach() const {
  auto n = std::make_shared<detail::Node>();
  n->value = node_->value;
  n->shape = node_->shape;
  n->op = "detach";
  return Tensor(std::move(n));
}

void Tensor::backward() const {
  CLEAR_REQUIRE(defined(), "backward() on an empty tensor");
  CLEAR_REQUIRE(node_->value.size() == 1, "backward() needs a scalar root");
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      detail::Node* child = n->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  for (detail::Node* n : order) {
    if (n->backward) n->grad.resize(0, 0);
  }
  if (node_->backward) {
    node_->grad = Matrix::Ones(1, 1);
  } else {
    detail::accumulate(*node_, Matrix::Ones(1, 1));
  }

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (!n->backward || n->grad.size() == 0) continue;
    if (!n->grad.allFinite()) throw NumericFault(n->op, "non-finite gradient during backward");
    n->backward(*n);
  }
  for (detail::Node* n : order) {
    if (!n->backward && n->grad.size() != 0 && !n->grad.allFinite()) {
      throw NumericFault(n->op, "non-finite gradient reached a leaf");
    }
  }
}

Tensor make_op(std::string op, Matrix value, Shape shape, const std::vector<Tensor>& inputs,
               std::function<void(detail::Node&)> backward) {
  check_finite(value, op);
  auto n = std::make_shared<detail::Node>();
  n->shape = normalize_shape(value, std::move(shape));
  n->value = std::move(value);
  n->op = std::move(op);
  bool any = false;
  for (const Tensor& t : inputs) any = any || t.requires_grad();
  if (any) {
    n->requires_grad = true;
    n->inputs.reserve(inputs.size());
    for (const Tensor& t : inputs) n->inputs.push_back(t.node());
    n->backward = std::move(backward);
  }
  return Tensor(std::move(n));
}

}  // namespace clear
