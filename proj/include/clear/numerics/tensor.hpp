#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "clear/numerics/types.hpp"

namespace clear {

namespace detail {

struct Node {
  Matrix value;
  Matrix grad;  // empty until something flows into it
  Shape shape;
  bool requires_grad = false;
  std::string op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into inputs[i]->grad.
  std::function<void(Node&)> backward;
};

template <typename Derived>
void accumulate(Node& n, const Eigen::MatrixBase<Derived>& g) {
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

template <typename Derived>
void accumulate(Node& n, const Eigen::ArrayBase<Derived>& g) {
  accumulate(n, g.matrix());
}

}  // namespace detail

/// Dense float64 array taking part in a reverse-mode gradient tape.
///
/// Storage is a row-major matrix whose row count is the leading dimension of
/// `shape()` and whose columns hold the remaining dimensions flattened, so an
/// (n, C, H, W) image batch is an n x (C*H*W) matrix and the flat buffer is the
/// usual NCHW layout. A shape of {} is a scalar (1 x 1).
///
/// Copies are shallow: they alias the same node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  static Tensor constant(Matrix value, Shape shape = {});
  static Tensor parameter(Matrix value, Shape shape = {});
  static Tensor scalar(double v);

  bool defined() const { return node_ != nullptr; }

  const Matrix& value() const { return node_->value; }
  /// Direct write access for optimizers and initializers. Only valid on leaves.
  Matrix& mutable_value();

  bool has_grad() const { return node_->grad.size() != 0; }
  /// Gradient buffer; zeros of the value's size when nothing has flowed yet.
  Matrix grad() const;
  void zero_grad() { node_->grad.resize(0, 0); }

  const Shape& shape() const { return node_->shape; }
  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  Index numel() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }
  const std::string& op() const { return node_->op; }

  double item() const;

  /// Same values, cut off from the tape.
  Tensor detach() const;

  /// Runs reverse-mode accumulation from this scalar. Leaf gradients
  /// accumulate across calls; intermediate gradients are recomputed.
  void backward() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Builds a graph node. `backward` may be empty when no input needs a gradient.
Tensor make_op(std::string op, Matrix value, Shape shape, const std::vector<Tensor>& inputs,
               std::function<void(detail::Node&)> backward);

/// Throws NumericFault naming `op` if any entry is NaN or infinite.
void check_finite(const Matrix& m, const std::string& op);

/// Default 2-D shape for a matrix.
inline Shape matrix_shape(const Matrix& m) { return {m.rows(), m.cols()}; }

/// Leaf parameters collected for optimizers and checkpoints.
struct NamedParameter {
  std::string name;
  Tensor tensor;
};
using ParameterList = std::vector<NamedParameter>;

}  // namespace clear
