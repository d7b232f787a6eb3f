#include "clear/numerics/ops.hpp"

#include <cmath>

#include "clear/errors.hpp"

namespace clear {

using detail::accumulate;
using detail::Node;

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ContractViolation(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) +
                            "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                            "x" + std::to_string(b.cols()) + ")");
  }
}

Node& in(Node& self, std::size_t i) { return *self.inputs[i]; }

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  return make_op("add", a.value() + b.value(), a.shape(), {a, b}, [](Node& self) {
    accumulate(in(self, 0), self.grad);
    accumulate(in(self, 1), self.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  return make_op("sub", a.value() - b.value(), a.shape(), {a, b}, [](Node& self) {
    accumulate(in(self, 0), self.grad);
    accumulate(in(self, 1), -self.grad);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Matrix v = a.value().cwiseProduct(b.value());
  return make_op("mul", std::move(v), a.shape(), {a, b}, [](Node& self) {
    accumulate(in(self, 0), self.grad.cwiseProduct(in(self, 1).value));
    accumulate(in(self, 1), self.grad.cwiseProduct(in(self, 0).value));
  });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  CLEAR_REQUIRE(row.rows() == 1 && row.cols() == a.cols(), "add_row: row must be 1 x cols");
  Matrix v = a.value().rowwise() + row.value().row(0);
  return make_op("add_row", std::move(v), a.shape(), {a, row}, [](Node& self) {
    accumulate(in(self, 0), self.grad);
    accumulate(in(self, 1), self.grad.colwise().sum());
  });
}

Tensor mul_row(const Tensor& a, const Tensor& row) {
  CLEAR_REQUIRE(row.rows() == 1 && row.cols() == a.cols(), "mul_row: row must be 1 x cols");
  Matrix v = a.value().array().rowwise() * row.value().row(0).array();
  return make_op("mul_row", std::move(v), a.shape(), {a, row}, [](Node& self) {
    const Matrix& av = in(self, 0).value;
    const Matrix& rv = in(self, 1).value;
    accumulate(in(self, 0), self.grad.array().rowwise() * rv.row(0).array());
    accumulate(in(self, 1), self.grad.cwiseProduct(av).colwise().sum());
  });
}

Tensor add_col(const Tensor& a, const Tensor& col) {
  CLEAR_REQUIRE(col.cols() == 1 && col.rows() == a.rows(), "add_col: col must be rows x 1");
  Matrix v = a.value().colwise() + col.value().col(0);
  return make_op("add_col", std::move(v), a.shape(), {a, col}, [](Node& self) {
    accumulate(in(self, 0), self.grad);
    accumulate(in(self, 1), self.grad.rowwise().sum());
  });
}

Tensor mul_col(const Tensor& a, const Tensor& col) {
  CLEAR_REQUIRE(col.cols() == 1 && col.rows() == a.rows(), "mul_col: col must be rows x 1");
  Matrix v = a.value().array().colwise() * col.value().col(0).array();
  return make_op("mul_col", std::move(v), a.shape(), {a, col}, [](Node& self) {
    const Matrix& av = in(self, 0).value;
    const Matrix& cv = in(self, 1).value;
    accumulate(in(self, 0), self.grad.array().colwise() * cv.col(0).array());
    accumulate(in(self, 1), self.grad.cwiseProduct(av).rowwise().sum());
  });
}

Tensor neg(const Tensor& a) {
  return make_op("neg", -a.value(), a.shape(), {a},
                 [](Node& self) { accumulate(in(self, 0), -self.grad); });
}

Tensor scale(const Tensor& a, double s) {
  return make_op("scale", a.value() * s, a.shape(), {a},
                 [s](Node& self) { accumulate(in(self, 0), self.grad * s); });
}

Tensor add_scalar(const Tensor& a, double s) {
  Matrix v = a.value().array() + s;
  return make_op("add_scalar", std::move(v), a.shape(), {a},
                 [](Node& self) { accumulate(in(self, 0), self.grad); });
}

Tensor exp(const Tensor& a) {
  Matrix v = a.value().array().exp();
  return make_op("exp", std::move(v), a.shape(), {a}, [](Node& self) {
    accumulate(in(self, 0), self.grad.cwiseProduct(self.value));
  });
}

Tensor log(const Tensor& a) {
  Matrix v = a.value().array().log();
  return make_op("log", std::move(v), a.shape(), {a}, [](Node& self) {
    accumulate(in(self, 0), self.grad.array() / in(self, 0).value.array());
  });
}

Tensor square(const Tensor& a) {
  Matrix v = a.value().array().square();
  return make_op("square", std::move(v), a.shape(), {a}, [](Node& self) {
    accumulate(in(self, 0), 2.0 * self.grad.array() * in(self, 0).value.array());
  });
}

Tensor sqrt(const Tensor& a) {
  Matrix v = a.value().array().sqrt();
  return make_op("sqrt", std::move(v), a.shape(), {a}, [](Node& self) {
    accumulate(in(self, 0), 0.5 * self.grad.array() / self.value.array());
  });
}

Tensor sigmoid(const Tensor& a) {
  Matrix v = a.value().unaryExpr([](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  return make_op("sigmoid", std::move(v), a.shape(), {a}, [](Node& self) {
    accumulate(in(self, 0),
               self.grad.array() * self.value.array() * (1.0 - self.value.array()));
  });
}

Tensor relu(const Tensor& a) {
  Matrix v = a.value().cwiseMax(0.0);
  return make_op("relu", std::move(v), a.shape(), {a}, [](Node& self) {
    accumulate(in(self, 0),
               (in(self, 0).value.array() > 0.0).select(self.grad.array(), 0.0));
  });
}

Tensor softplus(const Tensor& a) {
  Matrix v = a.value().unaryExpr(
      [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); });
  return make_op("softplus", std::move(v), a.shape(), {a}, [](Node& self) {
    Matrix s = in(self, 0).value.unaryExpr([](double x) {
      if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
      const double e = std::exp(x);
      return e / (1.0 + e);
    });
    accumulate(in(self, 0), self.grad.cwiseProduct(s));
  });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  Matrix v = a.value().cwiseMax(lo).cwiseMin(hi);
  return make_op("clamp", std::move(v), a.shape(), {a}, [lo, hi](Node& self) {
    const auto& x = in(self, 0).value.array();
    accumulate(in(self, 0), (x >= lo && x <= hi).select(self.grad.array(), 0.0));
  });
}

Tensor sum(const Tensor& a) {
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  return make_op("sum", std::move(v), {}, {a}, [](Node& self) {
    const Node& x = in(self, 0);
    accumulate(in(self, 0), Matrix::Constant(x.value.rows(), x.value.cols(), self.grad(0, 0)));
  });
}

Tensor mean(const Tensor& a) {
  CLEAR_REQUIRE(a.numel() > 0, "mean of an empty tensor");
  Matrix v(1, 1);
  v(0, 0) = a.value().mean();
  return make_op("mean", std::move(v), {}, {a}, [](Node& self) {
    const Node& x = in(self, 0);
    const double g = self.grad(0, 0) / static_cast<double>(x.value.size());
    accumulate(in(self, 0), Matrix::Constant(x.value.rows(), x.value.cols(), g));
  });
}

Tensor sum_rows(const Tensor& a) {
  Matrix v = a.value().rowwise().sum();
  return make_op("sum_rows", std::move(v), {a.rows(), 1}, {a}, [](Node& self) {
    const Node& x = in(self, 0);
    accumulate(in(self, 0), self.grad.col(0).replicate(1, x.value.cols()));
  });
}

Tensor sum_cols(const Tensor& a) {
  Matrix v = a.value().colwise().sum();
  return make_op("sum_cols", std::move(v), {1, a.cols()}, {a}, [](Node& self) {
    const Node& x = in(self, 0);
    accumulate(in(self, 0), self.grad.row(0).replicate(x.value.rows(), 1));
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  CLEAR_REQUIRE(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Matrix v = a.value() * b.value();
  return make_op("matmul", std::move(v), {a.rows(), b.cols()}, {a, b}, [](Node& self) {
    if (in(self, 0).requires_grad)
      accumulate(in(self, 0), self.grad * in(self, 1).value.transpose());
    if (in(self, 1).requires_grad)
      accumulate(in(self, 1), in(self, 0).value.transpose() * self.grad);
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  CLEAR_REQUIRE(a.cols() == b.cols(), "matmul_nt: column counts differ");
  Matrix v = a.value() * b.value().transpose();
  return make_op("matmul_nt", std::move(v), {a.rows(), b.rows()}, {a, b}, [](Node& self) {
    if (in(self, 0).requires_grad) accumulate(in(self, 0), self.grad * in(self, 1).value);
    if (in(self, 1).requires_grad)
      accumulate(in(self, 1), self.grad.transpose() * in(self, 0).value);
  });
}

Tensor transpose(const Tensor& a) {
  Matrix v = a.value().transpose();
  return make_op("transpose", std::move(v), {a.cols(), a.rows()}, {a}, [](Node& self) {
    accumulate(in(self, 0), self.grad.transpose());
  });
}

Tensor slice_cols(const Tensor& a, Index start, Index count) {
  CLEAR_REQUIRE(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols out of range");
  Matrix v = a.value().middleCols(start, count);
  return make_op("slice_cols", std::move(v), {a.rows(), count}, {a},
                 [start, count](Node& self) {
                   const Node& x = in(self, 0);
                   Matrix g = Matrix::Zero(x.value.rows(), x.value.cols());
                   g.middleCols(start, count) = self.grad;
                   accumulate(in(self, 0), g);
                 });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  CLEAR_REQUIRE(a.rows() == b.rows(), "concat_cols: row counts differ");
  Matrix v(a.rows(), a.cols() + b.cols());
  v << a.value(), b.value();
  const Index ca = a.cols();
  const Index cb = b.cols();
  return make_op("concat_cols", std::move(v), {a.rows(), ca + cb}, {a, b}, [ca, cb](Node& self) {
    accumulate(in(self, 0), self.grad.leftCols(ca));
    accumulate(in(self, 1), self.grad.rightCols(cb));
  });
}

Tensor gather_rows(const Tensor& a, std::span<const Index> rows) {
  Matrix v(static_cast<Index>(rows.size()), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CLEAR_REQUIRE(rows[i] >= 0 && rows[i] < a.rows(), "gather_rows index out of range");
    v.row(static_cast<Index>(i)) = a.value().row(rows[i]);
  }
  std::vector<Index> idx(rows.begin(), rows.end());
  Shape shape = a.shape().empty() ? Shape{a.rows(), a.cols()} : a.shape();
  shape[0] = static_cast<Index>(rows.size());
  return make_op("gather_rows", std::move(v), shape, {a}, [idx](Node& self) {
    const Node& x = in(self, 0);
    Matrix g = Matrix::Zero(x.value.rows(), x.value.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) g.row(idx[i]) += self.grad.row(static_cast<Index>(i));
    accumulate(in(self, 0), g);
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  CLEAR_REQUIRE(!shape.empty() && shape_numel(shape) == a.numel(), "reshape: size mismatch");
  const Index r = shape.front();
  const Index c = a.numel() / r;
  Matrix v = Eigen::Map<const Matrix>(a.value().data(), r, c);
  const Index ar = a.rows();
  const Index ac = a.cols();
  return make_op("reshape", std::move(v), std::move(shape), {a}, [ar, ac](Node& self) {
    accumulate(in(self, 0), Eigen::Map<const Matrix>(self.grad.data(), ar, ac));
  });
}

Tensor row_normalize(const Tensor& a) {
  Vector norms = a.value().rowwise().norm();
  for (Index i = 0; i < norms.size(); ++i) {
    if (!(norms(i) > 0.0)) throw ContractViolation("row_normalize: zero-norm vector");
  }
  Matrix v = a.value().array().colwise() / norms.array();
  return make_op("row_normalize", std::move(v), a.shape(), {a}, [norms](Node& self) {
    const Matrix& y = self.value;
    Vector dots = self.grad.cwiseProduct(y).rowwise().sum();
    Matrix g = (self.grad - (y.array().colwise() * dots.array()).matrix());
    g.array().colwise() /= norms.array();
    accumulate(in(self, 0), g);
  });
}

Tensor cross_entropy_logits(const Tensor& logits, std::span<const int> labels) {
  const Index n = logits.rows();
  CLEAR_REQUIRE(static_cast<Index>(labels.size()) == n && n > 0,
                "cross_entropy_logits: label count mismatch");
  Matrix probs(n, logits.cols());
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    CLEAR_REQUIRE(labels[i] >= 0 && labels[i] < logits.cols(), "label out of range");
    const auto row = logits.value().row(i);
    const double m = row.maxCoeff();
    probs.row(i) = (row.array() - m).exp();
    const double z = probs.row(i).sum();
    probs.row(i) /= z;
    total += (m + std::log(z)) - row(labels[i]);
  }
  Matrix v(1, 1);
  v(0, 0) = total / static_cast<double>(n);
  std::vector<int> y(labels.begin(), labels.end());
  return make_op("cross_entropy", std::move(v), {}, {logits},
                 [probs = std::move(probs), y = std::move(y)](Node& self) {
                   Matrix g = probs;
                   for (std::size_t i = 0; i < y.size(); ++i) g(static_cast<Index>(i), y[i]) -= 1.0;
                   g *= self.grad(0, 0) / static_cast<double>(y.size());
                   accumulate(in(self, 0), g);
                 });
}

Tensor bce_with_logits(const Tensor& logits, std::span<const double> targets) {
  const Index n = logits.rows();
  CLEAR_REQUIRE(logits.cols() == 1 && static_cast<Index>(targets.size()) == n && n > 0,
                "bce_with_logits: expects an n x 1 column and n targets");
  double total = 0.0;
  Vector p(n);
  for (Index i = 0; i < n; ++i) {
    const double x = logits.value()(i, 0);
    // log(1 + e^x) - t x, evaluated stably
    total += std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))) - targets[i] * x;
    p(i) = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  Matrix v(1, 1);
  v(0, 0) = total / static_cast<double>(n);
  std::vector<double> t(targets.begin(), targets.end());
  return make_op("bce_with_logits", std::move(v), {}, {logits},
                 [p = std::move(p), t = std::move(t)](Node& self) {
                   Matrix g(p.size(), 1);
                   for (Index i = 0; i < p.size(); ++i) g(i, 0) = p(i) - t[i];
                   g *= self.grad(0, 0) / static_cast<double>(p.size());
                   accumulate(in(self, 0), g);
                 });
}

}  // namespace clear
