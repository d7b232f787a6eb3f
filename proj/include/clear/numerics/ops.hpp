#pragma once

#include <span>
#include <vector>

#include "clear/numerics/tensor.hpp"

namespace clear {

// Elementwise, identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

// Broadcasts: `row` is 1 x cols(a), `col` is rows(a) x 1.
Tensor add_row(const Tensor& a, const Tensor& row);
Tensor mul_row(const Tensor& a, const Tensor& row);
Tensor add_col(const Tensor& a, const Tensor& col);
Tensor mul_col(const Tensor& a, const Tensor& col);

Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor square(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor softplus(const Tensor& a);
/// Gradient passes where lo <= a <= hi and is zero outside.
Tensor clamp(const Tensor& a, double lo, double hi);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// rows(a) x 1.
Tensor sum_rows(const Tensor& a);
/// 1 x cols(a).
Tensor sum_cols(const Tensor& a);

Tensor matmul(const Tensor& a, const Tensor& b);
/// a * b^T without materializing the transpose.
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor slice_cols(const Tensor& a, Index start, Index count);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor gather_rows(const Tensor& a, std::span<const Index> rows);
Tensor reshape(const Tensor& a, Shape shape);
/// Each row scaled to unit L2 norm. Zero rows are a contract violation.
Tensor row_normalize(const Tensor& a);

/// Mean over rows of -log softmax(logits)[label].
Tensor cross_entropy_logits(const Tensor& logits, std::span<const int> labels);
/// Mean binary cross-entropy on an n x 1 column of logits.
Tensor bce_with_logits(const Tensor& logits, std::span<const double> targets);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }
inline Tensor operator*(const Tensor& a, double s) { return scale(a, s); }

/// Convolution hyperparameters in the usual [in, out, kernel, stride, pad(, output_pad)] order.
struct ConvGeometry {
  Index in_channels = 1;
  Index out_channels = 1;
  Index kernel = 3;
  Index stride = 1;
  Index padding = 0;
  Index output_padding = 0;

  Index conv_out(Index in) const { return (in + 2 * padding - kernel) / stride + 1; }
  Index transpose_out(Index in) const {
    return (in - 1) * stride - 2 * padding + kernel + output_padding;
  }
};

/// x: (n, C_in, H, W); weight: C_out x (C_in*k*k); bias: 1 x C_out.
/// Implemented as im2col followed by one matrix product.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, const ConvGeometry& g);

/// x: (n, C_in, H, W); weight: C_in x (C_out*k*k); bias: 1 x C_out.
Tensor conv_transpose2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
                        const ConvGeometry& g);

}  // namespace clear
