#include <string>

#include "clear/errors.hpp"
#include "clear/numerics/ops.hpp"

namespace clear {

using detail::accumulate;
using detail::Node;

namespace {

// Patch extraction between a "large" (C, Hb, Wb) image and a "small" (Hs, Ws)
// grid of kernel positions: cols(p, c*k*k + kh*k + kw) = large(c, hs*s-pad+kh, ws*s-pad+kw).
struct PatchGrid {
  Index channels, hb, wb, hs, ws, k, stride, pad;

  Index rows() const { return hs * ws; }
  Index cols() const { return channels * k * k; }
};

template <typename Op>
void for_each_tap(const PatchGrid& g, Op&& op) {
  for (Index oh = 0; oh < g.hs; ++oh) {
    for (Index ow = 0; ow < g.ws; ++ow) {
      const Index row = oh * g.ws + ow;
      for (Index c = 0; c < g.channels; ++c) {
        for (Index kh = 0; kh < g.k; ++kh) {
          const Index ih = oh * g.stride - g.pad + kh;
          if (ih < 0 || ih >= g.hb) continue;
          for (Index kw = 0; kw < g.k; ++kw) {
            const Index iw = ow * g.stride - g.pad + kw;
            if (iw < 0 || iw >= g.wb) continue;
            op(row, (c * g.k + kh) * g.k + kw, (c * g.hb + ih) * g.wb + iw);
          }
        }
      }
    }
  }
}

// cols block must be pre-zeroed.
void im2col(const PatchGrid& g, const double* large, double* cols) {
  const Index nc = g.cols();
  for_each_tap(g, [&](Index row, Index col, Index src) { cols[row * nc + col] = large[src]; });
}

void col2im(const PatchGrid& g, const double* cols, double* large) {
  const Index nc = g.cols();
  for_each_tap(g, [&](Index row, Index col, Index dst) { large[dst] += cols[row * nc + col]; });
}

Index spatial_side(const Tensor& x, Index channels, const char* op) {
  const Shape& s = x.shape();
  if (s.size() != 4 || s[1] != channels || s[2] != s[3]) {
    throw ContractViolation(std::string(op) + ": expected (n, " + std::to_string(channels) +
                            ", H, H) input");
  }
  return s[2];
}

// Per-sample (C x P) <-> (P x C) regrouping between NCHW rows and a stacked patch matrix.
void nchw_to_stacked(const Matrix& nchw, Index channels, Index positions, Matrix& stacked) {
  const Index n = nchw.rows();
  stacked.resize(n * positions, channels);
  for (Index i = 0; i < n; ++i) {
    Eigen::Map<const Matrix> block(nchw.row(i).data(), channels, positions);
    stacked.middleRows(i * positions, positions) = block.transpose();
  }
}

void stacked_to_nchw(const Matrix& stacked, Index channels, Index positions, Matrix& nchw) {
  const Index n = stacked.rows() / positions;
  nchw.resize(n, channels * positions);
  for (Index i = 0; i < n; ++i) {
    Eigen::Map<Matrix> block(nchw.row(i).data(), channels, positions);
    block = stacked.middleRows(i * positions, positions).transpose();
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, const ConvGeometry& g) {
  const Index h = spatial_side(x, g.in_channels, "conv2d");
  const Index kk = g.in_channels * g.kernel * g.kernel;
  CLEAR_REQUIRE(weight.rows() == g.out_channels && weight.cols() == kk,
                "conv2d: weight must be C_out x (C_in*k*k)");
  CLEAR_REQUIRE(bias.rows() == 1 && bias.cols() == g.out_channels, "conv2d: bias must be 1 x C_out");
  const Index ho = g.conv_out(h);
  CLEAR_REQUIRE(ho > 0, "conv2d: output would be empty");
  const PatchGrid grid{g.in_channels, h, h, ho, ho, g.kernel, g.stride, g.padding};
  const Index n = x.rows();
  const Index p = grid.rows();

  auto cols = std::make_shared<Matrix>(Matrix::Zero(n * p, kk));
  for (Index i = 0; i < n; ++i) im2col(grid, x.value().row(i).data(), cols->row(i * p).data());

  Matrix y = (*cols) * weight.value().transpose();
  y.rowwise() += bias.value().row(0);
  Matrix out;
  stacked_to_nchw(y, g.out_channels, p, out);

  return make_op("conv2d", std::move(out), {n, g.out_channels, ho, ho}, {x, weight, bias},
                 [grid, cols, g, p](Node& self) {
                   Matrix gy;
                   nchw_to_stacked(self.grad, g.out_channels, p, gy);
                   Node& xn = *self.inputs[0];
                   Node& wn = *self.inputs[1];
                   Node& bn = *self.inputs[2];
                   if (wn.requires_grad) accumulate(wn, gy.transpose() * (*cols));
                   if (bn.requires_grad) accumulate(bn, gy.colwise().sum());
                   if (xn.requires_grad) {
                     Matrix gcols = gy * wn.value;
                     Matrix gx = Matrix::Zero(xn.value.rows(), xn.value.cols());
                     for (Index i = 0; i < gx.rows(); ++i) {
                       col2im(grid, gcols.row(i * p).data(), gx.row(i).data());
                     }
                     accumulate(xn, gx);
                   }
                 });
}

Tensor conv_transpose2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
                        const ConvGeometry& g) {
  const Index h = spatial_side(x, g.in_channels, "conv_transpose2d");
  const Index kk = g.out_channels * g.kernel * g.kernel;
  CLEAR_REQUIRE(weight.rows() == g.in_channels && weight.cols() == kk,
                "conv_transpose2d: weight must be C_in x (C_out*k*k)");
  CLEAR_REQUIRE(bias.rows() == 1 && bias.cols() == g.out_channels,
                "conv_transpose2d: bias must be 1 x C_out");
  CLEAR_REQUIRE(g.output_padding < g.stride, "conv_transpose2d: output_padding must be < stride");
  const Index ho = g.transpose_out(h);
  const PatchGrid grid{g.out_channels, ho, ho, h, h, g.kernel, g.stride, g.padding};
  const Index n = x.rows();
  const Index p = h * h;
  const Index big = ho * ho;

  auto xs = std::make_shared<Matrix>();
  nchw_to_stacked(x.value(), g.in_channels, p, *xs);
  Matrix cols = (*xs) * weight.value();
  Matrix out = Matrix::Zero(n, g.out_channels * big);
  for (Index i = 0; i < n; ++i) {
    col2im(grid, cols.row(i * p).data(), out.row(i).data());
    for (Index c = 0; c < g.out_channels; ++c) {
      out.row(i).segment(c * big, big).array() += bias.value()(0, c);
    }
  }

  return make_op(
      "conv_transpose2d", std::move(out), {n, g.out_channels, ho, ho}, {x, weight, bias},
      [grid, xs, g, p, big, kk](Node& self) {
        Node& xn = *self.inputs[0];
        Node& wn = *self.inputs[1];
        Node& bn = *self.inputs[2];
        const Index n = self.grad.rows();
        Matrix gcols = Matrix::Zero(n * p, kk);
        for (Index i = 0; i < n; ++i) im2col(grid, self.grad.row(i).data(), gcols.row(i * p).data());
        if (wn.requires_grad) accumulate(wn, xs->transpose() * gcols);
        if (bn.requires_grad) {
          Matrix gb = Matrix::Zero(1, g.out_channels);
          for (Index c = 0; c < g.out_channels; ++c) {
            gb(0, c) = self.grad.middleCols(c * big, big).sum();
          }
          accumulate(bn, gb);
        }
        if (xn.requires_grad) {
          Matrix gxs = gcols * wn.value.transpose();
          Matrix gx;
          stacked_to_nchw(gxs, g.in_channels, p, gx);
          accumulate(xn, gx);
        }
      });
}

}  // namespace clear
