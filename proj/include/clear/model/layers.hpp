#pragma once

#include <string>

#include "clear/numerics/ops.hpp"
#include "clear/numerics/optim.hpp"
#include "clear/numerics/rng.hpp"

namespace clear {

enum class Init { he, zero };

/// y = x W + b with W stored in_features x out_features.
struct Linear {
  Tensor weight;
  Tensor bias;

  Linear() = default;
  Linear(Index in, Index out, Rng& rng, Init init = Init::he);

  Tensor operator()(const Tensor& x) const { return add_row(matmul(x, weight), bias); }
  void collect(const std::string& prefix, ParameterList& out) const;
};

struct Conv {
  ConvGeometry geometry;
  Tensor weight;
  Tensor bias;

  Conv() = default;
  Conv(const ConvGeometry& g, Rng& rng);

  Tensor operator()(const Tensor& x) const { return conv2d(x, weight, bias, geometry); }
  void collect(const std::string& prefix, ParameterList& out) const;
};

struct ConvTranspose {
  ConvGeometry geometry;
  Tensor weight;
  Tensor bias;

  ConvTranspose() = default;
  ConvTranspose(const ConvGeometry& g, Rng& rng);

  Tensor operator()(const Tensor& x) const { return conv_transpose2d(x, weight, bias, geometry); }
  void collect(const std::string& prefix, ParameterList& out) const;
};

/// Two affine layers with a ReLU in between.
struct Mlp2 {
  Linear hidden;
  Linear out;

  Mlp2() = default;
  Mlp2(Index in, Index width, Index out_features, Rng& rng, Init last = Init::he);

  Tensor operator()(const Tensor& x) const { return out(relu(hidden(x))); }
  void collect(const std::string& prefix, ParameterList& out) const;
};


}  // namespace clear
