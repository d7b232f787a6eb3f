#include "clear/model/layers.hpp"

#include <cmath>

namespace clear {

namespace {

Tensor he_parameter(Index rows, Index cols, Index fan_in, Rng& rng) {
  const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
  return Tensor::parameter(seeded_normal(rng, rows, cols) * sd);
}

}  // namespace

Linear::Linear(Index in, Index out, Rng& rng, Init init)
    : weight(init == Init::zero ? Tensor::parameter(Matrix::Zero(in, out)) : he_parameter(in, out, in, rng)),
      bias(Tensor::parameter(Matrix::Zero(1, out))) {}

void Linear::collect(const std::string& prefix, ParameterList& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

Conv::Conv(const ConvGeometry& g, Rng& rng)
    : geometry(g),
      weight(he_parameter(g.out_channels, g.in_channels * g.kernel * g.kernel,
                          g.in_channels * g.kernel * g.kernel, rng)),
      bias(Tensor::parameter(Matrix::Zero(1, g.out_channels))) {}

void Conv::collect(const std::string& prefix, ParameterList& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

// Fan-in of a transposed convolution: each output pixel sums about
// C_in * k^2 / stride^2 contributions.
ConvTranspose::ConvTranspose(const ConvGeometry& g, Rng& rng)
    : geometry(g),
      weight(he_parameter(g.in_channels, g.out_channels * g.kernel * g.kernel,
                          std::max<Index>(1, g.in_channels * g.kernel * g.kernel / (g.stride * g.stride)), rng)),
      bias(Tensor::parameter(Matrix::Zero(1, g.out_channels))) {}

void ConvTranspose::collect(const std::string& prefix, ParameterList& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

Mlp2::Mlp2(Index in, Index width, Index out_features, Rng& rng, Init last)
    : hidden(in, width, rng), out(width, out_features, rng, last) {}

void Mlp2::collect(const std::string& prefix, ParameterList& params) const {
  hidden.collect(prefix + ".0", params);
  out.collect(prefix + ".1", params);
}

}  // namespace clear
