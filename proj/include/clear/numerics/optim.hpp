#pragma once

#include <cstdint>
#include <vector>

#include "clear/numerics/tensor.hpp"

namespace clear {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Per-parameter moment buffers for Adam.
struct OptimState {
  AdamOptions options;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::uint64_t step = 0;

  /// Zero moments shaped like `params`.
  static OptimState for_parameters(const std::vector<Tensor>& params, AdamOptions options = {});
};

/// One bias-corrected Adam update using each parameter's accumulated gradient
/// (a parameter without a gradient is treated as having a zero gradient).
void adam_step(const std::vector<Tensor>& params, OptimState& state);

/// Same update with explicitly supplied gradients.
void adam_step(const std::vector<Tensor>& params, const std::vector<Matrix>& grads,
               OptimState& state);

/// Convenience owner pairing a parameter list with its state.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamOptions options = {});

  void zero_grad();
  void step() { adam_step(params_, state_); }
  void reset();

  const OptimState& state() const { return state_; }
  const std::vector<Tensor>& params() const { return params_; }

 private:
  std::vector<Tensor> params_;
  OptimState state_;
};

std::vector<Tensor> tensors_of(const ParameterList& named);

}  // namespace clear
