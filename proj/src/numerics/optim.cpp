#include "clear/numerics/optim.hpp"

#include <cmath>

#include "clear/errors.hpp"

namespace clear {

OptimState OptimState::for_parameters(const std::vector<Tensor>& params, AdamOptions options) {
  OptimState s;
  s.options = options;
  for (const Tensor& p : params) {
    s.first_moment.push_back(Matrix::Zero(p.rows(), p.cols()));
    s.second_moment.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
  return s;
}

void adam_step(const std::vector<Tensor>& params, const std::vector<Matrix>& grads,
               OptimState& state) {
  CLEAR_REQUIRE(params.size() == grads.size() && params.size() == state.first_moment.size(),
                "adam_step: parameter, gradient and state counts differ");
  const AdamOptions& o = state.options;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor p = params[i];
    const Matrix& g = grads[i];
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    if (g.rows() != p.rows() || g.cols() != p.cols() || m.rows() != p.rows() ||
        m.cols() != p.cols()) {
      throw ContractViolation("adam_step: shape mismatch for parameter " + std::to_string(i));
    }
    m = o.beta1 * m + (1.0 - o.beta1) * g;
    v = o.beta2 * v + (1.0 - o.beta2) * g.cwiseProduct(g);
    p.mutable_value().array() -=
        o.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + o.eps);
  }
}

void adam_step(const std::vector<Tensor>& params, OptimState& state) {
  std::vector<Matrix> grads;
  grads.reserve(params.size());
  for (const Tensor& p : params) grads.push_back(p.grad());
  adam_step(params, grads, state);
}

Adam::Adam(std::vector<Tensor> params, AdamOptions options)
    : params_(std::move(params)), state_(OptimState::for_parameters(params_, options)) {}

void Adam::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

void Adam::reset() { state_ = OptimState::for_parameters(params_, state_.options); }

std::vector<Tensor> tensors_of(const ParameterList& named) {
  std::vector<Tensor> out;
  out.reserve(named.size());
  for (const auto& np : named) out.push_back(np.tensor);
  return out;
}

}  // namespace clear
