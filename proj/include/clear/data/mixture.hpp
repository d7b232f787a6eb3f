#pragma once

#include <cstdint>
#include <vector>

#include "clear/numerics/types.hpp"

namespace clear {

/// Equal-weight isotropic Gaussian mixture with a shared standard deviation.
struct GaussianMixtureSpec {
  std::vector<Vector> means = default_means();
  double sigma = 1.0;
  Index n = 1500;
  std::uint64_t seed = 0;

  /// (-1,-1,-1), (2,2,2), (5,5,5).
  static std::vector<Vector> default_means();
  void validate() const;
};

struct MixtureSample {
  std::vector<int> labels;
  Matrix points;  // n x dim
};

MixtureSample sample_gaussian_mixture(const GaussianMixtureSpec& spec);

}  // namespace clear
