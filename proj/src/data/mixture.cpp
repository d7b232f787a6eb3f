#include "clear/data/mixture.hpp"

#include "clear/errors.hpp"
#include "clear/numerics/rng.hpp"

namespace clear {

std::vector<Vector> GaussianMixtureSpec::default_means() {
  return {Vector::Constant(3, -1.0), Vector::Constant(3, 2.0), Vector::Constant(3, 5.0)};
}

void GaussianMixtureSpec::validate() const {
  CLEAR_REQUIRE(sigma > 0.0, "gaussian mixture: sigma must be positive");
  CLEAR_REQUIRE(!means.empty(), "gaussian mixture: need at least one component");
  CLEAR_REQUIRE(n >= 1, "gaussian mixture: need at least one sample");
  for (const auto& m : means) {
    CLEAR_REQUIRE(m.size() == means.front().size(), "gaussian mixture: means must share a dimension");
  }
}

MixtureSample sample_gaussian_mixture(const GaussianMixtureSpec& spec) {
  spec.validate();
  const Index dim = spec.means.front().size();
  Rng rng(spec.seed);
  MixtureSample out;
  out.labels.reserve(static_cast<std::size_t>(spec.n));
  out.points.resize(spec.n, dim);
  for (Index i = 0; i < spec.n; ++i) {
    const int y = static_cast<int>(rng.uniform_int(spec.means.size()));
    out.labels.push_back(y);
    for (Index d = 0; d < dim; ++d) out.points(i, d) = spec.means[static_cast<std::size_t>(y)](d) + spec.sigma * rng.normal();
  }
  return out;
}

}  // namespace clear
