#pragma once

#include <cstdint>
#include <vector>

#include "clear/numerics/types.hpp"

namespace clear {

/// Counter-based generator: the n-th draw is a pure function of (seed, stream, n),
/// so sequences are identical across platforms and compilers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 bits of mantissa.
  double uniform();
  /// Standard normal via Box-Muller; consumes two 64-bit draws.
  double normal();
  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t uniform_int(std::uint64_t n);

  /// Independent child stream; does not advance this generator.
  Rng split(std::uint64_t stream) const;

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

/// i.i.d. N(0, 1) matrix of the given size.
Matrix seeded_normal(Rng& rng, Index rows, Index cols);

}  // namespace clear
