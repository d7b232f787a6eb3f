#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace clear {

/// 64-bit FNV-1a, used for content hashes in manifests.
class Fnv1a {
 public:
  void feed(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= b[i];
      h_ *= 1099511628211ULL;
    }
  }
  void feed(std::string_view s) { feed(s.data(), s.size()); }

  std::uint64_t value() const { return h_; }
  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h_));
    return buf;
  }

 private:
  std::uint64_t h_ = 1469598103934665603ULL;
};

inline std::string fnv1a_hex(std::string_view s) {
  Fnv1a h;
  h.feed(s);
  return h.hex();
}

}  // namespace clear
