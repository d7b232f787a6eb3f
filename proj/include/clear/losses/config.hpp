#pragma once

#include <string>

#include "clear/numerics/types.hpp"

namespace clear {

enum class Metric { cosine, l2, jeffrey, mahalanobis };
/// How the style partition is pushed away from the label.
enum class Variant { ps, tc, l1out, club_s, none };

std::string to_string(Metric m);
std::string to_string(Variant v);
/// Accepts the names produced by to_string (case-insensitive, '-' and '_' ignored).
Metric parse_metric(const std::string& s);
Variant parse_variant(const std::string& s);

inline bool uses_aux_gaussian(Variant v) { return v == Variant::l1out || v == Variant::club_s; }

/// Weights of the composite objective and the latent split.
struct ClearConfig {
  double beta = 0.125;
  double alpha1 = 100.0;
  double alpha2 = 100.0;
  double tau = 0.3;
  Metric metric = Metric::cosine;
  Variant variant = Variant::ps;
  Index d_c = 8;
  Index d_s = 8;

  /// Per-metric defaults: cosine/L2 use tau 0.3 and alpha 100, the
  /// distribution metrics tau 10 and alpha 10.
  static ClearConfig defaults_for(Metric m);
  Index d_z() const { return d_c + d_s; }
  void validate() const;
};

}  // namespace clear
