#include "clear/losses/config.hpp"

#include <algorithm>
#include <cctype>

#include "clear/errors.hpp"

namespace clear {

namespace {

std::string canonical(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '-' || ch == '_') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  return out;
}

}  // namespace

std::string to_string(Metric m) {
  switch (m) {
    case Metric::cosine: return "cosine";
    case Metric::l2: return "l2";
    case Metric::jeffrey: return "jeffrey";
    case Metric::mahalanobis: return "mahalanobis";
  }
  return "?";
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::ps: return "ps";
    case Variant::tc: return "tc";
    case Variant::l1out: return "l1out";
    case Variant::club_s: return "club-s";
    case Variant::none: return "none";
  }
  return "?";
}

Metric parse_metric(const std::string& s) {
  const std::string c = canonical(s);
  for (Metric m : {Metric::cosine, Metric::l2, Metric::jeffrey, Metric::mahalanobis}) {
    if (canonical(to_string(m)) == c) return m;
  }
  throw ContractViolation("unknown metric '" + s + "'");
}

Variant parse_variant(const std::string& s) {
  const std::string c = canonical(s);
  if (c == "l1outub") return Variant::l1out;
  for (Variant v : {Variant::ps, Variant::tc, Variant::l1out, Variant::club_s, Variant::none}) {
    if (canonical(to_string(v)) == c) return v;
  }
  throw ContractViolation("unknown variant '" + s + "'");
}

ClearConfig ClearConfig::defaults_for(Metric m) {
  ClearConfig c;
  c.metric = m;
  if (m == Metric::jeffrey || m == Metric::mahalanobis) {
    c.tau = 10.0;
    c.alpha1 = c.alpha2 = 10.0;
  }
  return c;
}

void ClearConfig::validate() const {
  CLEAR_REQUIRE(tau > 0.0, "config: tau must be positive");
  CLEAR_REQUIRE(beta > 0.0, "config: beta must be positive");
  CLEAR_REQUIRE(alpha1 >= 0.0 && alpha2 >= 0.0, "config: alpha weights must be non-negative");
  CLEAR_REQUIRE(d_c >= 1 && d_s >= 1, "config: both latent groups need at least one dimension");
}

}  // namespace clear
