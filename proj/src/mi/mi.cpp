#include "clear/mi/mi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>

#include "clear/errors.hpp"
#include "clear/numerics/special.hpp"
#include "json.hpp"

namespace clear {

using detail::accumulate;
using detail::Node;

std::string to_string(MiMethod m) {
  switch (m) {
    case MiMethod::knn: return "knn";
    case MiMethod::l1out: return "l1out";
    case MiMethod::club_s: return "club_s";
    case MiMethod::tc: return "tc";
  }
  return "?";
}

MiEstimate knn_mi(const Matrix& z, std::span<const int> labels, int k) {
  const Index n_all = z.rows();
  CLEAR_REQUIRE(static_cast<Index>(labels.size()) == n_all, "knn_mi: one label per point");
  CLEAR_REQUIRE(k >= 1, "knn_mi: k must be positive");
  CLEAR_REQUIRE(n_all >= 3 * k, "knn_mi: need at least 3k points");

  std::map<int, Index> class_size;
  for (int y : labels) ++class_size[y];
  CLEAR_REQUIRE(class_size.size() >= 2, "knn_mi: need at least two classes");

  MiEstimate est;
  est.method = MiMethod::knn;
  est.k = k;

  std::vector<Index> used;
  for (Index i = 0; i < n_all; ++i) {
    if (class_size[labels[static_cast<std::size_t>(i)]] >= 2) used.push_back(i);
  }
  const Index n = static_cast<Index>(used.size());
  CLEAR_REQUIRE(n >= 2, "knn_mi: every label occurs only once");
  if (n < n_all) est.warnings.push_back("knn_mi: skipped " + std::to_string(n_all - n) + " points with a unique label");

  // kept points grouped by class, column-major so each coordinate is one SIMD-friendly array
  std::stable_sort(used.begin(), used.end(), [&](Index a, Index b) {
    return labels[static_cast<std::size_t>(a)] < labels[static_cast<std::size_t>(b)];
  });
  const Index dim = z.cols();
  Eigen::MatrixXd pts(n, dim);
  std::vector<int> ys(static_cast<std::size_t>(n));
  for (Index a = 0; a < n; ++a) {
    const Index i = used[static_cast<std::size_t>(a)];
    pts.row(a) = z.row(i);
    ys[static_cast<std::size_t>(a)] = labels[static_cast<std::size_t>(i)];
  }

  std::map<int, int> reduced;
  double sum_label = 0, sum_k = 0, sum_m = 0;
  Eigen::ArrayXd dist(n);
  std::vector<double> same;
  Index seg_begin = 0;
  for (Index a = 0; a < n; ++a) {
    const int yi = ys[static_cast<std::size_t>(a)];
    if (a > 0 && yi != ys[static_cast<std::size_t>(a - 1)]) seg_begin = a;
    const Index ny = class_size[yi];
    const int ki = static_cast<int>(std::min<Index>(k, ny - 1));
    if (ki < k) reduced[yi] = ki;
    dist = (pts.col(0).array() - pts(a, 0)).abs();
    for (Index t = 1; t < dim; ++t) dist = dist.max((pts.col(t).array() - pts(a, t)).abs());
    // ki+1 smallest in the class segment; the point itself is one of them at distance 0
    same.assign(static_cast<std::size_t>(ki) + 1, std::numeric_limits<double>::infinity());
    for (Index b = seg_begin; b < seg_begin + ny; ++b) {
      double d = dist(b);
      if (d >= same.back()) continue;
      std::size_t pos = same.size() - 1;
      while (pos > 0 && same[pos - 1] > d) {
        same[pos] = same[pos - 1];
        --pos;
      }
      same[pos] = d;
    }
    const double radius = same.back();
    const Index m = (dist <= radius).count() - 1;
    sum_label += digamma(static_cast<double>(ny));
    sum_k += digamma(static_cast<double>(ki));
    sum_m += digamma(static_cast<double>(m));
  }
  for (const auto& [y, kk] : reduced) {
    est.warnings.push_back("knn_mi: class " + std::to_string(y) + " too small, using k=" + std::to_string(kk));
  }
  const double dn = static_cast<double>(n);
  est.raw = digamma(dn) - sum_label / dn + sum_k / dn - sum_m / dn;
  est.value = std::max(0.0, est.raw);
  est.n = n;
  return est;
}

std::vector<double> per_dimension_mi(const Matrix& z, std::span<const int> labels, int k) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(z.cols()));
  for (Index d = 0; d < z.cols(); ++d) out.push_back(knn_mi(z.col(d), labels, k).value);
  return out;
}

double mig(const Matrix& z, std::span<const int> labels, int k) {
  CLEAR_REQUIRE(z.cols() >= 2, "mig: need at least two latent dimensions");
  const double h = label_entropy(labels);
  CLEAR_REQUIRE(h > 0, "mig: label entropy is zero");
  std::vector<double> mi = per_dimension_mi(z, labels, k);
  std::partial_sort(mi.begin(), mi.begin() + 2, mi.end(), std::greater<>());
  return (mi[0] - mi[1]) / h;
}

namespace {

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double GmigReport::mean_c() const { return mean_of(mi_c); }
double GmigReport::mean_s() const { return mean_of(mi_s); }

std::string GmigReport::to_json() const {
  nlohmann::json j;
  j["gmig"] = gmig;
  j["h_y"] = h_y;
  j["mi_c"] = mi_c;
  j["mi_s"] = mi_s;
  j["method"] = method;
  j["latent"] = latent;
  j["k"] = k;
  j["n"] = n;
  return j.dump(2);
}

GmigReport GmigReport::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  for (const char* key : {"gmig", "h_y", "mi_c", "mi_s", "method", "latent", "k", "n"}) {
    CLEAR_REQUIRE(j.contains(key), std::string("gmig report: missing key '") + key + "'");
  }
  GmigReport r;
  r.gmig = j["gmig"];
  r.h_y = j["h_y"];
  r.mi_c = j["mi_c"].get<std::vector<double>>();
  r.mi_s = j["mi_s"].get<std::vector<double>>();
  r.method = j["method"];
  r.latent = j["latent"];
  r.k = j["k"];
  r.n = j["n"];
  return r;
}

GmigReport gmig(const Matrix& z_c, const Matrix& z_s, std::span<const int> labels, int k) {
  CLEAR_REQUIRE(z_c.cols() >= 1 && z_s.cols() >= 1, "gmig: both latent groups must be non-empty");
  CLEAR_REQUIRE(z_c.rows() == z_s.rows(), "gmig: groups must have the same number of rows");
  GmigReport r;
  r.h_y = label_entropy(labels);
  CLEAR_REQUIRE(r.h_y > 0, "gmig: undefined for a single-class label set (H(y) = 0)");
  r.mi_c = per_dimension_mi(z_c, labels, k);
  r.mi_s = per_dimension_mi(z_s, labels, k);
  r.k = k;
  r.n = z_c.rows();
  r.gmig = (r.mean_c() - r.mean_s()) / r.h_y;
  return r;
}

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)

}  // namespace

Tensor gaussian_loglik_matrix(const Tensor& z_s, const Tensor& mu, const Tensor& logvar) {
  CLEAR_REQUIRE(z_s.rows() == mu.rows() && z_s.cols() == mu.cols() && mu.rows() == logvar.rows() &&
                    mu.cols() == logvar.cols(),
                "gaussian_loglik_matrix: shapes differ");
  const Index n = z_s.rows();
  const Matrix& z = z_s.value();
  const Matrix& m = mu.value();
  const Matrix& lv = logvar.value();
  const Matrix prec = (-lv.array()).exp().matrix();
  const Eigen::VectorXd lv_sum = lv.rowwise().sum();
  Matrix ll(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const double quad = ((z.row(i) - m.row(j)).array().square() * prec.row(j).array()).sum();
      ll(i, j) = -0.5 * (quad + lv_sum(j) + kLog2Pi * static_cast<double>(z.cols()));
    }
  }
  return make_op("gaussian_loglik_matrix", std::move(ll), {}, {z_s, mu, logvar},
                 [z, m, prec](Node& self) {
                   const Index n = z.rows();
                   Matrix gz = Matrix::Zero(n, z.cols()), gm = Matrix::Zero(n, z.cols()),
                          gl = Matrix::Zero(n, z.cols());
                   for (Index i = 0; i < n; ++i) {
                     for (Index j = 0; j < n; ++j) {
                       const double g = self.grad(i, j);
                       if (g == 0.0) continue;
                       const RowVector scaled = (z.row(i) - m.row(j)).cwiseProduct(prec.row(j));
                       gz.row(i) -= g * scaled;
                       gm.row(j) += g * scaled;
                       gl.row(j).array() += 0.5 * g * (scaled.array() * (z.row(i) - m.row(j)).array() - 1.0);
                     }
                   }
                   accumulate(*self.inputs[0], gz);
                   accumulate(*self.inputs[1], gm);
                   accumulate(*self.inputs[2], gl);
                 });
}

Tensor gaussian_loglik_rows(const Tensor& z, const Tensor& mu, const Tensor& logvar) {
  const Tensor quad = mul(square(z - mu), exp(neg(logvar)));
  return scale(add_scalar(sum_rows(quad + logvar), kLog2Pi * static_cast<double>(z.cols())), -0.5);
}

Tensor aux_log_likelihood(const Tensor& z_s, const Tensor& z_c, const AuxGaussianNet& aux) {
  const auto [mu, lv] = aux(z_c);
  return mean(gaussian_loglik_rows(z_s, mu, lv));
}

Tensor l1out_ub_loss(const Tensor& z_s, const Tensor& z_c, const AuxGaussianNet& aux) {
  const Index n = z_s.rows();
  CLEAR_REQUIRE(n >= 2, "l1out_ub: need at least two samples");
  CLEAR_REQUIRE(z_c.rows() == n, "l1out_ub: z_s and z_c row counts differ");
  const auto [mu, lv] = aux(z_c);
  const Tensor ll = gaussian_loglik_matrix(z_s, mu, lv);
  // mean_i [ LL_ii - logsumexp_{j != i} LL_ij + log(n - 1) ]
  const Matrix& v = ll.value();
  Matrix w = Matrix::Zero(n, n);
  double total = 0;
  for (Index i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j) {
      if (j != i) mx = std::max(mx, v(i, j));
    }
    double s = 0;
    for (Index j = 0; j < n; ++j) {
      if (j != i) s += std::exp(v(i, j) - mx);
    }
    const double lse = mx + std::log(s);
    total += v(i, i) - lse + std::log(static_cast<double>(n - 1));
    w(i, i) = 1.0;
    for (Index j = 0; j < n; ++j) {
      if (j != i) w(i, j) = -std::exp(v(i, j) - lse);
    }
  }
  const double dn = static_cast<double>(n);
  w /= dn;
  return make_op("l1out_ub", Matrix::Constant(1, 1, total / dn), {}, {ll},
                 [w = std::move(w)](Node& self) { accumulate(*self.inputs[0], self.grad(0, 0) * w); });
}

MiEstimate l1out_ub(const Matrix& z_s, const Matrix& z_c, const AuxGaussianNet& aux) {
  MiEstimate e;
  e.method = MiMethod::l1out;
  e.n = z_s.rows();
  e.raw = e.value = l1out_ub_loss(Tensor::constant(z_s), Tensor::constant(z_c), aux).item();
  return e;
}

Tensor club_s_loss(const Tensor& z_s, const Tensor& z_c, const AuxGaussianNet& aux, Rng& rng) {
  const Index n = z_s.rows();
  CLEAR_REQUIRE(n >= 1 && z_c.rows() == n, "club_s: z_s and z_c row counts differ");
  std::vector<Index> k(static_cast<std::size_t>(n));
  for (auto& v : k) v = static_cast<Index>(rng.uniform_int(static_cast<std::uint64_t>(n)));
  const auto [mu, lv] = aux(z_c);
  const Tensor positive = gaussian_loglik_rows(z_s, mu, lv);
  const Tensor negative = gaussian_loglik_rows(gather_rows(z_s, k), mu, lv);
  return mean(positive - negative);
}

MiEstimate club_s(const Matrix& z_s, const Matrix& z_c, const AuxGaussianNet& aux, Rng& rng) {
  MiEstimate e;
  e.method = MiMethod::club_s;
  e.n = z_s.rows();
  e.raw = e.value = club_s_loss(Tensor::constant(z_s), Tensor::constant(z_c), aux, rng).item();
  return e;
}

Tensor tc_estimate_loss(const Tensor& z_c, const Tensor& z_s, const TcDiscriminator& disc) {
  return mean(relu(disc.logits(z_c, z_s)));
}

MiEstimate tc_estimate(const Matrix& z_c, const Matrix& z_s, const TcDiscriminator& disc) {
  disc.probabilities(Tensor::constant(z_c), Tensor::constant(z_s));  // range check
  MiEstimate e;
  e.method = MiMethod::tc;
  e.n = z_c.rows();
  e.raw = e.value = tc_estimate_loss(Tensor::constant(z_c), Tensor::constant(z_s), disc).item();
  return e;
}

MiEstimate tc_estimate_from_probabilities(const Matrix& d) {
  if ((d.array() <= 0.0).any() || (d.array() >= 1.0).any()) {
    throw NumericFault("tc_estimate", "discriminator output outside (0, 1)");
  }
  MiEstimate e;
  e.method = MiMethod::tc;
  e.n = d.rows();
  e.raw = e.value = (d.array() / (1.0 - d.array())).log().max(0.0).mean();
  return e;
}

namespace {

std::vector<Index> shifted_rows(Index n) {
  CLEAR_REQUIRE(n >= 2, "shuffle_decouple: need at least two rows");
  std::vector<Index> idx(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = (i + 1) % n;
  return idx;
}

}  // namespace

Tensor shuffle_decouple(const Tensor& z_c) { return gather_rows(z_c, shifted_rows(z_c.rows())); }

Matrix shuffle_decouple(const Matrix& z_c) {
  const auto idx = shifted_rows(z_c.rows());
  Matrix out(z_c.rows(), z_c.cols());
  for (Index i = 0; i < z_c.rows(); ++i) out.row(i) = z_c.row(idx[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace clear
