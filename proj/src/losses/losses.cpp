#include "clear/losses/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "clear/errors.hpp"

namespace clear {

using detail::accumulate;
using detail::Node;

LatentView content_view(const ForwardPass& fp) { return {fp.z.z_c, fp.code.mu_c, fp.code.logvar_c}; }
LatentView style_view(const ForwardPass& fp) { return {fp.z.z_s, fp.code.mu_s, fp.code.logvar_s}; }

Tensor recon_loss(const Tensor& x, const Tensor& x_hat) {
  CLEAR_REQUIRE(x.rows() == x_hat.rows() && x.cols() == x_hat.cols(), "recon_loss: shapes differ");
  const Matrix& t = x.value();
  const Matrix p = x_hat.value().cwiseMax(kReconClamp).cwiseMin(1.0 - kReconClamp);
  const double n = static_cast<double>(x.rows());
  const double value =
      -(t.array() * p.array().log() + (1.0 - t.array()) * (1.0 - p.array()).log()).sum() / n;
  return make_op("recon_loss", Matrix::Constant(1, 1, value), {}, {x_hat},
                 [t, p, n](Node& self) {
                   Node& xh = *self.inputs[0];
                   const double g = self.grad(0, 0) / n;
                   const auto inside = (xh.value.array() >= kReconClamp && xh.value.array() <= 1.0 - kReconClamp);
                   const Eigen::ArrayXXd d = ((1.0 - t.array()) / (1.0 - p.array()) - t.array() / p.array()) * g;
                   Matrix masked = inside.select(d, 0.0).matrix();
                   accumulate(xh, masked);
                 });
}

Tensor kl_diag_gaussian(const Tensor& mu, const Tensor& logvar) {
  CLEAR_REQUIRE(mu.rows() == logvar.rows() && mu.cols() == logvar.cols(), "kl_diag_gaussian: shapes differ");
  const Tensor terms = add_scalar(exp(logvar) + square(mu) - logvar, -1.0);
  return scale(sum(terms), 0.5 / static_cast<double>(mu.rows()));
}

namespace {

void require_view(const LatentView& v, Metric metric) {
  if (metric == Metric::cosine || metric == Metric::l2) {
    CLEAR_REQUIRE(v.z.defined(), "similarity: cosine and L2 need sampled codes");
  } else {
    CLEAR_REQUIRE(v.mu.defined() && v.logvar.defined(), "similarity: distribution metrics need mu and logvar");
  }
}

}  // namespace

double pairwise_similarity(const LatentView& v, Index i, Index j, Metric metric) {
  require_view(v, metric);
  switch (metric) {
    case Metric::cosine: {
      const RowVector a = v.z.value().row(i), b = v.z.value().row(j);
      CLEAR_REQUIRE(a.norm() > 0 && b.norm() > 0, "cosine similarity of a zero vector");
      return a.dot(b) / (a.norm() * b.norm());
    }
    case Metric::l2:
      return -(v.z.value().row(i) - v.z.value().row(j)).squaredNorm();
    case Metric::jeffrey:
    case Metric::mahalanobis: {
      const auto mi = v.mu.value().row(i).array(), mj = v.mu.value().row(j).array();
      const auto ai = v.logvar.value().row(i).array().exp(), aj = v.logvar.value().row(j).array().exp();
      double d = 0.5 * ((mi - mj).square() * (1.0 / ai + 1.0 / aj)).sum();
      if (metric == Metric::jeffrey) d += 0.5 * (ai / aj + aj / ai - 2.0).sum();
      return -d;
    }
  }
  throw ContractViolation("unknown metric");
}

Tensor neg_gaussian_divergence(const Tensor& mu, const Tensor& logvar, bool jeffrey) {
  CLEAR_REQUIRE(mu.rows() == logvar.rows() && mu.cols() == logvar.cols(),
                "neg_gaussian_divergence: shapes differ");
  const Index n = mu.rows();
  const Matrix& m = mu.value();
  const Matrix a = logvar.value().array().exp().matrix();
  const Matrix b = (-logvar.value().array()).exp().matrix();
  Matrix s(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const auto diff2 = (m.row(i) - m.row(j)).array().square();
      double d = 0.5 * (diff2 * (b.row(i) + b.row(j)).array()).sum();
      if (jeffrey) d += 0.5 * (a.row(i).array() * b.row(j).array() + a.row(j).array() * b.row(i).array() - 2.0).sum();
      s(i, j) = -d;
    }
  }
  return make_op(jeffrey ? "jeffrey_similarity" : "mahalanobis_similarity", std::move(s), {}, {mu, logvar},
                 [m, a, b, jeffrey](Node& self) {
                   const Index n = m.rows();
                   Matrix gm = Matrix::Zero(n, m.cols());
                   Matrix gl = Matrix::Zero(n, m.cols());
                   for (Index i = 0; i < n; ++i) {
                     for (Index j = 0; j < n; ++j) {
                       const double g = -self.grad(i, j);  // d loss / d divergence
                       if (g == 0.0) continue;
                       const RowVector diff = m.row(i) - m.row(j);
                       const RowVector wm = g * diff.cwiseProduct(b.row(i) + b.row(j));
                       gm.row(i) += wm;
                       gm.row(j) -= wm;
                       const auto d2 = diff.array().square();
                       gl.row(i).array() += g * (-0.5 * d2 * b.row(i).array());
                       gl.row(j).array() += g * (-0.5 * d2 * b.row(j).array());
                       if (jeffrey) {
                         const auto cross = 0.5 * (a.row(i).array() * b.row(j).array() -
                                                   a.row(j).array() * b.row(i).array());
                         gl.row(i).array() += g * cross;
                         gl.row(j).array() -= g * cross;
                       }
                     }
                   }
                   accumulate(*self.inputs[0], gm);
                   accumulate(*self.inputs[1], gl);
                 });
}

Tensor similarity_matrix(const LatentView& v, Metric metric) {
  require_view(v, metric);
  switch (metric) {
    case Metric::cosine: {
      const Tensor zn = row_normalize(v.z);
      return matmul_nt(zn, zn);
    }
    case Metric::l2: {
      // S = 2 Z Z^T - |z_i|^2 - |z_j|^2; dZ = 2 (G + G^T) Z - 2 diag(rowsum G + colsum G) Z
      const Matrix& z = v.z.value();
      const Eigen::VectorXd sq = z.rowwise().squaredNorm();
      Matrix out = 2.0 * z * z.transpose();
      out.colwise() -= sq;
      out.rowwise() -= sq.transpose();
      return make_op("l2_similarity", std::move(out), {}, {v.z}, [z](Node& self) {
        const Matrix& g = self.grad;
        const Matrix sym = g + g.transpose();
        const Eigen::VectorXd w = sym.rowwise().sum();
        accumulate(*self.inputs[0], 2.0 * (sym * z) - 2.0 * (z.array().colwise() * w.array()).matrix());
      });
    }
    case Metric::jeffrey:
      return neg_gaussian_divergence(v.mu, v.logvar, true);
    case Metric::mahalanobis:
      return neg_gaussian_divergence(v.mu, v.logvar, false);
  }
  throw ContractViolation("unknown metric");
}

namespace {

double log_sum_exp(const std::vector<double>& t) {
  const double m = *std::max_element(t.begin(), t.end());
  double s = 0;
  for (double v : t) s += std::exp(v - m);
  return m + std::log(s);
}

double softplus_scalar(double u) { return u > 0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u)); }

}  // namespace

Tensor contrastive_loss(const Tensor& sim, std::span<const int> labels, double tau, Contrast mode) {
  const Index n = sim.rows();
  CLEAR_REQUIRE(sim.cols() == n, "contrastive_loss: similarity matrix must be square");
  CLEAR_REQUIRE(static_cast<Index>(labels.size()) == n, "contrastive_loss: one label per row");
  CLEAR_REQUIRE(n >= 2, "contrastive_loss: batch size must be at least 2");
  CLEAR_REQUIRE(tau > 0, "contrastive_loss: tau must be positive");

  // Per anchor: l = softplus(LSE_B - LSE_A), A the numerator set, B the rest.
  // d l / d S_ij = (sigma(LSE_B - LSE_A) / tau) (softmax_B(j) [j in B] - softmax_A(j) [j in A]).
  // Work is phrased in terms of the anchor's own class ("own") and everything else ("other");
  // own is A for SNN and B for PS. The forward pass keeps per-row statistics only and the
  // backward pass rebuilds the gradient from them.
  std::map<int, Index> class_size;
  for (int y : labels) ++class_size[y];
  std::map<int, Eigen::ArrayXd> own_mask;
  for (const auto& [y, count] : class_size) {
    Eigen::ArrayXd m(n);
    for (Index j = 0; j < n; ++j) m(j) = labels[static_cast<std::size_t>(j)] == y ? 1.0 : 0.0;
    own_mask.emplace(y, std::move(m));
  }
  struct RowStats {
    double shift_own = 0, shift_other = 0, c_own = 0, c_other = 0;
  };
  std::vector<RowStats> stats(static_cast<std::size_t>(n));
  const bool own_is_a = mode == Contrast::snn;
  const Matrix& s = sim.value();
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  // shifted exponent of one row; the floor keeps exp out of the (very slow) subnormal
  // range and perturbs sums by < 1e-120 relative
  auto row_exp = [tau](const auto& srow, const Eigen::ArrayXd& own, Index i, double m_own, double m_other) {
    Eigen::ArrayXd e = (srow.transpose().array() / tau - m_other - own * (m_own - m_other)).max(-300.0).exp();
    e(i) = 0.0;
    return e;
  };
  double total = 0;
  Index anchors = 0;
  Eigen::ArrayXd t(n);
  for (Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    const Index n_own = class_size[y] - 1, n_other = n - class_size[y];
    if ((own_is_a ? n_own : n_other) == 0) continue;
    ++anchors;
    if ((own_is_a ? n_other : n_own) == 0) continue;  // numerator equals denominator: zero loss, zero gradient
    const Eigen::ArrayXd& own = own_mask.at(y);
    t = s.row(i).transpose().array() / tau;
    t(i) = kNegInf;
    const double m_own = (own > 0).select(t, kNegInf).maxCoeff();
    const double m_other = (own > 0).select(kNegInf, t).maxCoeff();
    const Eigen::ArrayXd e = row_exp(s.row(i), own, i, m_own, m_other);
    const double s_own = (e * own).sum(), s_other = e.sum() - s_own;
    const double lse_own = m_own + std::log(s_own), lse_other = m_other + std::log(s_other);
    const double u = own_is_a ? lse_other - lse_own : lse_own - lse_other;
    total += softplus_scalar(u);
    const double sig = 1.0 / (1.0 + std::exp(-u));
    stats[static_cast<std::size_t>(i)] = {m_own, m_other, (own_is_a ? -sig : sig) / (s_own * tau),
                                          (own_is_a ? sig : -sig) / (s_other * tau)};
  }
  if (anchors == 0) {
    throw ContractViolation(mode == Contrast::snn ? "snn_loss: no contrastable anchors"
                                                  : "ps_snn_loss: no negatives available");
  }
  const double inv_anchors = 1.0 / static_cast<double>(anchors);
  std::vector<int> lab(labels.begin(), labels.end());
  return make_op(mode == Contrast::snn ? "snn_loss" : "ps_snn_loss",
                 Matrix::Constant(1, 1, total * inv_anchors), {}, {sim},
                 [stats = std::move(stats), own_mask = std::move(own_mask), lab = std::move(lab), row_exp,
                  inv_anchors](Node& self) {
                   const Matrix& sv = self.inputs[0]->value;
                   const Index n = sv.rows();
                   Matrix grad = Matrix::Zero(n, n);
                   const double scale = self.grad(0, 0) * inv_anchors;
                   for (Index i = 0; i < n; ++i) {
                     const RowStats& r = stats[static_cast<std::size_t>(i)];
                     if (std::abs(r.c_own) < 1e-170 && std::abs(r.c_other) < 1e-170) continue;
                     const Eigen::ArrayXd& own = own_mask.at(lab[static_cast<std::size_t>(i)]);
                     const Eigen::ArrayXd e = row_exp(sv.row(i), own, i, r.shift_own, r.shift_other);
                     grad.row(i) = (scale * e * (r.c_other + own * (r.c_own - r.c_other))).transpose().matrix();
                   }
                   accumulate(*self.inputs[0], grad);
                 });
}

Tensor snn_loss(const LatentView& v, std::span<const int> labels, double tau, Metric metric) {
  return contrastive_loss(similarity_matrix(v, metric), labels, tau, Contrast::snn);
}

Tensor ps_snn_loss(const LatentView& v, std::span<const int> labels, double tau, Metric metric) {
  return contrastive_loss(similarity_matrix(v, metric), labels, tau, Contrast::ps);
}

ClassEmbeddings class_embeddings(const Matrix& z, std::span<const int> labels) {
  CLEAR_REQUIRE(static_cast<Index>(labels.size()) == z.rows(), "class_embeddings: one label per row");
  std::map<int, std::pair<RowVector, int>> acc;
  for (Index i = 0; i < z.rows(); ++i) {
    const double norm = z.row(i).norm();
    CLEAR_REQUIRE(norm > 0, "class_embeddings: zero code vector");
    auto [it, inserted] = acc.try_emplace(labels[static_cast<std::size_t>(i)], RowVector::Zero(z.cols()), 0);
    it->second.first += z.row(i) / norm;
    it->second.second += 1;
  }
  ClassEmbeddings out;
  out.means.resize(static_cast<Index>(acc.size()), z.cols());
  Index r = 0;
  for (const auto& [label, entry] : acc) {
    out.means.row(r++) = entry.first / static_cast<double>(entry.second);
    out.labels.push_back(label);
    out.counts.push_back(entry.second);
  }
  return out;
}

namespace {

double infonce_impl(const Matrix& z, std::span<const int> labels, double tau, bool switched) {
  CLEAR_REQUIRE(tau > 0, "infonce: tau must be positive");
  const ClassEmbeddings e = class_embeddings(z, labels);
  double total = 0;
  Index used = 0;
  for (Index i = 0; i < z.rows(); ++i) {
    const RowVector zh = z.row(i) / z.row(i).norm();
    std::vector<double> own, other;
    for (std::size_t k = 0; k < e.labels.size(); ++k) {
      const double t = e.means.row(static_cast<Index>(k)).dot(zh) / tau;
      (e.labels[k] == labels[static_cast<std::size_t>(i)] ? own : other).push_back(t);
    }
    if (other.empty()) {
      if (!switched) ++used;  // loss is -log 1
      continue;
    }
    const double lse_own = log_sum_exp(own), lse_other = log_sum_exp(other);
    total += switched ? softplus_scalar(lse_own - lse_other) : softplus_scalar(lse_other - lse_own);
    ++used;
  }
  CLEAR_REQUIRE(used > 0, "infonce: no usable anchors");
  return total / static_cast<double>(used);
}

}  // namespace

double infonce_reference(const Matrix& z, std::span<const int> labels, double tau) {
  return infonce_impl(z, labels, tau, false);
}

double ps_infonce_reference(const Matrix& z, std::span<const int> labels, double tau) {
  return infonce_impl(z, labels, tau, true);
}

Objective clear_objective(const Tensor& x, const ForwardPass& fp, std::span<const int> labels,
                          const ClearConfig& cfg, const Tensor& style_estimate) {
  cfg.validate();
  const Tensor recon = recon_loss(reshape(x, {x.rows(), x.cols()}), reshape(fp.x_hat, {fp.x_hat.rows(), fp.x_hat.cols()}));
  const Tensor kl_c = kl_diag_gaussian(fp.code.mu_c, fp.code.logvar_c);
  const Tensor kl_s = kl_diag_gaussian(fp.code.mu_s, fp.code.logvar_s);
  const Tensor snn = snn_loss(content_view(fp), labels, cfg.tau, cfg.metric);
  Tensor style;
  switch (cfg.variant) {
    case Variant::ps:
      style = ps_snn_loss(style_view(fp), labels, cfg.tau, cfg.metric);
      break;
    case Variant::none:
      style = Tensor::scalar(0.0);
      break;
    default:
      CLEAR_REQUIRE(style_estimate.defined() && style_estimate.numel() == 1,
                    "clear_objective: the " + to_string(cfg.variant) + " variant needs a scalar MI estimate");
      style = style_estimate;
  }
  Objective out;
  out.style_term = style;
  out.total = recon + scale(kl_c + kl_s, cfg.beta) + scale(snn, cfg.alpha1) + scale(style, cfg.alpha2);
  out.parts = {recon.item(), kl_c.item(), kl_s.item(), snn.item(), style.item(), out.total.item()};
  return out;
}

}  // namespace clear
