#pragma once

#include <span>
#include <vector>

#include "clear/losses/config.hpp"
#include "clear/model/networks.hpp"

namespace clear {

/// The pieces of one latent group a similarity metric may look at. Cosine and
/// L2 read the sampled `z`; Jeffrey and Mahalanobis read (`mu`, `logvar`).
struct LatentView {
  Tensor z;
  Tensor mu;
  Tensor logvar;

  Index size() const { return z.defined() ? z.rows() : mu.rows(); }
};

LatentView content_view(const ForwardPass& fp);
LatentView style_view(const ForwardPass& fp);

/// Pixelwise Bernoulli cross-entropy summed over pixels, averaged over the batch.
/// x_hat is clamped to [1e-7, 1 - 1e-7] before the logs.
Tensor recon_loss(const Tensor& x, const Tensor& x_hat);
inline constexpr double kReconClamp = 1e-7;

/// KL(N(mu, diag exp(logvar)) || N(0, I)) summed over dimensions, averaged over the batch.
Tensor kl_diag_gaussian(const Tensor& mu, const Tensor& logvar);

/// Similarity of rows i and j ("larger = more similar" for every metric).
double pairwise_similarity(const LatentView& v, Index i, Index j, Metric metric);
/// n x n matrix of pairwise similarities, differentiable in the view's tensors.
Tensor similarity_matrix(const LatentView& v, Metric metric);

/// Negated pairwise divergence between diagonal Gaussians: symmetric KL when
/// `jeffrey`, else the symmetrized squared Mahalanobis distance.
Tensor neg_gaussian_divergence(const Tensor& mu, const Tensor& logvar, bool jeffrey);

enum class Contrast {
  snn,  // numerator: same-label pairs
  ps,   // numerator: different-label pairs
};

/// Mean over anchors of -log(numerator / (pos + neg)) with exp(sim / tau) pair weights.
/// Anchors with an empty numerator set are left out of the mean.
Tensor contrastive_loss(const Tensor& sim, std::span<const int> labels, double tau, Contrast mode);

Tensor snn_loss(const LatentView& v, std::span<const int> labels, double tau, Metric metric);
Tensor ps_snn_loss(const LatentView& v, std::span<const int> labels, double tau, Metric metric);

/// Within-batch class means of the row-normalized codes (anchor included).
struct ClassEmbeddings {
  Matrix means;             // one row per class present in the batch
  std::vector<int> labels;  // class id of each row
  std::vector<int> counts;
};
ClassEmbeddings class_embeddings(const Matrix& z, std::span<const int> labels);

/// InfoNCE with h(k, z) = exp(<e_k, z_hat> / tau) over the classes present in the batch.
double infonce_reference(const Matrix& z, std::span<const int> labels, double tau);
/// Pair-switched twin: the numerator sums over the other classes.
double ps_infonce_reference(const Matrix& z, std::span<const int> labels, double tau);

struct LossBreakdown {
  double recon = 0, kl_c = 0, kl_s = 0, snn_c = 0, ps_or_mi_s = 0, total = 0;

  double recompute_total(const ClearConfig& cfg) const {
    return recon + cfg.beta * (kl_c + kl_s) + cfg.alpha1 * snn_c + cfg.alpha2 * ps_or_mi_s;
  }
};

struct Objective {
  Tensor total;
  Tensor style_term;
  LossBreakdown parts;
};

/// recon + beta (KL_c + KL_s) + alpha1 SNN(content) + alpha2 style term.
/// The style term is PS-SNN for the ps variant, zero for none, and the
/// supplied `style_estimate` (an MI estimate) for tc, l1out and club-s.
Objective clear_objective(const Tensor& x, const ForwardPass& fp, std::span<const int> labels,
                          const ClearConfig& cfg, const Tensor& style_estimate = {});

}  // namespace clear
