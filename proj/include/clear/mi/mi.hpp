#pragma once

#include <span>
#include <string>
#include <vector>

#include "clear/model/networks.hpp"

namespace clear {

enum class MiMethod { knn, l1out, club_s, tc };
std::string to_string(MiMethod m);

struct MiEstimate {
  double value = 0;  // nats; clipped at 0 for knn
  double raw = 0;    // before clipping
  MiMethod method = MiMethod::knn;
  Index n = 0;
  int k = 0;  // knn only
  std::vector<std::string> warnings;
};

inline constexpr int kDefaultNeighbors = 3;

/// Nearest-neighbour estimate of I(y; z) for discrete y and continuous z
/// (Chebyshev distance). Points whose label occurs once are skipped; classes
/// with fewer than k + 1 members use a smaller k for their points.
MiEstimate knn_mi(const Matrix& z, std::span<const int> labels, int k = kDefaultNeighbors);

/// Per-column knn_mi.
std::vector<double> per_dimension_mi(const Matrix& z, std::span<const int> labels, int k = kDefaultNeighbors);

/// Gap between the two most label-informative dimensions, normalized by H(y).
double mig(const Matrix& z, std::span<const int> labels, int k = kDefaultNeighbors);

struct GmigReport {
  double gmig = 0;
  double h_y = 0;
  std::vector<double> mi_c;
  std::vector<double> mi_s;
  std::string method = "knn";
  std::string latent = "mu";
  int k = kDefaultNeighbors;
  Index n = 0;

  double mean_c() const;
  double mean_s() const;
  /// {"gmig", "h_y", "mi_c", "mi_s", "method", "latent", "k", "n"}.
  std::string to_json() const;
  /// Inverse of to_json; throws ContractViolation on a missing key.
  static GmigReport from_json(const std::string& text);
};

/// (mean_j I(z_c_j; y) - mean_j I(z_s_j; y)) / H(y).
GmigReport gmig(const Matrix& z_c, const Matrix& z_s, std::span<const int> labels, int k = kDefaultNeighbors);

/// LL(i, j) = log q(z_s_i | condition j) for a diagonal Gaussian with rows (mu_j, logvar_j).
Tensor gaussian_loglik_matrix(const Tensor& z_s, const Tensor& mu, const Tensor& logvar);
/// Row-wise log N(z_i; mu_i, diag exp(logvar_i)), n x 1.
Tensor gaussian_loglik_rows(const Tensor& z, const Tensor& mu, const Tensor& logvar);

/// Mean log q(z_s_i | z_c_i); the auxiliary net maximizes this.
Tensor aux_log_likelihood(const Tensor& z_s, const Tensor& z_c, const AuxGaussianNet& aux);

/// Leave-one-out upper bound, differentiable in z_s, z_c and the aux weights.
Tensor l1out_ub_loss(const Tensor& z_s, const Tensor& z_c, const AuxGaussianNet& aux);
MiEstimate l1out_ub(const Matrix& z_s, const Matrix& z_c, const AuxGaussianNet& aux);

/// Sampled CLUB: mean of log q(z_s_i | z_c_i) - log q(z_s_k | z_c_i) with k uniform on the batch.
Tensor club_s_loss(const Tensor& z_s, const Tensor& z_c, const AuxGaussianNet& aux, Rng& rng);
MiEstimate club_s(const Matrix& z_s, const Matrix& z_c, const AuxGaussianNet& aux, Rng& rng);

/// Mean ReLU of the discriminator logit (log density ratio).
Tensor tc_estimate_loss(const Tensor& z_c, const Tensor& z_s, const TcDiscriminator& disc);
MiEstimate tc_estimate(const Matrix& z_c, const Matrix& z_s, const TcDiscriminator& disc);
/// Same statistic from probabilities D in (0, 1).
MiEstimate tc_estimate_from_probabilities(const Matrix& d);

/// Row i of the result is row (i + 1) mod n of the input.
Tensor shuffle_decouple(const Tensor& z_c);
Matrix shuffle_decouple(const Matrix& z_c);

}  // namespace clear
