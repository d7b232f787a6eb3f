#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "clear/data/mixture.hpp"
#include "clear/errors.hpp"
#include "clear/mi/mi.hpp"
#include "clear/numerics/optim.hpp"
#include "clear/numerics/special.hpp"
#include "json.hpp"

namespace clear {
namespace {

std::vector<int> balanced_labels(Index n, int classes) {
  std::vector<int> y(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = static_cast<int>(i % classes);
  return y;
}

// Independent re-implementation: full sort of distances per point.
double slow_knn_mi(const Matrix& z, const std::vector<int>& y, int k) {
  const Index n = z.rows();
  double a = 0, b = 0, c = 0;
  for (Index i = 0; i < n; ++i) {
    std::vector<double> same, all;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      double d = 0;
      for (Index t = 0; t < z.cols(); ++t) d = std::max(d, std::abs(z(i, t) - z(j, t)));
      all.push_back(d);
      if (y[static_cast<std::size_t>(j)] == y[static_cast<std::size_t>(i)]) same.push_back(d);
    }
    std::sort(same.begin(), same.end());
    const double r = same[static_cast<std::size_t>(k - 1)];
    const auto m = std::count_if(all.begin(), all.end(), [r](double d) { return d <= r; });
    a += digamma(static_cast<double>(same.size() + 1));
    b += digamma(static_cast<double>(k));
    c += digamma(static_cast<double>(m));
  }
  const double dn = static_cast<double>(n);
  return std::max(0.0, digamma(dn) - a / dn + b / dn - c / dn);
}

// Tie-free data; value from an independent implementation of the same estimator.
TEST(KnnMi, GoldenValueFromReferenceImplementation) {
  const std::vector<int> y{2, 1, 2, 2, 1, 2, 2, 0, 0, 0, 0, 2, 2, 0, 1, 2, 0, 2, 0, 1, 2, 0, 1, 0};
  const std::vector<double> v{1.705414,  -0.130468, 1.570748,  2.295303,  -0.544215, 1.142384,
                              -0.301223, -1.289538, -1.841735, -0.235091, -1.267446, 1.871264,
                              1.756751,  -0.186931, -1.71676,  1.061307,  -0.048501, 1.713309,
                              -1.530136, 0.322247,  0.621481,  -0.808837, 1.860899,  -0.807535};
  Matrix z(24, 1);
  for (Index i = 0; i < 24; ++i) z(i, 0) = v[static_cast<std::size_t>(i)];
  EXPECT_NEAR(knn_mi(z, y, 3).value, 0.376008937179267, 1e-12);
}

TEST(KnnMi, IndependentNoiseIsNearZero) {
  Rng rng(1);
  const Matrix z = seeded_normal(rng, 1500, 3);
  const auto y = balanced_labels(1500, 3);
  const MiEstimate e = knn_mi(z, y);
  EXPECT_LT(std::abs(e.value), 0.05);
  EXPECT_GE(e.value, 0.0);
  EXPECT_EQ(e.n, 1500);
  EXPECT_EQ(e.k, 3);
}

TEST(KnnMi, TightClustersReachLogThree) {
  Rng rng(2);
  const auto y = balanced_labels(600, 3);
  Matrix z(600, 3);
  for (Index i = 0; i < 600; ++i) {
    for (Index d = 0; d < 3; ++d) z(i, d) = 3.0 * y[static_cast<std::size_t>(i)] + 1e-4 * rng.normal();
  }
  EXPECT_NEAR(knn_mi(z, y).value, std::log(3.0), 0.05);
}

TEST(KnnMi, DisjointSupportsReachLogTwo) {
  Rng rng(3);
  const auto y = balanced_labels(1000, 2);
  Matrix z(1000, 1);
  for (Index i = 0; i < 1000; ++i) z(i, 0) = y[static_cast<std::size_t>(i)] + 0.1 * rng.uniform();
  EXPECT_NEAR(knn_mi(z, y).value, std::log(2.0), 0.05);
}

TEST(KnnMi, MatchesSlowOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    GaussianMixtureSpec spec;
    spec.n = 200;
    spec.sigma = 1.5;
    spec.seed = static_cast<std::uint64_t>(trial);
    const MixtureSample s = sample_gaussian_mixture(spec);
    EXPECT_NEAR(knn_mi(s.points, s.labels).value, slow_knn_mi(s.points, s.labels, 3), 1e-12);
  }
}

TEST(KnnMi, PositiveScalingLeavesEstimateUnchanged) {
  GaussianMixtureSpec spec;
  spec.n = 300;
  const MixtureSample s = sample_gaussian_mixture(spec);
  const double base = knn_mi(s.points, s.labels).value;
  EXPECT_EQ(knn_mi(s.points * 4.0, s.labels).value, base);
  EXPECT_NEAR(knn_mi(s.points * 3.7, s.labels).value, base, 1e-12);
}

TEST(KnnMi, MixtureDefaultLiesStrictlyBetweenZeroAndEntropy) {
  const MixtureSample s = sample_gaussian_mixture(GaussianMixtureSpec{});
  const double mi = knn_mi(s.points, s.labels).value;
  EXPECT_GT(mi, 0.0);
  EXPECT_LT(mi, std::log(3.0));
}

TEST(KnnMi, SmallClassReducesKWithWarning) {
  Rng rng(5);
  std::vector<int> y = balanced_labels(30, 2);
  y[0] = 7;
  y[1] = 7;  // a two-member class
  y[2] = 9;  // a singleton, skipped
  const MiEstimate e = knn_mi(seeded_normal(rng, 30, 2), y);
  EXPECT_EQ(e.n, 29);
  EXPECT_EQ(e.warnings.size(), 2u);
}

TEST(KnnMi, PreconditionViolations) {
  Rng rng(6);
  EXPECT_THROW(knn_mi(seeded_normal(rng, 20, 2), std::vector<int>(20, 0)), ContractViolation);
  EXPECT_THROW(knn_mi(seeded_normal(rng, 8, 2), balanced_labels(8, 2)), ContractViolation);
}

TEST(Mig, SingleInformativeDimensionIsNearOne) {
  Rng rng(7);
  const auto y = balanced_labels(600, 3);
  Matrix z = seeded_normal(rng, 600, 4);
  for (Index i = 0; i < 600; ++i) z(i, 2) = y[static_cast<std::size_t>(i)] + 1e-3 * rng.normal();
  EXPECT_GT(mig(z, y), 0.9);
}

TEST(Mig, DuplicatedInformativeDimensionsCollapseGap) {
  Rng rng(8);
  const auto y = balanced_labels(600, 3);
  Matrix z = seeded_normal(rng, 600, 4);
  for (Index i = 0; i < 600; ++i) z(i, 0) = z(i, 1) = y[static_cast<std::size_t>(i)] + 1e-3 * rng.normal();
  EXPECT_LT(mig(z, y), 0.05);
}

TEST(Mig, MatchesSlowRecompute) {
  Rng rng(9);
  const auto y = balanced_labels(240, 4);
  Matrix z = seeded_normal(rng, 240, 3);
  for (Index i = 0; i < 240; ++i) z(i, 1) += 0.7 * y[static_cast<std::size_t>(i)];
  std::vector<double> mi;
  for (Index d = 0; d < 3; ++d) mi.push_back(slow_knn_mi(z.col(d), y, 3));
  std::sort(mi.rbegin(), mi.rend());
  EXPECT_NEAR(mig(z, y), (mi[0] - mi[1]) / std::log(4.0), 1e-12);
}

TEST(Gmig, InformativeContentAndNoiseStyleIsNearOne) {
  Rng rng(10);
  const auto y = balanced_labels(900, 3);
  Matrix zc(900, 4);
  for (Index i = 0; i < 900; ++i) {
    for (Index d = 0; d < 4; ++d) zc(i, d) = 2.0 * y[static_cast<std::size_t>(i)] + 1e-4 * rng.normal();
  }
  const GmigReport r = gmig(zc, seeded_normal(rng, 900, 4), y);
  EXPECT_GT(r.gmig, 0.95);
  EXPECT_LE(r.gmig, 1.0);
}

TEST(Gmig, BothNoiseIsNearZeroAndAntisymmetric) {
  Rng rng(11);
  const auto y = balanced_labels(1000, 4);
  const Matrix a = seeded_normal(rng, 1000, 3), b = seeded_normal(rng, 1000, 3);
  const GmigReport r = gmig(a, b, y);
  EXPECT_LT(std::abs(r.gmig), 0.05);
  EXPECT_EQ(gmig(b, a, y).gmig, -r.gmig);
}

TEST(Gmig, ReportFieldsRecomputeAndSerialize) {
  Rng rng(12);
  const auto y = balanced_labels(300, 3);
  Matrix zc = seeded_normal(rng, 300, 2);
  zc.col(0).array() += Eigen::Map<const Eigen::VectorXi>(y.data(), 300).cast<double>().array();
  const GmigReport r = gmig(zc, seeded_normal(rng, 300, 3), y);
  EXPECT_NEAR(r.gmig, (r.mean_c() - r.mean_s()) / r.h_y, 1e-12);
  EXPECT_NEAR(r.h_y, std::log(3.0), 1e-12);
  EXPECT_LE(r.h_y * std::abs(r.gmig), std::max(r.mean_c(), r.mean_s()) + 1e-12);
  const auto j = nlohmann::json::parse(r.to_json());
  for (const char* key : {"gmig", "h_y", "mi_c", "mi_s", "method", "k", "n"}) EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["mi_c"].size(), 2u);
  EXPECT_EQ(j["method"], "knn");
  const GmigReport back = GmigReport::from_json(r.to_json());
  EXPECT_EQ(back.gmig, r.gmig);
  EXPECT_EQ(back.mi_s, r.mi_s);
  EXPECT_EQ(back.to_json(), r.to_json());
  EXPECT_THROW(GmigReport::from_json(R"({"gmig": 0})"), ContractViolation);
  EXPECT_THROW(gmig(zc, zc, std::vector<int>(300, 1)), ContractViolation);
}

// An aux net whose conditional ignores z_c: N(0, I) for every input.
AuxGaussianNet marginal_aux(Index dc, Index ds) {
  Rng rng(0);
  AuxGaussianNet aux(dc, ds, rng);
  aux.mean.out.weight.mutable_value().setZero();
  aux.mean.out.bias.mutable_value().setZero();
  aux.logvar.out.weight.mutable_value().setZero();
  aux.logvar.out.bias.mutable_value().setZero();
  return aux;
}

void fit_aux(AuxGaussianNet& aux, const Matrix& zs, const Matrix& zc, int steps, double lr) {
  ParameterList params;
  aux.collect("aux", params);
  Adam opt(tensors_of(params), AdamOptions{lr});
  for (int s = 0; s < steps; ++s) {
    opt.zero_grad();
    neg(aux_log_likelihood(Tensor::constant(zs), Tensor::constant(zc), aux)).backward();
    opt.step();
  }
}

double log_density(const RowVector& s, const RowVector& mu, const RowVector& lv) {
  double acc = 0;
  for (Index d = 0; d < s.size(); ++d) {
    acc += -0.5 * (std::log(2 * std::numbers::pi) + lv(d) + (s(d) - mu(d)) * (s(d) - mu(d)) / std::exp(lv(d)));
  }
  return acc;
}

TEST(L1Out, MatchesNaiveLoop) {
  Rng rng(13);
  AuxGaussianNet aux(3, 2, rng);
  const Matrix zc = seeded_normal(rng, 20, 3), zs = seeded_normal(rng, 20, 2);
  const auto [mu_t, lv_t] = aux(Tensor::constant(zc));
  const Matrix mu = mu_t.value(), lv = lv_t.value();
  double expected = 0;
  for (Index i = 0; i < 20; ++i) {
    double denom = 0;
    for (Index j = 0; j < 20; ++j) {
      if (j != i) denom += std::exp(log_density(zs.row(i), mu.row(j), lv.row(j)));
    }
    expected += log_density(zs.row(i), mu.row(i), lv.row(i)) - std::log(denom / 19.0);
  }
  EXPECT_NEAR(l1out_ub(zs, zc, aux).value, expected / 20.0, 1e-8);
  EXPECT_THROW(l1out_ub(zs.topRows(1), zc.topRows(1), aux), ContractViolation);
}

TEST(L1Out, ConditionalEqualsMarginalGivesZero) {
  Rng rng(14);
  const AuxGaussianNet aux = marginal_aux(3, 2);
  EXPECT_NEAR(l1out_ub(seeded_normal(rng, 64, 2), seeded_normal(rng, 64, 3), aux).value, 0.0, 1e-12);
}

// Near-copied latents: the estimate is a valid upper bound at every batch size
// and tightens toward the analytic MI as the batch grows.
TEST(L1Out, CopiedLatentsStayAboveTheTrueMi) {
  Rng rng(15);
  const double noise = 0.05;
  auto draw = [&](Index n) {
    const Matrix zc = seeded_normal(rng, n, 2);
    return std::pair{zc, Matrix(zc + noise * seeded_normal(rng, n, 2))};
  };
  const auto [fit_c, fit_s] = draw(2048);
  Rng init(16);
  AuxGaussianNet aux(2, 2, init);
  fit_aux(aux, fit_s, fit_c, 400, 1e-2);
  const auto [zc, zs] = draw(512);
  const double true_mi = std::log(1.0 + 1.0 / (noise * noise));  // 2 dims x 0.5 log(1 + 1/noise^2)
  const double small = l1out_ub(zs.topRows(32), zc.topRows(32), aux).value;
  const double large = l1out_ub(zs, zc, aux).value;
  EXPECT_GE(small, true_mi);
  EXPECT_GE(large, true_mi);
  EXPECT_LE(large, small);
  std::vector<int> quadrant;
  for (Index i = 0; i < 512; ++i) quadrant.push_back((zc(i, 0) > 0) + 2 * (zc(i, 1) > 0));
  EXPECT_GE(large, knn_mi(zs, quadrant).value);
}

TEST(ClubS, MatchesNaiveLoopAndIsDeterministic) {
  Rng rng(17);
  AuxGaussianNet aux(3, 2, rng);
  const Matrix zc = seeded_normal(rng, 16, 3), zs = seeded_normal(rng, 16, 2);
  const auto [mu_t, lv_t] = aux(Tensor::constant(zc));
  Rng a(99), b(99), c(99);
  double expected = 0;
  for (Index i = 0; i < 16; ++i) {
    const Index k = static_cast<Index>(c.uniform_int(16));
    expected += log_density(zs.row(i), mu_t.value().row(i), lv_t.value().row(i)) -
                log_density(zs.row(k), mu_t.value().row(i), lv_t.value().row(i));
  }
  const double v = club_s(zs, zc, aux, a).value;
  EXPECT_NEAR(v, expected / 16.0, 1e-10);
  EXPECT_EQ(club_s(zs, zc, aux, b).value, v);
}

TEST(ClubS, IndependentLatentsWithMarginalAuxAverageToZero) {
  Rng rng(18);
  const AuxGaussianNet aux = marginal_aux(2, 2);
  const Matrix zc = seeded_normal(rng, 256, 2), zs = seeded_normal(rng, 256, 2);
  double acc = 0;
  for (int draw = 0; draw < 100; ++draw) acc += club_s(zs, zc, aux, rng).value;
  EXPECT_LT(std::abs(acc / 100.0), 0.05);
}

// Weakly correlated Gaussians: the sampled CLUB gap over the true MI grows like
// rho^2 / (1 - rho^2), so the ordering is checked at modest correlation.
TEST(L1OutVsClubS, BoundOrderingOnCorrelatedGaussians) {
  Rng rng(19);
  const double rho = 0.25;
  auto draw = [&](Index n) {
    const Matrix zc = seeded_normal(rng, n, 2);
    return std::pair{zc, Matrix(rho * zc + std::sqrt(1 - rho * rho) * seeded_normal(rng, n, 2))};
  };
  const auto [fit_c, fit_s] = draw(4096);
  Rng init(20);
  AuxGaussianNet aux(2, 2, init);
  fit_aux(aux, fit_s, fit_c, 300, 1e-2);
  double l1 = 0, club = 0;
  for (int batch = 0; batch < 20; ++batch) {
    const auto [zc, zs] = draw(256);
    l1 += l1out_ub(zs, zc, aux).value / 20.0;
    club += club_s(zs, zc, aux, rng).value / 20.0;
  }
  EXPECT_GE(l1, club - 0.1);
}

TEST(AuxNet, HeldOutLikelihoodImprovesOnCorrelatedLatents) {
  Rng rng(21);
  const Matrix zc = seeded_normal(rng, 600, 3);
  const Matrix zs = (zc.leftCols(2) * 0.9 + 0.3 * seeded_normal(rng, 600, 2)).eval();
  Rng init(22);
  AuxGaussianNet aux(3, 2, init);
  auto held_out = [&] {
    return aux_log_likelihood(Tensor::constant(zs.bottomRows(200)), Tensor::constant(zc.bottomRows(200)), aux).item();
  };
  const double before = held_out();
  fit_aux(aux, zs.topRows(400), zc.topRows(400), 200, 1e-2);
  EXPECT_GT(held_out(), before + 0.5);
}

TEST(AuxNet, IndependentLatentsGiveNearZeroClub) {
  Rng rng(23);
  Rng init(24);
  AuxGaussianNet aux(3, 2, init);
  fit_aux(aux, seeded_normal(rng, 4096, 2), seeded_normal(rng, 4096, 3), 300, 1e-2);
  const Matrix zc = seeded_normal(rng, 1024, 3), zs = seeded_normal(rng, 1024, 2);
  double club = 0;
  for (int draw = 0; draw < 20; ++draw) club += club_s(zs, zc, aux, rng).value / 20.0;
  EXPECT_LT(std::abs(club), 0.1);
  const auto [mu, lv] = aux(Tensor::constant(zc));
  EXPECT_EQ(mu.cols(), 2);
  EXPECT_EQ(lv.cols(), 2);
}

TEST(TcEstimate, AnalyticProbabilities) {
  EXPECT_EQ(tc_estimate_from_probabilities(Matrix::Constant(10, 1, 0.5)).value, 0.0);
  EXPECT_NEAR(tc_estimate_from_probabilities(Matrix::Constant(10, 1, 0.9)).value, std::log(9.0), 1e-12);
  EXPECT_EQ(tc_estimate_from_probabilities(Matrix::Constant(10, 1, 0.2)).value, 0.0);  // ReLU
  EXPECT_THROW(tc_estimate_from_probabilities(Matrix::Constant(3, 1, 1.0)), NumericFault);
}

TEST(TcEstimate, UntrainedDiscriminatorIsNearHalf) {
  Rng rng(25);
  TcDiscriminator disc(3, 3, rng);
  const Matrix p = disc.probabilities(Tensor::constant(seeded_normal(rng, 200, 3)), Tensor::constant(seeded_normal(rng, 200, 3)));
  EXPECT_LT(std::abs(p.mean() - 0.5), 0.1);
}

TEST(ShuffleDecouple, SwapsPairsAndPreservesMarginals) {
  Matrix two(2, 3);
  two << 1, 2, 3, 4, 5, 6;
  const Matrix swapped = shuffle_decouple(two);
  EXPECT_TRUE(swapped.row(0) == two.row(1));
  EXPECT_TRUE(swapped.row(1) == two.row(0));
  EXPECT_TRUE(shuffle_decouple(swapped) == two);

  Rng rng(26);
  const Matrix z = seeded_normal(rng, 37, 4);
  const Matrix s = shuffle_decouple(z);
  EXPECT_LT((s.colwise().mean() - z.colwise().mean()).cwiseAbs().maxCoeff(), 1e-12);
  for (Index i = 0; i < 37; ++i) EXPECT_TRUE(s.row(i) == z.row((i + 1) % 37));
  EXPECT_TRUE(shuffle_decouple(Tensor::constant(z)).value() == s);
  EXPECT_THROW(shuffle_decouple(Matrix(Matrix::Zero(1, 2))), ContractViolation);
}

}  // namespace
}  // namespace clear
