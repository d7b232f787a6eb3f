#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "clear/errors.hpp"
#include "clear/io/idx.hpp"
#include "clear/losses/losses.hpp"
#include "clear/model/checkpoint.hpp"
#include "clear/model/networks.hpp"

namespace clear {
namespace {

Tensor random_images(Rng& rng, Index n, Index c, Index side) {
  Matrix m(n, c * side * side);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform();
  return Tensor::constant(std::move(m), {n, c, side, side});
}

ModelConfig small_config(Index side = 16, Index channels = 1) {
  ModelConfig cfg;
  cfg.image_size = side;
  cfg.channels = channels;
  cfg.d_c = 4;
  cfg.d_s = 3;
  cfg.num_classes = 5;
  return cfg;
}

TEST(Encoder, LatentShapesForBothSizes) {
  Rng rng(1);
  for (Index side : {16, 28}) {
    const ClearModel model(small_config(side, 3), Variant::ps, 1);
    const LatentCode code = model.encode(random_images(rng, 4, 3, side));
    EXPECT_EQ(code.mu_c.rows(), 4);
    EXPECT_EQ(code.mu_c.cols(), 4);
    EXPECT_EQ(code.logvar_c.cols(), 4);
    EXPECT_EQ(code.mu_s.cols(), 3);
    EXPECT_EQ(code.logvar_s.cols(), 3);
    const Tensor x_hat = model.decode(code.mu_c, code.mu_s);
    EXPECT_EQ(x_hat.shape(), (Shape{4, 3, side, side}));
  }
}

TEST(Encoder, ShapeMismatchIsContractViolation) {
  Rng rng(2);
  const ClearModel model(small_config(), Variant::ps, 1);
  EXPECT_THROW(model.encode(random_images(rng, 2, 1, 28)), ContractViolation);
  EXPECT_THROW(model.encode(random_images(rng, 2, 3, 16)), ContractViolation);
  EXPECT_THROW(model.encode(Tensor::constant(Matrix::Zero(2, 256))), ContractViolation);
  EXPECT_THROW(ClearModel(small_config(20), Variant::ps, 1), ContractViolation);
}

TEST(Encoder, DuplicatedRowsGiveIdenticalLatents) {
  Rng rng(3);
  const ClearModel model(small_config(), Variant::ps, 4);
  Tensor one = random_images(rng, 1, 1, 16);
  Matrix twice(2, one.cols());
  twice.row(0) = twice.row(1) = one.value().row(0);
  const LatentCode code = model.encode(Tensor::constant(twice, {2, 1, 16, 16}));
  EXPECT_TRUE(code.mu_c.value().row(0) == code.mu_c.value().row(1));
  EXPECT_TRUE(code.logvar_s.value().row(0) == code.logvar_s.value().row(1));
  // and the forward pass is deterministic across calls
  EXPECT_TRUE(model.encode(Tensor::constant(twice, {2, 1, 16, 16})).mu_s.value() == code.mu_s.value());
}

TEST(Encoder, LogvarIsClamped) {
  Rng rng(4);
  ClearModel model(small_config(), Variant::ps, 5);
  ParameterList params = model.encoder_parameters();
  for (auto& p : params) {
    if (p.name == "encoder.logvar.bias") p.tensor.mutable_value().setConstant(1e3);
  }
  const LatentCode code = model.encode(random_images(rng, 3, 1, 16));
  EXPECT_LE(code.logvar_c.value().maxCoeff(), kLogvarMax);
  EXPECT_LE(code.logvar_s.value().maxCoeff(), kLogvarMax);
}

TEST(Reparameterize, ZeroNoiseReturnsMeanExactly) {
  Rng rng(5);
  const LatentCode code{Tensor::constant(seeded_normal(rng, 3, 4)), Tensor::constant(seeded_normal(rng, 3, 4)),
                        Tensor::constant(seeded_normal(rng, 3, 2)), Tensor::constant(seeded_normal(rng, 3, 2))};
  const Latents z = reparameterize(code, Matrix::Zero(3, 4), Matrix::Zero(3, 2));
  EXPECT_TRUE(z.z_c.value() == code.mu_c.value());
  EXPECT_TRUE(z.z_s.value() == code.mu_s.value());
  EXPECT_THROW(reparameterize(code, Matrix::Zero(3, 3), Matrix::Zero(3, 2)), ContractViolation);
}

TEST(Reparameterize, FloorLogvarCollapsesOntoMean) {
  Rng rng(6);
  const Tensor mu = Tensor::constant(seeded_normal(rng, 200, 8));
  const Tensor lv = clamp(Tensor::constant(Matrix::Constant(200, 8, -1e3)), kLogvarMin, kLogvarMax);
  const Latents z = reparameterize({mu, lv, mu, lv}, rng);
  const Matrix dev = (z.z_c.value() - mu.value()).cwiseAbs();
  EXPECT_LT(dev.mean(), 0.01);
  EXPECT_LT(dev.maxCoeff(), 0.05);
}

TEST(Reparameterize, GradientOfSumMatchesFiniteDifferences) {
  Rng rng(7);
  const Matrix eps_c = seeded_normal(rng, 3, 2), eps_s = seeded_normal(rng, 3, 2);
  Tensor mu = Tensor::parameter(seeded_normal(rng, 3, 2));
  Tensor lv = Tensor::parameter(seeded_normal(rng, 3, 2));
  auto f = [&] {
    const Latents z = reparameterize({mu, lv, mu, lv}, eps_c, eps_s);
    return sum(z.z_c) + sum(z.z_s);
  };
  f().backward();
  const Matrix analytic = lv.grad();
  Matrix& v = lv.mutable_value();
  for (Index i = 0; i < v.size(); ++i) {
    const double orig = v.data()[i];
    v.data()[i] = orig + 1e-6;
    const double up = f().item();
    v.data()[i] = orig - 1e-6;
    const double down = f().item();
    v.data()[i] = orig;
    EXPECT_NEAR(analytic.data()[i], (up - down) / 2e-6, 1e-6);
  }
  EXPECT_TRUE(mu.grad().isApprox(Matrix::Constant(3, 2, 2.0)));
}

TEST(Decoder, OutputsLieInOpenUnitIntervalAndAcceptSwaps) {
  Rng rng(8);
  for (Index side : {16, 28}) {
    const ClearModel model(small_config(side), Variant::ps, 9);
    const Tensor zc = Tensor::constant(seeded_normal(rng, 6, 4) * 3.0);
    const Tensor zs = Tensor::constant(seeded_normal(rng, 6, 3) * 3.0);
    const Matrix out = model.decode(zc, zs).value();
    EXPECT_GT(out.minCoeff(), 0.0);
    EXPECT_LT(out.maxCoeff(), 1.0);
    // content from row i, style from row j
    const std::vector<Index> i{0, 0, 5}, j{5, 2, 0};
    EXPECT_EQ(model.decode(gather_rows(zc, i), gather_rows(zs, j)).shape(), (Shape{3, 1, side, side}));
  }
}

// Finite differences on a sample of entries of every parameter of a full model.
TEST(ClearModel, SampledGradientCheckOfTheFullObjective) {
  Rng rng(10);
  ClearModel model(small_config(), Variant::ps, 11);
  const Tensor x = random_images(rng, 4, 1, 16);
  const std::vector<int> y{0, 0, 1, 1};
  ClearConfig cfg;
  cfg.d_c = 4;
  cfg.d_s = 3;
  cfg.alpha1 = cfg.alpha2 = 1.0;
  const Matrix eps_c = seeded_normal(rng, 4, 4), eps_s = seeded_normal(rng, 4, 3);
  auto f = [&] {
    ForwardPass fp;
    fp.code = model.encode(x);
    fp.z = reparameterize(fp.code, eps_c, eps_s);
    fp.x_hat = model.decode(fp.z.z_c, fp.z.z_s);
    return clear_objective(x, fp, y, cfg).total;
  };
  ParameterList params = model.vae_parameters();
  for (auto& p : params) p.tensor.zero_grad();
  f().backward();
  double diff2 = 0, norm2 = 0;
  for (auto& p : params) {
    const Matrix analytic = p.tensor.grad();
    Matrix& v = p.tensor.mutable_value();
    for (int s = 0; s < 4; ++s) {
      const Index i = static_cast<Index>(rng.uniform_int(static_cast<std::uint64_t>(v.size())));
      const double orig = v.data()[i];
      v.data()[i] = orig + 1e-5;
      const double up = f().item();
      v.data()[i] = orig - 1e-5;
      const double down = f().item();
      v.data()[i] = orig;
      const double numeric = (up - down) / 2e-5;
      diff2 += std::pow(numeric - analytic.data()[i], 2);
      norm2 += numeric * numeric;
    }
  }
  EXPECT_LT(std::sqrt(diff2 / norm2), 1e-4);
}

TEST(ClearModel, GradientReachesEncoderThroughKlAndContrastivePaths) {
  Rng rng(12);
  const ClearModel model(small_config(), Variant::ps, 13);
  const Tensor x = random_images(rng, 6, 1, 16);
  const std::vector<int> y{0, 0, 1, 1, 2, 2};
  const ParameterList enc = model.encoder_parameters();
  auto encoder_grad_norm = [&](const Tensor& loss) {
    for (const auto& p : enc) Tensor(p.tensor).zero_grad();
    loss.backward();
    double n = 0;
    for (const auto& p : enc) n += p.tensor.grad().squaredNorm();
    return std::sqrt(n);
  };
  const ForwardPass fp = model.forward(x, rng);
  EXPECT_GT(encoder_grad_norm(kl_diag_gaussian(fp.code.mu_c, fp.code.logvar_c)), 0.0);
  const ForwardPass fp2 = model.forward(x, rng);
  EXPECT_GT(encoder_grad_norm(snn_loss(content_view(fp2), y, 0.3, Metric::cosine)), 0.0);
  const ForwardPass fp3 = model.forward(x, rng);
  EXPECT_GT(encoder_grad_norm(ps_snn_loss(style_view(fp3), y, 0.3, Metric::cosine)), 0.0);
}

TEST(ClearModel, AuxiliaryNetworksFollowTheVariant) {
  const ModelConfig cfg = small_config();
  EXPECT_THROW(ClearModel(cfg, Variant::ps, 1).aux_net(), ContractViolation);
  EXPECT_THROW(ClearModel(cfg, Variant::tc, 1).aux_net(), ContractViolation);
  EXPECT_THROW(ClearModel(cfg, Variant::l1out, 1).discriminator(), ContractViolation);
  EXPECT_NO_THROW(ClearModel(cfg, Variant::club_s, 1).aux_net());
  EXPECT_NO_THROW(ClearModel(cfg, Variant::tc, 1).discriminator());
  EXPECT_TRUE(ClearModel(cfg, Variant::ps, 1).aux_parameters().empty());
  EXPECT_FALSE(ClearModel(cfg, Variant::l1out, 1).aux_parameters().empty());

  Rng rng(14);
  const ClearModel m(cfg, Variant::l1out, 2);
  const auto [mu, lv] = m.aux_net()(Tensor::constant(seeded_normal(rng, 5, 4)));
  EXPECT_EQ(mu.cols(), 3);
  EXPECT_EQ(lv.cols(), 3);
}

TEST(ClearModel, SameSeedSameWeights) {
  const ClearModel a(small_config(), Variant::tc, 21), b(small_config(), Variant::tc, 21), c(small_config(), Variant::tc, 22);
  const ParameterList pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].name, pb[i].name);
    EXPECT_TRUE(pa[i].tensor.value() == pb[i].tensor.value());
    any_diff |= pa[i].tensor.value() != pc[i].tensor.value();
  }
  EXPECT_TRUE(any_diff);
}

TEST(ClassifierHead, ZeroInitGivesUniformSoftmax) {
  Rng rng(15);
  const ClassifierHead head(4, 5, rng, Init::zero);
  const Matrix logits = head(Tensor::constant(seeded_normal(rng, 10, 4))).value();
  EXPECT_EQ(logits.rows(), 10);
  EXPECT_EQ(logits.cols(), 5);
  EXPECT_TRUE((logits.array() == logits(0, 0)).all());
}

TEST(BaselineCnn, SharesTheEncoderArchitecture) {
  const ModelConfig cfg = small_config();
  const BaselineCnn cnn(cfg, 3);
  const ClearModel model(cfg, Variant::ps, 3);
  ParameterList trunk;
  cnn.trunk.collect("encoder", trunk);
  const ParameterList enc = model.encoder_parameters();
  ASSERT_EQ(trunk.size(), enc.size());
  for (std::size_t i = 0; i < enc.size(); ++i) {
    EXPECT_EQ(trunk[i].name, enc[i].name);
    EXPECT_EQ(trunk[i].tensor.shape(), enc[i].tensor.shape());
  }
  Rng rng(4);
  EXPECT_EQ(cnn.logits(random_images(rng, 3, 1, 16)).cols(), 5);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "clear_test_ckpt";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const ClearModel model(small_config(), Variant::club_s, 31);
  const std::string cfg = R"({"d_c": 4})";
  save_checkpoint(dir / "a.ckpt", cfg, model.parameters());
  const Checkpoint ck = load_checkpoint(dir / "a.ckpt");
  EXPECT_EQ(ck.config_json, cfg);
  const ParameterList params = model.parameters();
  ASSERT_EQ(ck.tensors.size(), params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    EXPECT_EQ(ck.tensors[i].name, params[i].name);
    EXPECT_EQ(ck.tensors[i].shape, params[i].tensor.shape());
    EXPECT_EQ(std::memcmp(ck.tensors[i].value.data(), params[i].tensor.value().data(),
                          sizeof(double) * static_cast<std::size_t>(ck.tensors[i].value.size())),
              0);
  }

  ClearModel other(small_config(), Variant::club_s, 99);
  restore_parameters(ck, other.parameters());
  save_checkpoint(dir / "b.ckpt", cfg, other.parameters());
  EXPECT_EQ(read_file_bytes(dir / "a.ckpt"), read_file_bytes(dir / "b.ckpt"));

  Rng rng(5);
  const Tensor x = random_images(rng, 2, 1, 16);
  EXPECT_TRUE(model.encode(x).mu_c.value() == other.encode(x).mu_c.value());

  auto bytes = read_file_bytes(dir / "a.ckpt");
  bytes[0] = 'X';
  std::ofstream(dir / "bad.ckpt", std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                                           static_cast<std::streamsize>(bytes.size()));
  EXPECT_THROW(load_checkpoint(dir / "bad.ckpt"), ParseError);
  ClearModel wrong(small_config(28), Variant::club_s, 1);
  EXPECT_THROW(restore_parameters(ck, wrong.parameters()), ContractViolation);
}

}  // namespace
}  // namespace clear
