#include "clear/model/networks.hpp"

#include <string>

#include "clear/errors.hpp"

namespace clear {

namespace {

// Channel widths of the conv trunk; the 16 x 16 variant drops the last block.
constexpr Index kWidths[] = {32, 64, 128};

Index num_blocks(const ModelConfig& cfg) { return cfg.image_size == 28 ? 3 : 2; }

}  // namespace

void ModelConfig::validate() const {
  CLEAR_REQUIRE(image_size == 16 || image_size == 28, "model: image size must be 16 or 28");
  CLEAR_REQUIRE(channels >= 1, "model: need at least one channel");
  CLEAR_REQUIRE(d_c >= 1 && d_s >= 1, "model: both latent groups need at least one dimension");
  CLEAR_REQUIRE(num_classes >= 2, "model: need at least two classes");
}

LatentCode LatentCode::detach() const {
  return {mu_c.detach(), logvar_c.detach(), mu_s.detach(), logvar_s.detach()};
}

Encoder::Encoder(const ModelConfig& cfg, Rng& rng) : config(cfg) {
  cfg.validate();
  Index in = cfg.channels;
  Index side = cfg.image_size;
  for (Index b = 0; b < num_blocks(cfg); ++b) {
    const ConvGeometry g{in, kWidths[b], 3, 2, 1, 0};
    convs.emplace_back(g, rng);
    in = g.out_channels;
    side = g.conv_out(side);
  }
  const Index flat = in * side * side;
  mu_head = Linear(flat, cfg.d_z(), rng);
  logvar_head = Linear(flat, cfg.d_z(), rng);
}

Tensor Encoder::features(const Tensor& x) const {
  const Shape& s = x.shape();
  if (s.size() != 4 || s[1] != config.channels || s[2] != config.image_size || s[3] != config.image_size) {
    throw ContractViolation("encoder: expected input shaped (n, " + std::to_string(config.channels) + ", " +
                            std::to_string(config.image_size) + ", " + std::to_string(config.image_size) + ")");
  }
  Tensor h = x;
  for (const Conv& c : convs) h = relu(c(h));
  return reshape(h, {h.rows(), h.cols()});
}

LatentCode Encoder::operator()(const Tensor& x) const {
  const Tensor h = features(x);
  const Tensor mu = mu_head(h);
  const Tensor lv = clamp(logvar_head(h), kLogvarMin, kLogvarMax);
  const Index dc = config.d_c, ds = config.d_s;
  return {slice_cols(mu, 0, dc), slice_cols(lv, 0, dc), slice_cols(mu, dc, ds), slice_cols(lv, dc, ds)};
}

void Encoder::collect(const std::string& prefix, ParameterList& out) const {
  for (std::size_t i = 0; i < convs.size(); ++i) convs[i].collect(prefix + ".conv" + std::to_string(i), out);
  mu_head.collect(prefix + ".mu", out);
  logvar_head.collect(prefix + ".logvar", out);
}

Decoder::Decoder(const ModelConfig& cfg, Rng& rng) : config(cfg) {
  cfg.validate();
  const Index blocks = num_blocks(cfg);
  base_channels = kWidths[blocks - 1];
  base_side = 4;
  fc = Linear(cfg.d_z(), base_channels * base_side * base_side, rng);
  // 28: 4 -> 7 -> 14 -> 28; 16: 4 -> 8 -> 16.
  Index in = base_channels;
  for (Index b = blocks - 1; b >= 0; --b) {
    const Index out = b == 0 ? cfg.channels : kWidths[b - 1];
    const Index output_padding = (cfg.image_size == 28 && b == 2) ? 0 : 1;
    deconvs.emplace_back(ConvGeometry{in, out, 3, 2, 1, output_padding}, rng);
    in = out;
  }
}

Tensor Decoder::operator()(const Tensor& z_c, const Tensor& z_s) const {
  CLEAR_REQUIRE(z_c.cols() + z_s.cols() == config.d_z() && z_c.rows() == z_s.rows(),
                "decoder: latent widths must add up to d_z");
  Tensor h = relu(fc(concat_cols(z_c, z_s)));
  h = reshape(h, {h.rows(), base_channels, base_side, base_side});
  for (std::size_t i = 0; i < deconvs.size(); ++i) {
    h = deconvs[i](h);
    if (i + 1 < deconvs.size()) h = relu(h);
  }
  return sigmoid(h);
}

void Decoder::collect(const std::string& prefix, ParameterList& out) const {
  fc.collect(prefix + ".fc", out);
  for (std::size_t i = 0; i < deconvs.size(); ++i) deconvs[i].collect(prefix + ".deconv" + std::to_string(i), out);
}

Latents reparameterize(const LatentCode& code, const Matrix& eps_c, const Matrix& eps_s) {
  CLEAR_REQUIRE(eps_c.rows() == code.mu_c.rows() && eps_c.cols() == code.mu_c.cols() &&
                    eps_s.rows() == code.mu_s.rows() && eps_s.cols() == code.mu_s.cols(),
                "reparameterize: noise shape must match the means");
  auto draw = [](const Tensor& mu, const Tensor& lv, const Matrix& eps) {
    return mu + mul(exp(scale(lv, 0.5)), Tensor::constant(eps));
  };
  return {draw(code.mu_c, code.logvar_c, eps_c), draw(code.mu_s, code.logvar_s, eps_s)};
}

Latents reparameterize(const LatentCode& code, Rng& rng) {
  const Matrix eps_c = seeded_normal(rng, code.mu_c.rows(), code.mu_c.cols());
  const Matrix eps_s = seeded_normal(rng, code.mu_s.rows(), code.mu_s.cols());
  return reparameterize(code, eps_c, eps_s);
}

AuxGaussianNet::AuxGaussianNet(Index d_c, Index d_s, Rng& rng)
    : mean(d_c, kAuxWidth, d_s, rng), logvar(d_c, kAuxWidth, d_s, rng, Init::zero) {}

std::pair<Tensor, Tensor> AuxGaussianNet::operator()(const Tensor& z_c) const {
  return {mean(z_c), clamp(logvar(z_c), kLogvarMin, kLogvarMax)};
}

void AuxGaussianNet::collect(const std::string& prefix, ParameterList& out) const {
  mean.collect(prefix + ".mean", out);
  logvar.collect(prefix + ".logvar", out);
}

TcDiscriminator::TcDiscriminator(Index d_c, Index d_s, Rng& rng) : net(d_c + d_s, kAuxWidth, 1, rng, Init::zero) {}

Tensor TcDiscriminator::logits(const Tensor& z_c, const Tensor& z_s) const {
  return net(concat_cols(z_c, z_s));
}

Matrix TcDiscriminator::probabilities(const Tensor& z_c, const Tensor& z_s) const {
  Matrix p = sigmoid(logits(z_c.detach(), z_s.detach())).value();
  if ((p.array() <= 0.0).any() || (p.array() >= 1.0).any()) {
    throw NumericFault("tc_discriminator", "probability saturated to 0 or 1");
  }
  return p;
}

void TcDiscriminator::collect(const std::string& prefix, ParameterList& out) const { net.collect(prefix, out); }

ClearModel::ClearModel(const ModelConfig& cfg, Variant variant, std::uint64_t seed)
    : config_(cfg), variant_(variant) {
  Rng rng(seed, 0);
  encoder_ = Encoder(cfg, rng);
  decoder_ = Decoder(cfg, rng);
  Rng aux_rng = rng.split(1);
  reinit_aux(aux_rng);
}

ForwardPass ClearModel::forward(const Tensor& x, Rng& rng) const {
  ForwardPass fp;
  fp.code = encoder_(x);
  fp.z = reparameterize(fp.code, rng);
  fp.x_hat = decoder_(fp.z.z_c, fp.z.z_s);
  return fp;
}

const AuxGaussianNet& ClearModel::aux_net() const {
  if (!aux_) throw ContractViolation("aux Gaussian net only exists for the l1out and club-s variants");
  return *aux_;
}

const TcDiscriminator& ClearModel::discriminator() const {
  if (!disc_) throw ContractViolation("TC discriminator only exists for the tc variant");
  return *disc_;
}

void ClearModel::reinit_aux(Rng& rng) {
  aux_.reset();
  disc_.reset();
  if (uses_aux_gaussian(variant_)) aux_.emplace(config_.d_c, config_.d_s, rng);
  if (variant_ == Variant::tc) disc_.emplace(config_.d_c, config_.d_s, rng);
}

ParameterList ClearModel::encoder_parameters() const {
  ParameterList out;
  encoder_.collect("encoder", out);
  return out;
}

ParameterList ClearModel::vae_parameters() const {
  ParameterList out = encoder_parameters();
  decoder_.collect("decoder", out);
  return out;
}

ParameterList ClearModel::aux_parameters() const {
  ParameterList out;
  if (aux_) aux_->collect("aux", out);
  if (disc_) disc_->collect("disc", out);
  return out;
}

ParameterList ClearModel::parameters() const {
  ParameterList out = vae_parameters();
  for (auto& p : aux_parameters()) out.push_back(p);
  return out;
}

ClassifierHead::ClassifierHead(Index d_c, Index num_classes, Rng& rng, Init last)
    : net(d_c, kAuxWidth, num_classes, rng, last) {}

ParameterList ClassifierHead::parameters() const {
  ParameterList out;
  net.collect("head", out);
  return out;
}

BaselineCnn::BaselineCnn(const ModelConfig& cfg, std::uint64_t seed) {
  Rng rng(seed, 7);
  trunk = Encoder(cfg, rng);
  head = ClassifierHead(cfg.d_c, cfg.num_classes, rng);
}

ParameterList BaselineCnn::parameters() const {
  ParameterList out;
  trunk.collect("trunk", out);
  for (auto& p : head.parameters()) out.push_back(p);
  return out;
}

}  // namespace clear
