#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "clear/losses/config.hpp"
#include "clear/model/layers.hpp"

namespace clear {

inline constexpr double kLogvarMin = -10.0;
inline constexpr double kLogvarMax = 10.0;
inline constexpr Index kAuxWidth = 64;

struct ModelConfig {
  Index channels = 1;
  Index image_size = 28;  // 28 uses three conv blocks, 16 uses two
  Index d_c = 8;
  Index d_s = 8;
  Index num_classes = 10;

  Index d_z() const { return d_c + d_s; }
  void validate() const;
};

/// Posterior parameters for the content and style partitions.
struct LatentCode {
  Tensor mu_c, logvar_c, mu_s, logvar_s;

  Index size() const { return mu_c.rows(); }
  LatentCode detach() const;
};

struct Latents {
  Tensor z_c, z_s;
};

/// Shared conv trunk with two affine heads (mean and log-variance over d_z).
struct Encoder {
  ModelConfig config;
  std::vector<Conv> convs;
  Linear mu_head;
  Linear logvar_head;

  Encoder() = default;
  Encoder(const ModelConfig& cfg, Rng& rng);

  /// Flattened trunk activations, n x features.
  Tensor features(const Tensor& x) const;
  LatentCode operator()(const Tensor& x) const;
  void collect(const std::string& prefix, ParameterList& out) const;
};

/// Linear projection to the smallest feature map, then mirrored transposed convs and a sigmoid.
struct Decoder {
  ModelConfig config;
  Linear fc;
  std::vector<ConvTranspose> deconvs;
  Index base_channels = 0;
  Index base_side = 0;

  Decoder() = default;
  Decoder(const ModelConfig& cfg, Rng& rng);

  Tensor operator()(const Tensor& z_c, const Tensor& z_s) const;
  void collect(const std::string& prefix, ParameterList& out) const;
};

/// z = mu + exp(logvar / 2) * eps with eps ~ N(0, I) drawn from `rng`.
Latents reparameterize(const LatentCode& code, Rng& rng);
/// Same with caller-supplied noise (test hook); eps matrices must match the mean shapes.
Latents reparameterize(const LatentCode& code, const Matrix& eps_c, const Matrix& eps_s);

/// q(z_s | z_c) as a diagonal Gaussian; mean and log-variance from separate two-layer MLPs.
struct AuxGaussianNet {
  Mlp2 mean;
  Mlp2 logvar;

  AuxGaussianNet() = default;
  AuxGaussianNet(Index d_c, Index d_s, Rng& rng);

  std::pair<Tensor, Tensor> operator()(const Tensor& z_c) const;
  void collect(const std::string& prefix, ParameterList& out) const;
};

/// Joint-versus-shuffled classifier over concatenated latents.
struct TcDiscriminator {
  Mlp2 net;

  TcDiscriminator() = default;
  TcDiscriminator(Index d_c, Index d_s, Rng& rng);

  /// n x 1 logits of "this pair is a joint sample".
  Tensor logits(const Tensor& z_c, const Tensor& z_s) const;
  /// sigmoid(logits); NumericFault if any value leaves the open interval (0, 1).
  Matrix probabilities(const Tensor& z_c, const Tensor& z_s) const;
  void collect(const std::string& prefix, ParameterList& out) const;
};

struct ForwardPass {
  LatentCode code;
  Latents z;
  Tensor x_hat;
};

/// Encoder, decoder and the variant's auxiliary network.
class ClearModel {
 public:
  ClearModel(const ModelConfig& cfg, Variant variant, std::uint64_t seed);

  LatentCode encode(const Tensor& x) const { return encoder_(x); }
  Tensor decode(const Tensor& z_c, const Tensor& z_s) const { return decoder_(z_c, z_s); }
  ForwardPass forward(const Tensor& x, Rng& rng) const;

  const ModelConfig& config() const { return config_; }
  Variant variant() const { return variant_; }
  const Encoder& encoder() const { return encoder_; }

  /// Throws ContractViolation unless the variant is l1out or club-s.
  const AuxGaussianNet& aux_net() const;
  /// Throws ContractViolation unless the variant is tc.
  const TcDiscriminator& discriminator() const;
  /// Fresh auxiliary weights drawn from `rng`.
  void reinit_aux(Rng& rng);

  ParameterList encoder_parameters() const;
  ParameterList vae_parameters() const;
  ParameterList aux_parameters() const;
  /// Everything, for checkpoints.
  ParameterList parameters() const;

 private:
  ModelConfig config_;
  Variant variant_;
  Encoder encoder_;
  Decoder decoder_;
  std::optional<AuxGaussianNet> aux_;
  std::optional<TcDiscriminator> disc_;
};

/// Two-layer head on mu_c. `last = zero` gives uniform logits at init.
struct ClassifierHead {
  Mlp2 net;

  ClassifierHead() = default;
  ClassifierHead(Index d_c, Index num_classes, Rng& rng, Init last = Init::he);

  Tensor operator()(const Tensor& mu_c) const { return net(mu_c); }
  ParameterList parameters() const;
};

/// Same trunk and head as encoder + classifier, trained end-to-end on images.
struct BaselineCnn {
  Encoder trunk;
  ClassifierHead head;

  BaselineCnn(const ModelConfig& cfg, std::uint64_t seed);

  Tensor logits(const Tensor& x) const { return head(trunk(x).mu_c); }
  ParameterList parameters() const;
};

}  // namespace clear
