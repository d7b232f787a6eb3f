#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "clear/data/dataset.hpp"
#include "clear/errors.hpp"
#include "clear/losses/losses.hpp"
#include "clear/mi/mi.hpp"
#include "clear/model/networks.hpp"
#include "clear/numerics/optim.hpp"

#include "json.hpp"

namespace clear {

struct TrainOptions {
  int epochs = 30;
  Index batch_size = 128;
  double lr = 1e-3;
  int aux_steps = 5;          // r aux updates before every main step
  double aux_lr_scale = 5.0;  // aux lr = scale * lr
  double aux_divergence = 1e6;
  Index audit_size = 1024;
  int checkpoint_every = 1;  // epochs; 0 keeps only the final checkpoint
  std::filesystem::path checkpoint_dir;  // empty: no checkpoints
  std::uint64_t seed = 0;
  std::function<void(const std::string&)> log;
  /// Called after every optimizer step (monitoring, fault injection in tests).
  std::function<void(std::int64_t step, ClearModel& model)> after_step;
};

struct StepRecord {
  std::int64_t step = 0;
  int epoch = 0;
  LossBreakdown parts;
  int aux_steps = 0;
};

struct AuditRecord {
  std::int64_t step = 0;
  int epoch = 0;
  GmigReport report;
};

struct TrainHistory {
  std::uint64_t seed = 0;
  std::string config_json;
  std::vector<StepRecord> steps;
  std::vector<AuditRecord> audits;
  std::vector<double> epoch_seconds;
  int aux_reinits = 0;

  /// step,recon,kl_c,kl_s,snn_c,style_term,total,gmig; gmig is blank off audit steps.
  std::string to_csv() const;
  /// Hash of config, CSV and audit reports. Wall-clock times are excluded.
  std::string hash() const;
  /// Steps strictly increasing and every audit step present among them.
  void validate() const;
  double final_gmig() const;
};

/// Thrown when a NaN/Inf stops training; names the most recent checkpoint.
class TrainingAborted : public NumericFault {
 public:
  TrainingAborted(const NumericFault& cause, std::filesystem::path last_good)
      : NumericFault(cause.op(), std::string(cause.what()) + "; last good checkpoint: " +
                                     (last_good.empty() ? std::string("<none>") : last_good.string())),
        last_good_(std::move(last_good)) {}

  const std::filesystem::path& last_good() const noexcept { return last_good_; }

 private:
  std::filesystem::path last_good_;
};

/// Each epoch: classes shuffled independently, interleaved round-robin, then cut
/// into ceil(n / batch_size) contiguous batches whose sizes differ by at most one.
std::vector<std::vector<Index>> stratified_batches(std::span<const int> labels, Index batch_size, Rng& rng);

/// Up to `size` rows drawn round-robin over shuffled classes.
std::vector<Index> audit_slice(std::span<const int> labels, Index size, Rng& rng);

/// mu_c and mu_s for every row, encoded in chunks without building a graph.
std::pair<Matrix, Matrix> encode_means(const ClearModel& model, const LabeledImageSet& data,
                                       std::span<const Index> rows = {});

/// Loss minimized by the aux network: -mean log q(z_s | z_c) for the Gaussian
/// variants, joint-versus-shuffled BCE for tc.
Tensor aux_objective(const ClearModel& model, const Matrix& z_c, const Matrix& z_s);

/// Fraction of joint rows scored > 0.5 plus shuffled rows scored < 0.5, over both sets.
double discriminator_accuracy(const TcDiscriminator& disc, const Matrix& z_c, const Matrix& z_s);

struct AuxUpdate {
  double loss = 0;  // after the last step
  int steps = 0;
  bool reinitialized = false;
};

/// Owns the aux optimizer for one model. Reinitializes the aux weights (and
/// its Adam state) when the aux loss exceeds the divergence threshold or is not finite.
class AuxTrainer {
 public:
  AuxTrainer(ClearModel& model, int steps, double lr, double divergence, std::uint64_t seed);

  AuxUpdate update(const Matrix& z_c, const Matrix& z_s);
  int reinitializations() const { return reinits_; }

 private:
  void reset_optimizer();

  ClearModel& model_;
  int steps_;
  double lr_;
  double divergence_;
  Rng rng_;
  Adam opt_;
  int reinits_ = 0;
};

/// Single-call form: `steps` Adam updates of the model's aux network on fixed latents.
AuxUpdate train_adversarial_aux(ClearModel& model, const Matrix& z_c, const Matrix& z_s, int steps = 5,
                                double lr = 5e-3, double divergence = 1e6, std::uint64_t seed = 0);

struct TrainResult {
  ClearModel model;
  TrainHistory history;
  std::filesystem::path last_checkpoint;
};

/// Minibatch Adam on clear_objective; aux variants interleave AuxTrainer updates.
/// A gMIG audit on mu runs after every epoch. Deterministic per options.seed.
TrainResult train_clear(const LabeledImageSet& data, const ClearConfig& cfg, const TrainOptions& opt);

/// seed, config, dataset hash, code version hash, aux schedule and history hash.
nlohmann::json run_manifest(const TrainHistory& history, const TrainOptions& opt, const std::string& dataset_hash);

}  // namespace clear
