#include "clear/training/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "clear/model/checkpoint.hpp"
#include "clear/numerics/hash.hpp"
#include "clear/training/config_io.hpp"
#include "clear/version.hpp"

namespace clear {

namespace {

std::vector<Index> round_robin(std::span<const int> labels, Rng& rng) {
  int classes = 0;
  for (int y : labels) classes = std::max(classes, y + 1);
  std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(static_cast<Index>(i));
  for (auto& v : by_class) rng.shuffle(v);
  std::vector<Index> out;
  out.reserve(labels.size());
  for (std::size_t r = 0; out.size() < labels.size(); ++r) {
    for (const auto& v : by_class) {
      if (r < v.size()) out.push_back(v[r]);
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<std::vector<Index>> stratified_batches(std::span<const int> labels, Index batch_size, Rng& rng) {
  CLEAR_REQUIRE(batch_size >= 2, "stratified_batches: batch size must be at least 2");
  CLEAR_REQUIRE(!labels.empty(), "stratified_batches: empty dataset");
  const std::vector<Index> order = round_robin(labels, rng);
  const Index n = static_cast<Index>(order.size());
  const Index nb = (n + batch_size - 1) / batch_size;
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(nb));
  Index pos = 0;
  for (Index b = 0; b < nb; ++b) {
    const Index len = n / nb + (b < n % nb ? 1 : 0);
    out[static_cast<std::size_t>(b)].assign(order.begin() + pos, order.begin() + pos + len);
    pos += len;
  }
  return out;
}

std::vector<Index> audit_slice(std::span<const int> labels, Index size, Rng& rng) {
  std::vector<Index> order = round_robin(labels, rng);
  if (static_cast<Index>(order.size()) > size) order.resize(static_cast<std::size_t>(size));
  return order;
}

std::pair<Matrix, Matrix> encode_means(const ClearModel& model, const LabeledImageSet& data, std::span<const Index> rows) {
  std::vector<Index> all;
  if (rows.empty()) {
    all.resize(static_cast<std::size_t>(data.size()));
    for (Index i = 0; i < data.size(); ++i) all[static_cast<std::size_t>(i)] = i;
    rows = all;
  }
  const Index n = static_cast<Index>(rows.size());
  Matrix mu_c(n, model.config().d_c), mu_s(n, model.config().d_s);
  constexpr Index kChunk = 256;
  for (Index start = 0; start < n; start += kChunk) {
    const Index len = std::min(kChunk, n - start);
    const LatentCode code = model.encode(data.batch(rows.subspan(static_cast<std::size_t>(start), static_cast<std::size_t>(len))));
    mu_c.middleRows(start, len) = code.mu_c.value();
    mu_s.middleRows(start, len) = code.mu_s.value();
  }
  return {mu_c, mu_s};
}

Tensor aux_objective(const ClearModel& model, const Matrix& z_c, const Matrix& z_s) {
  const Tensor zc = Tensor::constant(z_c), zs = Tensor::constant(z_s);
  if (model.variant() == Variant::tc) {
    const TcDiscriminator& disc = model.discriminator();
    const std::vector<double> ones(static_cast<std::size_t>(z_c.rows()), 1.0), zeros(ones.size(), 0.0);
    const Tensor joint = bce_with_logits(disc.logits(zc, zs), ones);
    const Tensor fake = bce_with_logits(disc.logits(shuffle_decouple(zc), zs), zeros);
    return scale(joint + fake, 0.5);
  }
  return neg(aux_log_likelihood(zs, zc, model.aux_net()));
}

double discriminator_accuracy(const TcDiscriminator& disc, const Matrix& z_c, const Matrix& z_s) {
  const Matrix pj = disc.probabilities(Tensor::constant(z_c), Tensor::constant(z_s));
  const Matrix pf = disc.probabilities(Tensor::constant(shuffle_decouple(z_c)), Tensor::constant(z_s));
  const double correct = static_cast<double>((pj.array() > 0.5).count() + (pf.array() < 0.5).count());
  return correct / static_cast<double>(pj.rows() + pf.rows());
}

AuxTrainer::AuxTrainer(ClearModel& model, int steps, double lr, double divergence, std::uint64_t seed)
    : model_(model), steps_(steps), lr_(lr), divergence_(divergence), rng_(seed, 3),
      opt_(tensors_of(model.aux_parameters()), AdamOptions{lr}) {
  CLEAR_REQUIRE(model.variant() == Variant::tc || uses_aux_gaussian(model.variant()),
                "adversarial aux training needs the tc, l1out or club-s variant");
  CLEAR_REQUIRE(steps >= 0 && lr > 0, "aux trainer: steps must be >= 0 and lr > 0");
}

void AuxTrainer::reset_optimizer() { opt_ = Adam(tensors_of(model_.aux_parameters()), AdamOptions{lr_}); }

AuxUpdate AuxTrainer::update(const Matrix& z_c, const Matrix& z_s) {
  AuxUpdate out;
  for (int s = 0; s < steps_; ++s) {
    double value = std::numeric_limits<double>::infinity();
    try {
      opt_.zero_grad();
      const Tensor loss = aux_objective(model_, z_c, z_s);
      value = loss.item();
      if (std::isfinite(value) && value <= divergence_) {
        loss.backward();
        opt_.step();
      }
    } catch (const NumericFault&) {
      value = std::numeric_limits<double>::infinity();
    }
    ++out.steps;
    if (!std::isfinite(value) || value > divergence_) {
      model_.reinit_aux(rng_);
      reset_optimizer();
      ++reinits_;
      out.reinitialized = true;
    }
    out.loss = value;
  }
  return out;
}

AuxUpdate train_adversarial_aux(ClearModel& model, const Matrix& z_c, const Matrix& z_s, int steps, double lr,
                                double divergence, std::uint64_t seed) {
  AuxTrainer trainer(model, steps, lr, divergence, seed);
  return trainer.update(z_c, z_s);
}

std::string TrainHistory::to_csv() const {
  std::ostringstream os;
  os << "step,recon,kl_c,kl_s,snn_c,style_term,total,gmig\n";
  std::size_t a = 0;
  for (const StepRecord& r : steps) {
    const auto& p = r.parts;
    os << r.step << ',' << fmt(p.recon) << ',' << fmt(p.kl_c) << ',' << fmt(p.kl_s) << ',' << fmt(p.snn_c) << ','
       << fmt(p.ps_or_mi_s) << ',' << fmt(p.total) << ',';
    while (a < audits.size() && audits[a].step < r.step) ++a;
    if (a < audits.size() && audits[a].step == r.step) os << fmt(audits[a].report.gmig);
    os << '\n';
  }
  return os.str();
}

std::string TrainHistory::hash() const {
  Fnv1a h;
  h.feed(std::to_string(seed));
  h.feed(config_json);
  h.feed(to_csv());
  for (const AuditRecord& a : audits) h.feed(a.report.to_json());
  h.feed(std::to_string(aux_reinits));
  return h.hex();
}

void TrainHistory::validate() const {
  for (std::size_t i = 1; i < steps.size(); ++i) {
    CLEAR_REQUIRE(steps[i].step > steps[i - 1].step, "history: steps must be strictly increasing");
  }
  for (const AuditRecord& a : audits) {
    const bool found = std::any_of(steps.begin(), steps.end(), [&](const StepRecord& r) { return r.step == a.step; });
    CLEAR_REQUIRE(found, "history: audit at step " + std::to_string(a.step) + " has no step record");
  }
}

double TrainHistory::final_gmig() const {
  CLEAR_REQUIRE(!audits.empty(), "history: no gMIG audit recorded");
  return audits.back().report.gmig;
}

TrainResult train_clear(const LabeledImageSet& data, const ClearConfig& cfg, const TrainOptions& opt) {
  cfg.validate();
  data.validate();
  CLEAR_REQUIRE(data.size() > 0, "train_clear: empty dataset");
  CLEAR_REQUIRE(data.num_content >= 2, "train_clear: stratified batching needs at least two classes");
  CLEAR_REQUIRE(opt.epochs >= 0 && opt.lr > 0, "train_clear: epochs must be >= 0 and lr > 0");
  CLEAR_REQUIRE(data.dims.height == data.dims.width, "train_clear: square images required");

  ModelConfig mc;
  mc.channels = data.dims.channels;
  mc.image_size = data.dims.height;
  mc.d_c = cfg.d_c;
  mc.d_s = cfg.d_s;
  mc.num_classes = data.num_content;
  mc.validate();

  TrainResult out{ClearModel(mc, cfg.variant, opt.seed), {}, {}};
  ClearModel& model = out.model;
  TrainHistory& hist = out.history;
  hist.seed = opt.seed;
  hist.config_json = checkpoint_config(mc, cfg, opt.seed);

  const Rng root(opt.seed);
  Rng batch_rng = root.split(1), noise_rng = root.split(2), estimate_rng = root.split(4), audit_rng = root.split(5);
  const std::vector<Index> audit = audit_slice(data.content, opt.audit_size, audit_rng);
  std::vector<int> audit_labels;
  for (Index i : audit) audit_labels.push_back(data.content[static_cast<std::size_t>(i)]);

  Adam vae_opt(tensors_of(model.vae_parameters()), AdamOptions{opt.lr});
  const bool adversarial = cfg.variant == Variant::tc || uses_aux_gaussian(cfg.variant);
  std::optional<AuxTrainer> aux;
  if (adversarial) aux.emplace(model, opt.aux_steps, opt.aux_lr_scale * opt.lr, opt.aux_divergence, opt.seed);

  if (!opt.checkpoint_dir.empty()) std::filesystem::create_directories(opt.checkpoint_dir);
  auto save = [&](const std::string& name) {
    const auto path = opt.checkpoint_dir / name;
    save_checkpoint(path, hist.config_json, model.parameters());
    out.last_checkpoint = path;
  };

  std::int64_t step = 0;
  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      for (const auto& rows : stratified_batches(data.content, opt.batch_size, batch_rng)) {
        ++step;
        const Tensor x = data.batch(rows);
        const std::vector<int> y = data.content_of(rows);
        const ForwardPass fp = model.forward(x, noise_rng);
        StepRecord rec{step, epoch, {}, 0};
        Tensor style;
        if (adversarial) {
          const AuxUpdate u = aux->update(fp.z.z_c.value(), fp.z.z_s.value());
          rec.aux_steps = u.steps;
          switch (cfg.variant) {
            case Variant::tc: style = tc_estimate_loss(fp.z.z_c, fp.z.z_s, model.discriminator()); break;
            case Variant::l1out: style = l1out_ub_loss(fp.z.z_s, fp.z.z_c, model.aux_net()); break;
            default: style = club_s_loss(fp.z.z_s, fp.z.z_c, model.aux_net(), estimate_rng);
          }
        }
        const Objective obj = clear_objective(x, fp, y, cfg, style);
        check_finite(Matrix::Constant(1, 1, obj.parts.total), "total_loss");
        vae_opt.zero_grad();
        obj.total.backward();
        vae_opt.step();
        rec.parts = obj.parts;
        hist.steps.push_back(rec);
        if (opt.after_step) opt.after_step(step, model);
      }
    } catch (const NumericFault& e) {
      hist.aux_reinits = aux ? aux->reinitializations() : 0;
      throw TrainingAborted(e, out.last_checkpoint);
    }
    const auto [mu_c, mu_s] = encode_means(model, data, audit);
    hist.audits.push_back({step, epoch, gmig(mu_c, mu_s, audit_labels)});
    hist.epoch_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (opt.log) {
      const auto& p = hist.steps.back().parts;
      char line[200];
      std::snprintf(line, sizeof(line), "epoch %d step %lld total %.3f recon %.3f snn %.4f style %.4f gmig %.4f (%.1fs)",
                    epoch, static_cast<long long>(step), p.total, p.recon, p.snn_c, p.ps_or_mi_s,
                    hist.audits.back().report.gmig, hist.epoch_seconds.back());
      opt.log(line);
    }
    if (!opt.checkpoint_dir.empty() && opt.checkpoint_every > 0 && epoch % opt.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%03d.ckpt", epoch);
      save(name);
    }
  }
  hist.aux_reinits = aux ? aux->reinitializations() : 0;
  if (!opt.checkpoint_dir.empty()) save("model.ckpt");
  return out;
}

nlohmann::json run_manifest(const TrainHistory& history, const TrainOptions& opt, const std::string& dataset_hash) {
  nlohmann::json j;
  j["seed"] = history.seed;
  j["config"] = nlohmann::json::parse(history.config_json);
  j["dataset_hash"] = dataset_hash;
  j["code_version"] = kVersion;
  j["code_version_hash"] = fnv1a_hex(kVersion);
  j["epochs"] = opt.epochs;
  j["batch_size"] = opt.batch_size;
  j["lr"] = opt.lr;
  j["aux_steps"] = opt.aux_steps;
  j["aux_lr"] = opt.aux_lr_scale * opt.lr;
  j["aux_divergence"] = opt.aux_divergence;
  j["aux_reinits"] = history.aux_reinits;
  j["audit_size"] = opt.audit_size;
  j["history_hash"] = history.hash();
  j["num_steps"] = history.steps.size();
  j["final_gmig"] = history.audits.empty() ? nlohmann::json() : nlohmann::json(history.final_gmig());
  j["epoch_seconds"] = history.epoch_seconds;
  return j;
}

}  // namespace clear
