#include "clear/cli/app.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "clear/cli/bench.hpp"
#include "clear/cli/render.hpp"
#include "clear/data/split.hpp"
#include "clear/errors.hpp"
#include "clear/io/dataset_io.hpp"
#include "clear/io/idx.hpp"
#include "clear/numerics/hash.hpp"
#include "clear/training/classifier.hpp"
#include "clear/training/config_io.hpp"
#include "clear/training/simulation.hpp"
#include "clear/training/train.hpp"
#include "clear/version.hpp"

namespace clear {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path data_root() {
  const char* env = std::getenv("CLEAR_DATA_DIR");
  return env && *env ? fs::path(env) : fs::path("data");
}

fs::path resolve_data_path(const fs::path& p) { return p.is_absolute() ? p : data_root() / p; }

namespace {

std::string file_hash(const fs::path& p) {
  const auto bytes = read_file_bytes(p);
  Fnv1a h;
  h.feed(bytes.data(), bytes.size());
  return h.hex();
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

std::uint64_t draw_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) | rd();
}

fs::path dir_of(const fs::path& file) { return file.has_parent_path() ? file.parent_path() : fs::path("."); }

// One manifest entry under construction; written even when the command fails.
struct Run {
  json entry;
  fs::path dir;

  void output(const fs::path& p) { entry["outputs"].push_back(p.string()); }
  void input(const std::string& key, const fs::path& p, const std::string& hash) {
    entry["inputs"][key] = {{"path", p.string()}, {"hash", hash}};
  }
};

struct ConfigFlags {
  std::string variant = "ps";
  std::string metric = "cosine";
  double beta = 0.125, alpha = 100, alpha1 = 100, alpha2 = 100, tau = 0.3;
  Index dz = 16;
  CLI::Option *o_beta = nullptr, *o_alpha = nullptr, *o_alpha1 = nullptr, *o_alpha2 = nullptr, *o_tau = nullptr;

  void add(CLI::App* sub, bool with_variant) {
    if (with_variant) sub->add_option("--variant", variant, "ps, tc, l1out, club-s or none")->capture_default_str();
    sub->add_option("--metric", metric, "cosine, l2, jeffrey or mahalanobis")->capture_default_str();
    o_beta = sub->add_option("--beta", beta, "KL weight")->capture_default_str();
    o_alpha = sub->add_option("--alpha", alpha, "sets both contrastive weights")->capture_default_str();
    o_alpha1 = sub->add_option("--alpha1", alpha1, "content contrastive weight (overrides --alpha)");
    o_alpha2 = sub->add_option("--alpha2", alpha2, "style term weight (overrides --alpha)");
    o_tau = sub->add_option("--tau", tau, "temperature (metric default when omitted)");
    sub->add_option("--dz", dz, "latent size, split evenly between content and style")->capture_default_str();
  }

  ClearConfig resolve() const {
    ClearConfig cfg = ClearConfig::defaults_for(parse_metric(metric));
    cfg.variant = parse_variant(variant);
    if (o_beta->count()) cfg.beta = beta;
    if (o_alpha->count()) cfg.alpha1 = cfg.alpha2 = alpha;
    if (o_alpha1->count()) cfg.alpha1 = alpha1;
    if (o_alpha2->count()) cfg.alpha2 = alpha2;
    if (o_tau->count()) cfg.tau = tau;
    CLEAR_REQUIRE(dz >= 2 && dz % 2 == 0, "--dz must be an even number >= 2");
    cfg.d_c = cfg.d_s = dz / 2;
    cfg.validate();
    return cfg;
  }
};

struct GenFlags {
  int content = 10, styles = 6, per_cell = 50;
  Index size = 28;
  std::string family = "corruption";
  std::uint64_t seed = 0;

  void add(CLI::App* sub) {
    sub->add_option("--content", content, "number of content classes")->capture_default_str();
    sub->add_option("--styles", styles, "number of styles")->capture_default_str();
    sub->add_option("--per-cell", per_cell, "images per (content, style) cell")->capture_default_str();
    sub->add_option("--size", size, "image side, 16 or 28")->capture_default_str();
    sub->add_option("--family", family, "corruption or color")->capture_default_str();
    sub->add_option("--data-seed", seed, "generator seed")->capture_default_str();
  }

  StyleFamily parsed_family() const {
    if (family == "corruption") return StyleFamily::corruption;
    if (family == "color") return StyleFamily::color;
    throw ContractViolation("unknown style family '" + family + "' (expected corruption or color)");
  }

  LabeledImageSet generate() const {
    CLEAR_REQUIRE(size == 16 || size == 28, "--size must be 16 or 28");
    return gen_styled_shapes(content, styles, per_cell, size, seed, parsed_family());
  }

  json to_json() const {
    return {{"content", content}, {"styles", styles}, {"per_cell", per_cell},
            {"size", size},       {"family", family}, {"seed", seed}};
  }
};

// Loads a dataset directory; with `gen` set, a missing directory is generated first.
LabeledImageSet open_dataset(const std::string& name, Run& run, std::ostream& err, const GenFlags* gen = nullptr) {
  const fs::path dir = resolve_data_path(name);
  if (!fs::exists(dir / "images.idx")) {
    if (!gen) throw ContractViolation("no dataset at " + dir.string() + " (run gen-data first)");
    err << "dataset " << dir.string() << " not found; generating it\n";
    const LabeledImageSet set = gen->generate();
    save_dataset(set, dir);
    run.entry["generated_dataset"] = gen->to_json();
  }
  LabeledImageSet set = load_dataset(dir);
  run.input("dataset", dir, set.hash());
  return set;
}

LoadedModel open_model(const std::string& path, Run& run) {
  CLEAR_REQUIRE(fs::exists(path), "checkpoint " + path + " does not exist");
  run.input("checkpoint", path, file_hash(path));
  return load_model(path);
}

void check_compatible(const ClearModel& model, const LabeledImageSet& data) {
  const ModelConfig& mc = model.config();
  CLEAR_REQUIRE(mc.channels == data.dims.channels && mc.image_size == data.dims.height,
                "checkpoint architecture does not match the dataset image shape");
}

void save_png(const Picture& pic, const fs::path& out, Run& run) {
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_png(out, pic.pixels, pic.dims);
  run.output(out);
}

// ---------------------------------------------------------------------------

struct SimulateFlags {
  std::string direction;
  std::uint64_t seed = 0;
  int steps_per_level = 100;
  Index n = 1500;
  int k = 3;
  std::string metric = "l2";
  double tau = 1.0;
  std::string out = "runs/simulate";
};

int cmd_simulate(const SimulateFlags& f, Run& run, std::ostream& out) {
  run.dir = f.out;
  SimulationOptions opt;
  opt.direction = parse_direction(f.direction);
  opt.seed = f.seed;
  opt.steps_per_level = f.steps_per_level;
  opt.mixture.n = f.n;
  opt.k = f.k;
  opt.metric = parse_metric(f.metric);
  opt.tau = f.tau;
  run.entry["seeds"] = {{"seed", f.seed}};
  const SimulationTrace trace = run_mi_simulation(opt);

  const fs::path dir = f.out;
  write_text(dir / "trace.csv", trace.to_csv());
  run.output(dir / "trace.csv");
  std::ostringstream plot;
  plot << "step,mi,loss\n";
  char buf[96];
  for (const auto& r : trace.rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", r.step, r.mi, r.loss);
    plot << buf;
  }
  write_text(dir / "plot.csv", plot.str());
  run.output(dir / "plot.csv");
  const double rho = trace.trend();
  run.entry["result"] = {{"rows", trace.rows.size()}, {"spearman_step_mi", rho}};
  out << "direction " << f.direction << ": " << trace.rows.size() << " rows, spearman(step, mi) = " << rho << "\n";
  return kExitOk;
}

struct GenDataFlags {
  GenFlags gen;
  std::string out = "styled-shapes";
  std::string mnist_images, mnist_labels;
  bool png = false;
};

int cmd_gen_data(const GenDataFlags& f, Run& run, std::ostream& out) {
  const fs::path dir = resolve_data_path(f.out);
  run.dir = dir;
  LabeledImageSet set;
  if (!f.mnist_images.empty()) {
    CLEAR_REQUIRE(!f.mnist_labels.empty(), "--mnist-images needs --mnist-labels");
    const Tensor imgs = load_idx_images(f.mnist_images);
    const std::vector<int> labels = load_idx_labels(f.mnist_labels);
    CLEAR_REQUIRE(imgs.shape().size() == 3, "--mnist-images must hold single-channel images");
    const Index side = imgs.shape()[1];
    const Matrix& gray = imgs.value();  // n x (side * side)
    set = style_images(gray, side, labels, f.gen.styles, f.gen.seed, f.gen.parsed_family());
    run.input("mnist_images", f.mnist_images, file_hash(f.mnist_images));
    run.input("mnist_labels", f.mnist_labels, file_hash(f.mnist_labels));
  } else {
    set = f.gen.generate();
  }
  save_dataset(set, dir);
  // Pixels are quantized on disk; hash what later commands will load.
  set = load_dataset(dir);
  for (const char* name : {"images.idx", "content.idx", "style.idx"}) run.output(dir / name);
  if (f.png) {
    export_png_dir(set, dir / "png");
    run.output(dir / "png");
  }
  run.entry["resolved"] = f.gen.to_json();
  run.entry["seeds"] = {{"data_seed", f.gen.seed}};
  run.entry["result"] = {{"size", set.size()}, {"dataset_hash", set.hash()}};
  out << "wrote " << set.size() << " images (" << set.num_content << " content x " << set.num_style
      << " styles) to " << dir.string() << ", hash " << set.hash() << "\n";
  return kExitOk;
}

struct TrainFlags {
  ConfigFlags cfg;
  GenFlags gen;
  std::string data = "styled-shapes";
  std::string out = "runs/train";
  std::uint64_t seed = 0;
  CLI::Option* o_seed = nullptr;
  TrainOptions opt;
};

int cmd_train(TrainFlags& f, Run& run, std::ostream& out, std::ostream& err) {
  run.dir = f.out;
  const ClearConfig cfg = f.cfg.resolve();
  const LabeledImageSet data = open_dataset(f.data, run, err, &f.gen);
  TrainOptions opt = f.opt;
  const bool drawn = f.o_seed->count() == 0;
  opt.seed = drawn ? draw_seed() : f.seed;
  opt.checkpoint_dir = f.out;
  opt.log = [&err](const std::string& line) { err << line << "\n"; };
  run.entry["seeds"] = {{"seed", opt.seed}, {"seed_source", drawn ? "drawn" : "flag"}};
  run.entry["resolved"] = {{"clear", to_json(cfg)}, {"train", {{"epochs", opt.epochs},
                                                                {"batch_size", opt.batch_size},
                                                                {"lr", opt.lr},
                                                                {"aux_steps", opt.aux_steps},
                                                                {"aux_lr_scale", opt.aux_lr_scale},
                                                                {"audit_size", opt.audit_size},
                                                                {"checkpoint_every", opt.checkpoint_every}}}};
  if (drawn) err << "no --seed given; drew seed " << opt.seed << "\n";

  const TrainResult result = train_clear(data, cfg, opt);
  const fs::path dir = f.out;
  write_text(dir / "history.csv", result.history.to_csv());
  write_text(dir / "run.json", run_manifest(result.history, opt, data.hash()).dump(2) + "\n");
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".ckpt") run.output(e.path());
  }
  run.output(dir / "history.csv");
  run.output(dir / "run.json");
  run.entry["result"] = {{"history_hash", result.history.hash()},
                         {"final_gmig", result.history.final_gmig()},
                         {"checkpoint", result.last_checkpoint.string()}};
  out << "trained " << to_string(cfg.variant) << " for " << opt.epochs << " epochs (seed " << opt.seed
      << "); final gmig " << result.history.final_gmig() << "; history hash " << result.history.hash() << "\n";
  return kExitOk;
}

struct GmigFlags {
  std::string checkpoint;
  std::string data = "styled-shapes";
  Index audit_size = 1024;
  std::uint64_t seed = 0;
  std::string out = "runs/gmig/gmig.json";
  std::string projection;
  std::uint64_t projection_seed = 0;
};

int cmd_gmig(const GmigFlags& f, Run& run, std::ostream& out, std::ostream& err) {
  run.dir = dir_of(f.out);
  const LoadedModel lm = open_model(f.checkpoint, run);
  const LabeledImageSet data = open_dataset(f.data, run, err);
  check_compatible(lm.model, data);
  Rng rng(f.seed);
  const std::vector<Index> rows = audit_slice(data.content, f.audit_size, rng);
  const auto [mu_c, mu_s] = encode_means(lm.model, data, rows);
  const GmigReport report = gmig(mu_c, mu_s, data.content_of(rows));
  write_text(f.out, report.to_json() + "\n");
  run.output(f.out);
  run.entry["seeds"] = {{"audit_seed", f.seed}};
  run.entry["result"] = {{"gmig", report.gmig}};

  if (!f.projection.empty()) {
    // Fixed Gaussian projection of each partition to two dimensions.
    Rng prng(f.projection_seed);
    const Matrix pc = seeded_normal(prng, mu_c.cols(), 2) / std::sqrt(static_cast<double>(mu_c.cols()));
    const Matrix ps = seeded_normal(prng, mu_s.cols(), 2) / std::sqrt(static_cast<double>(mu_s.cols()));
    const Matrix qc = mu_c * pc, qs = mu_s * ps;
    std::ostringstream csv;
    csv << "row,content,style,c_x,c_y,s_x,s_y\n";
    char buf[160];
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Index r = rows[i];
      std::snprintf(buf, sizeof(buf), "%lld,%d,%d,%.17g,%.17g,%.17g,%.17g\n", static_cast<long long>(r),
                    data.content[r], data.style[r], qc(i, 0), qc(i, 1), qs(i, 0), qs(i, 1));
      csv << buf;
    }
    write_text(f.projection, csv.str());
    run.output(f.projection);
    run.entry["seeds"]["projection_seed"] = f.projection_seed;
  }
  out << "gmig " << report.gmig << " (mean mi content " << report.mean_c() << ", style " << report.mean_s()
      << ", n " << report.n << ")\n";
  return kExitOk;
}

struct SwapFlags {
  std::string checkpoint;
  std::string data = "styled-shapes";
  std::vector<Index> indices;
  std::string out = "runs/swap/swap.png";
};

int cmd_swap(const SwapFlags& f, Run& run, std::ostream& out, std::ostream& err) {
  run.dir = dir_of(f.out);
  const LoadedModel lm = open_model(f.checkpoint, run);
  const LabeledImageSet data = open_dataset(f.data, run, err);
  check_compatible(lm.model, data);
  const Matrix tiles = swap_tiles(lm.model, data, f.indices);
  const Index g = static_cast<Index>(f.indices.size());
  const Picture pic = tile_grid(tiles, g, g, data.dims);
  save_png(pic, f.out, run);
  run.entry["resolved"] = {{"indices", f.indices}};
  out << "wrote " << g << "x" << g << " swap grid (" << pic.dims.height << "x" << pic.dims.width << ") to " << f.out
      << "\n";
  return kExitOk;
}

struct InterpolateFlags {
  std::string checkpoint;
  std::string data = "styled-shapes";
  Index src = 0, tgt = 1;
  std::string axis = "style";
  int steps = 8;
  std::string out = "runs/interpolate/strip.png";
};

int cmd_interpolate(const InterpolateFlags& f, Run& run, std::ostream& out, std::ostream& err) {
  run.dir = dir_of(f.out);
  const Axis axis = parse_axis(f.axis);
  const LoadedModel lm = open_model(f.checkpoint, run);
  const LabeledImageSet data = open_dataset(f.data, run, err);
  check_compatible(lm.model, data);
  const Matrix tiles = interpolation_tiles(lm.model, data, f.src, f.tgt, axis, f.steps);
  const Picture pic = tile_grid(tiles, 1, f.steps, data.dims);
  save_png(pic, f.out, run);
  run.entry["resolved"] = {{"src", f.src}, {"tgt", f.tgt}, {"axis", f.axis}, {"steps", f.steps}};
  out << "wrote " << f.steps << "-tile " << f.axis << " strip to " << f.out << "\n";
  return kExitOk;
}

struct OodFlags {
  ConfigFlags cfg;
  std::string data = "styled-shapes";
  int k = 1;
  int n_splits = 5;
  std::vector<std::string> variants{"ps"};
  std::uint64_t seed = 0;
  int epochs = 30, baseline_epochs = 30, head_epochs = 100;
  Index batch_size = 128;
  double lr = 1e-3;
  std::string out = "runs/ood-bench";
};

int cmd_ood_bench(const OodFlags& f, Run& run, std::ostream& out, std::ostream& err) {
  run.dir = f.out;
  const LabeledImageSet data = open_dataset(f.data, run, err);
  OodOptions opt;
  opt.k = f.k;
  opt.n_splits = f.n_splits;
  opt.variants.clear();
  for (const auto& v : f.variants) opt.variants.push_back(parse_variant(v));
  opt.clear = f.cfg.resolve();
  opt.train.epochs = f.epochs;
  opt.train.batch_size = f.batch_size;
  opt.train.lr = f.lr;
  opt.baseline.epochs = f.baseline_epochs;
  opt.baseline.batch_size = f.batch_size;
  opt.baseline.lr = f.lr;
  opt.head.epochs = f.head_epochs;
  opt.seed = f.seed;
  opt.log = [&err](const std::string& line) { err << line << "\n"; };
  run.entry["seeds"] = {{"seed", f.seed}};
  run.entry["resolved"] = {{"clear", to_json(opt.clear)}, {"k", f.k}, {"n_splits", f.n_splits},
                           {"variants", f.variants},       {"epochs", f.epochs},
                           {"baseline_epochs", f.baseline_epochs}, {"head_epochs", f.head_epochs}};

  const BenchmarkReport report = run_ood_bench(data, opt);
  const fs::path dir = f.out;
  write_text(dir / "report.json", report.to_json().dump(2) + "\n");
  write_text(dir / "report.csv", report.to_csv());
  run.output(dir / "report.json");
  run.output(dir / "report.csv");
  if (report.splits.empty()) {
    err << "error: every split was infeasible\n";
    return kExitFailure;
  }
  for (const auto& v : report.variants) {
    run.entry["result"][v] = {{"median_delta_top1", report.median_delta(v).top1}};
    out << v << ": median top1 " << report.median_absolute(v).top1 << " (delta vs baseline "
        << report.median_delta(v).top1 << ")\n";
  }
  out << "baseline: median top1 " << report.median_baseline().top1 << " over " << report.splits.size()
      << " splits\n";
  return kExitOk;
}

struct ReportFlags {
  std::string input;
  std::string out;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

int cmd_report(const ReportFlags& f, Run& run, std::ostream& out, std::ostream& err) {
  CLEAR_REQUIRE(fs::exists(f.input), "report input " + f.input + " does not exist");
  const fs::path target = f.out.empty() ? dir_of(f.input) / "summary.md" : fs::path(f.out);
  run.dir = dir_of(target);
  run.input("report", f.input, file_hash(f.input));
  std::ifstream in(f.input);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ContractViolation(f.input + ": not JSON: " + e.what());
  }
  std::ostringstream md;
  int rc = kExitOk;
  if (j.contains("splits")) {
    const BenchmarkReport r = BenchmarkReport::from_json(j);
    md << "# OOD benchmark (k = " << r.k << ", " << r.num_content << " content x " << r.num_style << " styles)\n\n";
    md << "| split | model | top1 | auroc | ap | delta top1 | delta auroc | delta ap |\n";
    md << "|---|---|---|---|---|---|---|---|\n";
    for (const auto& s : r.splits) {
      md << "| " << s.index << " | baseline | " << fmt(s.baseline.top1) << " | " << fmt(s.baseline.auroc) << " | "
         << fmt(s.baseline.ap) << " | | | |\n";
      for (const auto& [name, v] : s.variants) {
        md << "| " << s.index << " | " << name << " | " << fmt(v.absolute.top1) << " | " << fmt(v.absolute.auroc)
           << " | " << fmt(v.absolute.ap) << " | " << fmt(v.delta.top1) << " | " << fmt(v.delta.auroc) << " | "
           << fmt(v.delta.ap) << " |\n";
      }
    }
    if (!r.splits.empty()) {
      const auto b = r.median_baseline();
      md << "| median | baseline | " << fmt(b.top1) << " | " << fmt(b.auroc) << " | " << fmt(b.ap) << " | | | |\n";
      for (const auto& v : r.variants) {
        const auto a = r.median_absolute(v), d = r.median_delta(v);
        md << "| median | " << v << " | " << fmt(a.top1) << " | " << fmt(a.auroc) << " | " << fmt(a.ap) << " | "
           << fmt(d.top1) << " | " << fmt(d.auroc) << " | " << fmt(d.ap) << " |\n";
      }
    }
    for (const auto& s : r.skipped) md << "\nskipped: " << s << "\n";
    const double drift = r.max_delta_error();
    run.entry["result"] = {{"max_delta_error", drift}};
    if (drift > 1e-12) {
      err << "error: stored deltas disagree with absolutes by " << drift << "\n";
      rc = kExitFailure;
    }
  } else if (j.contains("gmig")) {
    const GmigReport g = GmigReport::from_json(j.dump());
    md << "# gMIG\n\n| gmig | mean mi content | mean mi style | H(y) | n | k | latent |\n|---|---|---|---|---|---|---|\n";
    md << "| " << fmt(g.gmig) << " | " << fmt(g.mean_c()) << " | " << fmt(g.mean_s()) << " | " << fmt(g.h_y) << " | "
       << g.n << " | " << g.k << " | " << g.latent << " |\n";
  } else {
    throw ContractViolation(f.input + ": neither a benchmark report nor a gMIG report");
  }
  write_text(target, md.str());
  run.output(target);
  out << md.str();
  return rc;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Content/style disentanglement toolkit", "clear"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "INI file; [command] sections hold that command's flags");
  app.require_subcommand(1, 1);

  SimulateFlags sim;
  auto* c_sim = app.add_subcommand("simulate", "MI maximization/minimization on the Gaussian mixture");
  c_sim->add_option("--direction", sim.direction, "max or min")->required()->check(CLI::IsMember({"max", "min"}));
  c_sim->add_option("--seed", sim.seed)->capture_default_str();
  c_sim->add_option("--steps-per-level", sim.steps_per_level)->capture_default_str()->check(CLI::PositiveNumber);
  c_sim->add_option("--n", sim.n, "points per step")->capture_default_str()->check(CLI::PositiveNumber);
  c_sim->add_option("--k", sim.k, "KNN neighbours")->capture_default_str()->check(CLI::PositiveNumber);
  c_sim->add_option("--metric", sim.metric)->capture_default_str();
  c_sim->add_option("--tau", sim.tau)->capture_default_str()->check(CLI::PositiveNumber);
  c_sim->add_option("--out", sim.out, "output directory")->capture_default_str();

  GenDataFlags gen;
  auto* c_gen = app.add_subcommand("gen-data", "generate the styled-shapes dataset (or style IDX images)");
  gen.gen.add(c_gen);
  c_gen->add_option("--out", gen.out, "dataset directory, relative to the data root")->capture_default_str();
  c_gen->add_option("--mnist-images", gen.mnist_images, "IDX image file to style instead of glyphs");
  c_gen->add_option("--mnist-labels", gen.mnist_labels, "IDX label file for --mnist-images");
  c_gen->add_flag("--png", gen.png, "also export one PNG per image");

  TrainFlags tr;
  auto* c_train = app.add_subcommand("train", "train a model and write checkpoints, history and manifest");
  tr.cfg.add(c_train, true);
  tr.gen.add(c_train);
  tr.o_seed = c_train->add_option("--seed", tr.seed, "drawn at random and recorded when omitted");
  c_train->add_option("--data", tr.data, "dataset directory (generated when missing)")->capture_default_str();
  c_train->add_option("--out", tr.out, "run directory")->capture_default_str();
  c_train->add_option("--epochs", tr.opt.epochs)->capture_default_str()->check(CLI::PositiveNumber);
  c_train->add_option("--batch-size", tr.opt.batch_size)->capture_default_str()->check(CLI::PositiveNumber);
  c_train->add_option("--lr", tr.opt.lr)->capture_default_str()->check(CLI::PositiveNumber);
  c_train->add_option("--aux-steps", tr.opt.aux_steps)->capture_default_str()->check(CLI::NonNegativeNumber);
  c_train->add_option("--aux-lr-scale", tr.opt.aux_lr_scale)->capture_default_str()->check(CLI::PositiveNumber);
  c_train->add_option("--audit-size", tr.opt.audit_size)->capture_default_str()->check(CLI::PositiveNumber);
  c_train->add_option("--checkpoint-every", tr.opt.checkpoint_every, "epochs; 0 keeps only model.ckpt")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);

  GmigFlags gm;
  auto* c_gmig = app.add_subcommand("gmig", "gMIG audit of a checkpoint");
  c_gmig->add_option("--checkpoint", gm.checkpoint)->required();
  c_gmig->add_option("--data", gm.data)->capture_default_str();
  c_gmig->add_option("--audit-size", gm.audit_size)->capture_default_str()->check(CLI::PositiveNumber);
  c_gmig->add_option("--seed", gm.seed, "audit slice seed")->capture_default_str();
  c_gmig->add_option("--out", gm.out, "report JSON")->capture_default_str();
  c_gmig->add_option("--projection", gm.projection, "also write a fixed random 2-D projection CSV");
  c_gmig->add_option("--projection-seed", gm.projection_seed)->capture_default_str();

  SwapFlags sw;
  auto* c_swap = app.add_subcommand("swap", "content/style swap grid");
  c_swap->add_option("--checkpoint", sw.checkpoint)->required();
  c_swap->add_option("--data", sw.data)->capture_default_str();
  c_swap->add_option("--indices", sw.indices, "comma-separated sample indices")->required()->delimiter(',');
  c_swap->add_option("--out", sw.out, "PNG path")->capture_default_str();

  InterpolateFlags ip;
  auto* c_interp = app.add_subcommand("interpolate", "latent interpolation strip on one axis");
  c_interp->add_option("--checkpoint", ip.checkpoint)->required();
  c_interp->add_option("--data", ip.data)->capture_default_str();
  c_interp->add_option("--src", ip.src)->required();
  c_interp->add_option("--tgt", ip.tgt)->required();
  c_interp->add_option("--axis", ip.axis, "content or style")
      ->capture_default_str()
      ->check(CLI::IsMember({"content", "style"}));
  c_interp->add_option("--steps", ip.steps)->capture_default_str()->check(CLI::Range(2, 4096));
  c_interp->add_option("--out", ip.out, "PNG path")->capture_default_str();

  OodFlags ood;
  auto* c_ood = app.add_subcommand("ood-bench", "unseen-style benchmark against the baseline CNN");
  ood.cfg.add(c_ood, false);
  c_ood->add_option("--data", ood.data)->capture_default_str();
  c_ood->add_option("--k", ood.k, "styles seen per class in training")->capture_default_str();
  c_ood->add_option("--n-splits", ood.n_splits)->capture_default_str()->check(CLI::PositiveNumber);
  c_ood->add_option("--variants", ood.variants, "comma-separated variants")->delimiter(',')->capture_default_str();
  c_ood->add_option("--seed", ood.seed)->capture_default_str();
  c_ood->add_option("--epochs", ood.epochs)->capture_default_str()->check(CLI::PositiveNumber);
  c_ood->add_option("--baseline-epochs", ood.baseline_epochs)->capture_default_str()->check(CLI::PositiveNumber);
  c_ood->add_option("--head-epochs", ood.head_epochs)->capture_default_str()->check(CLI::PositiveNumber);
  c_ood->add_option("--batch-size", ood.batch_size)->capture_default_str()->check(CLI::PositiveNumber);
  c_ood->add_option("--lr", ood.lr)->capture_default_str()->check(CLI::PositiveNumber);
  c_ood->add_option("--out", ood.out, "output directory")->capture_default_str();

  ReportFlags rp;
  auto* c_report = app.add_subcommand("report", "markdown summary of a benchmark or gMIG report");
  c_report->add_option("--input", rp.input, "report JSON")->required();
  c_report->add_option("--out", rp.out, "markdown path (default: summary.md next to the input)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  Run run;
  run.entry = {{"command", sub->get_name()},
               {"version", kVersion},
               {"started", utc_now()},
               {"outputs", json::array()},
               {"inputs", json::object()}};
  json args = json::array();
  for (int i = 0; i < argc; ++i) args.push_back(argv[i]);
  run.entry["args"] = args;
  const auto* cfg_opt = app.get_config_ptr();
  run.entry["config_path"] = cfg_opt && cfg_opt->count() ? cfg_opt->as<std::string>() : "";
  run.entry["resolved_flags"] = sub->config_to_str(true, false);

  int rc = kExitFailure;
  std::string error;
  try {
    const std::string name = sub->get_name();
    if (name == "simulate") rc = cmd_simulate(sim, run, out);
    else if (name == "gen-data") rc = cmd_gen_data(gen, run, out);
    else if (name == "train") rc = cmd_train(tr, run, out, err);
    else if (name == "gmig") rc = cmd_gmig(gm, run, out, err);
    else if (name == "swap") rc = cmd_swap(sw, run, out, err);
    else if (name == "interpolate") rc = cmd_interpolate(ip, run, out, err);
    else if (name == "ood-bench") rc = cmd_ood_bench(ood, run, out, err);
    else rc = cmd_report(rp, run, out, err);
  } catch (const ContractViolation& e) {
    error = e.what();
    rc = kExitUsage;
  } catch (const TrainingAborted& e) {
    error = e.what();
    run.entry["last_good_checkpoint"] = e.last_good().string();
    rc = kExitFailure;
  } catch (const std::exception& e) {
    error = e.what();
    rc = kExitFailure;
  }
  if (!error.empty()) err << "error: " << error << "\n";

  run.entry["finished"] = utc_now();
  run.entry["exit_code"] = rc;
  run.entry["status"] = rc == kExitOk ? "ok" : "failed";
  if (!error.empty()) run.entry["error"] = error;
  if (!run.dir.empty()) {
    try {
      append_manifest(run.dir, run.entry);
    } catch (const std::exception& e) {
      err << "error: cannot write manifest: " << e.what() << "\n";
      if (rc == kExitOk) rc = kExitFailure;
    }
  }
  return rc;
}

}  // namespace clear
