#include "clear/cli/bench.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "clear/data/split.hpp"
#include "clear/errors.hpp"
#include "clear/numerics/special.hpp"

namespace clear {

namespace {

nlohmann::json metrics_json(const ClassificationMetrics& m) {
  return {{"top1", m.top1}, {"auroc", m.auroc}, {"ap", m.ap}};
}

ClassificationMetrics metrics_from(const nlohmann::json& j) { return {j.at("top1"), j.at("auroc"), j.at("ap")}; }

ClassificationMetrics minus(const ClassificationMetrics& a, const ClassificationMetrics& b) {
  return {a.top1 - b.top1, a.auroc - b.auroc, a.ap - b.ap};
}

template <class Get>
ClassificationMetrics median_of(const std::vector<SplitResult>& splits, Get get) {
  CLEAR_REQUIRE(!splits.empty(), "benchmark report: no completed splits");
  std::vector<double> t, a, p;
  for (const auto& s : splits) {
    const ClassificationMetrics m = get(s);
    t.push_back(m.top1);
    a.push_back(m.auroc);
    p.push_back(m.ap);
  }
  return {median(t), median(a), median(p)};
}

}  // namespace

ClassificationMetrics BenchmarkReport::median_baseline() const {
  return median_of(splits, [](const SplitResult& s) { return s.baseline; });
}

ClassificationMetrics BenchmarkReport::median_absolute(const std::string& v) const {
  return median_of(splits, [&](const SplitResult& s) { return s.variants.at(v).absolute; });
}

ClassificationMetrics BenchmarkReport::median_delta(const std::string& v) const {
  return median_of(splits, [&](const SplitResult& s) { return s.variants.at(v).delta; });
}

double BenchmarkReport::max_delta_error() const {
  double worst = 0;
  for (const auto& s : splits) {
    for (const auto& [name, r] : s.variants) {
      const ClassificationMetrics d = minus(r.absolute, s.baseline);
      worst = std::max({worst, std::abs(d.top1 - r.delta.top1), std::abs(d.auroc - r.delta.auroc),
                        std::abs(d.ap - r.delta.ap)});
    }
  }
  return worst;
}

nlohmann::json BenchmarkReport::to_json() const {
  nlohmann::json j;
  j["k"] = k;
  j["num_content"] = num_content;
  j["num_style"] = num_style;
  j["n_splits"] = n_splits;
  j["seed"] = seed;
  j["variants"] = variants;
  j["skipped"] = skipped;
  j["splits"] = nlohmann::json::array();
  for (const auto& s : splits) {
    nlohmann::json e{{"index", s.index},
                     {"seed", s.seed},
                     {"train_size", s.train_size},
                     {"test_size", s.test_size},
                     {"train_styles", s.train_styles},
                     {"baseline", metrics_json(s.baseline)}};
    for (const auto& [name, r] : s.variants) {
      e["variants"][name] = {{"absolute", metrics_json(r.absolute)}, {"delta", metrics_json(r.delta)}, {"gmig", r.gmig}};
    }
    j["splits"].push_back(e);
  }
  if (!splits.empty()) {
    j["median"]["baseline"] = metrics_json(median_baseline());
    for (const auto& v : variants) {
      j["median"]["variants"][v] = {{"absolute", metrics_json(median_absolute(v))},
                                    {"delta", metrics_json(median_delta(v))}};
    }
  }
  return j;
}

BenchmarkReport BenchmarkReport::from_json(const nlohmann::json& j) {
  BenchmarkReport r;
  try {
    r.k = j.at("k");
    r.num_content = j.at("num_content");
    r.num_style = j.at("num_style");
    r.n_splits = j.at("n_splits");
    r.seed = j.at("seed");
    r.variants = j.at("variants").get<std::vector<std::string>>();
    r.skipped = j.at("skipped").get<std::vector<std::string>>();
    for (const auto& e : j.at("splits")) {
      SplitResult s;
      s.index = e.at("index");
      s.seed = e.at("seed");
      s.train_size = e.at("train_size");
      s.test_size = e.at("test_size");
      s.train_styles = e.at("train_styles").get<std::vector<std::vector<int>>>();
      s.baseline = metrics_from(e.at("baseline"));
      if (e.contains("variants")) {
        for (const auto& [name, v] : e.at("variants").items()) {
          s.variants[name] = {metrics_from(v.at("absolute")), metrics_from(v.at("delta")), v.at("gmig")};
        }
      }
      r.splits.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(std::string("benchmark report: ") + e.what());
  }
  return r;
}

std::string BenchmarkReport::to_csv() const {
  std::ostringstream os;
  os << "split,model,top1,auroc,ap,delta_top1,delta_auroc,delta_ap\n";
  char buf[256];
  auto row = [&](const std::string& split, const std::string& model, const ClassificationMetrics& a,
                 const ClassificationMetrics* d) {
    if (d) {
      std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", split.c_str(), model.c_str(),
                    a.top1, a.auroc, a.ap, d->top1, d->auroc, d->ap);
    } else {
      std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%.17g,%.17g,,,\n", split.c_str(), model.c_str(), a.top1, a.auroc,
                    a.ap);
    }
    os << buf;
  };
  for (const auto& s : splits) {
    row(std::to_string(s.index), "baseline", s.baseline, nullptr);
    for (const auto& [name, r] : s.variants) row(std::to_string(s.index), name, r.absolute, &r.delta);
  }
  if (!splits.empty()) {
    row("median", "baseline", median_baseline(), nullptr);
    for (const auto& v : variants) {
      const auto d = median_delta(v);
      row("median", v, median_absolute(v), &d);
    }
  }
  return os.str();
}

BenchmarkReport run_ood_bench(const LabeledImageSet& data, const OodOptions& opt) {
  data.validate();
  CLEAR_REQUIRE(opt.n_splits >= 1, "ood-bench: n_splits must be >= 1");
  CLEAR_REQUIRE(opt.k >= 1 && opt.k <= data.num_style - 1, "ood-bench: k must lie in [1, m - 1]");
  BenchmarkReport report;
  report.k = opt.k;
  report.num_content = data.num_content;
  report.num_style = data.num_style;
  report.n_splits = opt.n_splits;
  report.seed = opt.seed;
  for (Variant v : opt.variants) report.variants.push_back(to_string(v));

  const Rng root(opt.seed);
  for (int i = 0; i < opt.n_splits; ++i) {
    Rng split_rng = root.split(100 + static_cast<std::uint64_t>(i));
    const std::uint64_t split_seed = split_rng.next_u64();
    SplitPlan plan;
    try {
      plan = plan_ood_split(data.num_content, data.num_style, opt.k, split_seed);
    } catch (const InfeasiblePlan& e) {
      report.skipped.push_back("split " + std::to_string(i) + ": " + e.what());
      if (opt.log) opt.log("warning: skipping split " + std::to_string(i) + ": " + e.what());
      continue;
    }
    const SplitIndices idx = apply_split(data, plan);
    const LabeledImageSet train = data.subset(idx.train), test = data.subset(idx.test);
    SplitResult s;
    s.index = i;
    s.seed = split_seed;
    s.train_size = train.size();
    s.test_size = test.size();
    s.train_styles = plan.train_styles;

    BaselineOptions bo = opt.baseline;
    bo.seed = split_seed;
    const BaselineCnn cnn = train_baseline_cnn(train, bo);
    s.baseline = evaluate_logits(baseline_logits(cnn, test), test.content);
    if (opt.log) opt.log("split " + std::to_string(i) + " baseline top1 " + std::to_string(s.baseline.top1));
    for (Variant v : opt.variants) {
      ClearConfig cfg = opt.clear;
      cfg.variant = v;
      TrainOptions to = opt.train;
      to.seed = split_seed;
      to.checkpoint_dir.clear();
      const TrainResult tr = train_clear(train, cfg, to);
      HeadOptions ho = opt.head;
      ho.seed = split_seed;
      const HeadResult head = train_classifier_head(tr.model, train, ho);
      VariantResult r;
      r.absolute = evaluate_logits(head_logits(tr.model, head.head, test), test.content);
      r.delta = minus(r.absolute, s.baseline);
      r.gmig = tr.history.final_gmig();
      if (opt.log) {
        opt.log("split " + std::to_string(i) + " " + to_string(v) + " top1 " + std::to_string(r.absolute.top1) +
                " delta " + std::to_string(r.delta.top1));
      }
      s.variants[to_string(v)] = r;
    }
    report.splits.push_back(std::move(s));
  }
  return report;
}

}  // namespace clear
