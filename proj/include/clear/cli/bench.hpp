#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "clear/data/dataset.hpp"
#include "clear/losses/config.hpp"
#include "clear/training/classifier.hpp"
#include "clear/training/metrics.hpp"
#include "clear/training/train.hpp"

#include "json.hpp"

namespace clear {

struct OodOptions {
  int k = 1;
  int n_splits = 5;
  std::vector<Variant> variants{Variant::ps};
  ClearConfig clear;         // variant field is overwritten per entry of `variants`
  TrainOptions train;        // seed is overwritten per split
  BaselineOptions baseline;  // seed is overwritten per split
  HeadOptions head;          // seed is overwritten per split
  std::uint64_t seed = 0;
  std::function<void(const std::string&)> log;
};

struct VariantResult {
  ClassificationMetrics absolute;
  ClassificationMetrics delta;  // variant - baseline on the same split
  double gmig = 0;              // final training audit
};

struct SplitResult {
  int index = 0;
  std::uint64_t seed = 0;
  Index train_size = 0;
  Index test_size = 0;
  std::vector<std::vector<int>> train_styles;
  ClassificationMetrics baseline;
  std::map<std::string, VariantResult> variants;
};

struct BenchmarkReport {
  int k = 0;
  int num_content = 0;
  int num_style = 0;
  int n_splits = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> variants;
  std::vector<SplitResult> splits;
  std::vector<std::string> skipped;

  ClassificationMetrics median_baseline() const;
  ClassificationMetrics median_absolute(const std::string& variant) const;
  ClassificationMetrics median_delta(const std::string& variant) const;
  /// Largest |stored delta - (variant - baseline)| over all splits and metrics.
  double max_delta_error() const;

  nlohmann::json to_json() const;
  static BenchmarkReport from_json(const nlohmann::json& j);
  /// One row per split and variant plus median rows.
  std::string to_csv() const;
};

/// For each split: plan, train the baseline CNN and each variant (frozen-head protocol)
/// on seen styles, evaluate on the unseen-style test set. Infeasible plans are skipped.
BenchmarkReport run_ood_bench(const LabeledImageSet& data, const OodOptions& opt);

}  // namespace clear
