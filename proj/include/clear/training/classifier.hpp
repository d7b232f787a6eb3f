#pragma once

#include <string>

#include "clear/data/dataset.hpp"
#include "clear/model/networks.hpp"
#include "clear/training/metrics.hpp"

namespace clear {

/// FNV-1a over names, shapes and values.
std::string parameter_hash(const ParameterList& params);

struct HeadOptions {
  int epochs = 100;
  Index batch_size = 128;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

struct HeadResult {
  ClassifierHead head;
  std::string encoder_hash_before;
  std::string encoder_hash_after;
  ClassificationMetrics train_metrics;
};

/// Two-layer head on mu_c of a frozen encoder. Features are computed once;
/// encoder weights are never touched, which the before/after hashes record.
HeadResult train_classifier_head(const ClearModel& model, const LabeledImageSet& train, const HeadOptions& opt);

Matrix head_logits(const ClearModel& model, const ClassifierHead& head, const LabeledImageSet& data);

struct BaselineOptions {
  int epochs = 30;
  Index batch_size = 128;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

/// Encoder trunk + head trained end-to-end on images with cross-entropy.
BaselineCnn train_baseline_cnn(const LabeledImageSet& train, const BaselineOptions& opt);

Matrix baseline_logits(const BaselineCnn& cnn, const LabeledImageSet& data);

}  // namespace clear
