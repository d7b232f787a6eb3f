#include "clear/training/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "clear/errors.hpp"

namespace clear {

Matrix softmax_rows(const Matrix& logits) {
  Matrix p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp().matrix();
  return p.array().colwise() / p.rowwise().sum().array();
}

double top1_accuracy(const Matrix& scores, std::span<const int> labels) {
  CLEAR_REQUIRE(scores.rows() == static_cast<Index>(labels.size()) && scores.rows() > 0,
                "top1_accuracy: one score row per label required");
  Index correct = 0;
  for (Index i = 0; i < scores.rows(); ++i) {
    Index arg;
    scores.row(i).maxCoeff(&arg);
    correct += arg == labels[static_cast<std::size_t>(i)];
  }
  return static_cast<double>(correct) / static_cast<double>(scores.rows());
}

double binary_auroc(std::span<const double> scores, std::span<const bool> positive) {
  CLEAR_REQUIRE(scores.size() == positive.size(), "binary_auroc: size mismatch");
  const auto r = average_ranks(scores);
  double pos_rank = 0, n_pos = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (positive[i]) {
      pos_rank += r[i];
      n_pos += 1;
    }
  }
  const double n_neg = static_cast<double>(r.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::numeric_limits<double>::quiet_NaN();
  return (pos_rank - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg);
}

double binary_average_precision(std::span<const double> scores, std::span<const bool> positive) {
  CLEAR_REQUIRE(scores.size() == positive.size(), "binary_average_precision: size mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const double total_pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  if (total_pos == 0) return std::numeric_limits<double>::quiet_NaN();
  double tp = 0, seen = 0, prev_recall = 0, ap = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      tp += positive[order[j]];
      seen += 1;
      ++j;
    }
    const double recall = tp / total_pos;
    ap += (recall - prev_recall) * (tp / seen);
    prev_recall = recall;
    i = j;
  }
  return ap;
}

namespace {

template <class F>
double macro_over_classes(const Matrix& scores, std::span<const int> labels, F metric) {
  CLEAR_REQUIRE(scores.rows() == static_cast<Index>(labels.size()), "macro metric: one score row per label required");
  double acc = 0;
  int used = 0;
  std::vector<double> col(labels.size());
  std::unique_ptr<bool[]> pos(new bool[labels.size()]);
  for (Index c = 0; c < scores.cols(); ++c) {
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      col[i] = scores(static_cast<Index>(i), c);
      pos[i] = labels[i] == c;
      n_pos += pos[i];
    }
    if (n_pos == 0 || n_pos == labels.size()) continue;
    acc += metric(std::span<const double>(col), std::span<const bool>(pos.get(), labels.size()));
    ++used;
  }
  CLEAR_REQUIRE(used > 0, "macro metric: no class has both positives and negatives");
  return acc / used;
}

}  // namespace

double macro_auroc(const Matrix& scores, std::span<const int> labels) {
  return macro_over_classes(scores, labels, binary_auroc);
}

double macro_average_precision(const Matrix& scores, std::span<const int> labels) {
  return macro_over_classes(scores, labels, binary_average_precision);
}

ClassificationMetrics evaluate_logits(const Matrix& logits, std::span<const int> labels) {
  const Matrix p = softmax_rows(logits);
  return {top1_accuracy(logits, labels), macro_auroc(p, labels), macro_average_precision(p, labels)};
}

}  // namespace clear
