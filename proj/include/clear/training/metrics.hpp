#pragma once

#include <span>
#include <vector>

#include "clear/numerics/special.hpp"
#include "clear/numerics/types.hpp"

namespace clear {

/// Row-wise softmax of a score matrix.
Matrix softmax_rows(const Matrix& logits);

double top1_accuracy(const Matrix& scores, std::span<const int> labels);

/// One-vs-rest AUROC for one column: (R+ - n+(n+ + 1)/2) / (n+ n-) with average ranks,
/// i.e. the Mann-Whitney U statistic normalized. NaN when a side is empty.
double binary_auroc(std::span<const double> scores, std::span<const bool> positive);

/// Average precision as sum_k (R_k - R_{k-1}) P_k over distinct score thresholds,
/// visited in decreasing order (tied scores enter together). NaN without positives.
double binary_average_precision(std::span<const double> scores, std::span<const bool> positive);

/// Unweighted means over classes that have both positives and negatives in `labels`.
double macro_auroc(const Matrix& scores, std::span<const int> labels);
double macro_average_precision(const Matrix& scores, std::span<const int> labels);

struct ClassificationMetrics {
  double top1 = 0;
  double auroc = 0;
  double ap = 0;
};

/// All three metrics from logits; AUROC and AP use softmax probabilities.
ClassificationMetrics evaluate_logits(const Matrix& logits, std::span<const int> labels);

}  // namespace clear
