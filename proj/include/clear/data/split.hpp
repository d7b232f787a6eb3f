#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "clear/data/dataset.hpp"

namespace clear {

/// Per content class, which styles are seen in training and which are held out.
struct SplitPlan {
  int num_content = 0;
  int num_style = 0;
  int k = 0;
  std::vector<std::vector<int>> train_styles;  // sorted, size k
  std::vector<std::vector<int>> test_styles;   // sorted, size m - k

  bool covers_all_styles() const;
  bool is_train(int content, int style) const;
};

/// No plan satisfying the coverage invariant was found within the attempt cap.
class InfeasiblePlan : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMaxPlanAttempts = 1000;

SplitPlan plan_ood_split(int num_content, int num_style, int k, std::uint64_t seed);

struct SplitIndices {
  std::vector<Index> train;
  std::vector<Index> test;
};

SplitIndices apply_split(const LabeledImageSet& set, const SplitPlan& plan);

}  // namespace clear
