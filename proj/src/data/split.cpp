#include "clear/data/split.hpp"

#include <algorithm>
#include <numeric>

#include "clear/errors.hpp"
#include "clear/numerics/rng.hpp"

namespace clear {

bool SplitPlan::covers_all_styles() const {
  std::vector<bool> seen(static_cast<std::size_t>(num_style), false);
  for (const auto& styles : train_styles) {
    for (int s : styles) seen[static_cast<std::size_t>(s)] = true;
  }
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

bool SplitPlan::is_train(int content, int style) const {
  const auto& t = train_styles.at(static_cast<std::size_t>(content));
  return std::binary_search(t.begin(), t.end(), style);
}

SplitPlan plan_ood_split(int num_content, int num_style, int k, std::uint64_t seed) {
  CLEAR_REQUIRE(num_content >= 1, "plan_ood_split: need at least one content class");
  CLEAR_REQUIRE(k >= 1 && k <= num_style - 1, "plan_ood_split: k must lie in [1, m-1]");
  if (static_cast<long>(num_content) * k < num_style) {
    throw InfeasiblePlan("plan_ood_split: p*k < m, some style can never be trained");
  }
  Rng rng(seed);
  SplitPlan plan{num_content, num_style, k, {}, {}};
  for (int attempt = 0; attempt < kMaxPlanAttempts; ++attempt) {
    plan.train_styles.assign(static_cast<std::size_t>(num_content), {});
    plan.test_styles.assign(static_cast<std::size_t>(num_content), {});
    for (int c = 0; c < num_content; ++c) {
      std::vector<int> styles(static_cast<std::size_t>(num_style));
      std::iota(styles.begin(), styles.end(), 0);
      rng.shuffle(styles);
      auto& tr = plan.train_styles[static_cast<std::size_t>(c)];
      auto& te = plan.test_styles[static_cast<std::size_t>(c)];
      tr.assign(styles.begin(), styles.begin() + k);
      te.assign(styles.begin() + k, styles.end());
      std::sort(tr.begin(), tr.end());
      std::sort(te.begin(), te.end());
    }
    if (plan.covers_all_styles()) return plan;
  }
  throw InfeasiblePlan("plan_ood_split: no covering plan within the attempt cap");
}

SplitIndices apply_split(const LabeledImageSet& set, const SplitPlan& plan) {
  CLEAR_REQUIRE(set.num_content == plan.num_content && set.num_style == plan.num_style,
                "apply_split: plan does not match the dataset's label ranges");
  SplitIndices out;
  for (Index i = 0; i < set.size(); ++i) {
    const auto u = static_cast<std::size_t>(i);
    (plan.is_train(set.content[u], set.style[u]) ? out.train : out.test).push_back(i);
  }
  return out;
}

}  // namespace clear
