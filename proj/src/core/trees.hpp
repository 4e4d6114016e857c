#pragma once

// Level-wise exact greedy tree growth over presorted feature columns,
// shared by gradient boosting (Newton criterion) and the CART learners
// (weighted Gini criterion).

#include <cstdint>
#include <span>
#include <vector>

#include "triage/learners.hpp"
#include "triage/matrix.hpp"
#include "random.hpp"

namespace triage::detail {

/// Row indices of each feature column sorted by value (stable).
struct SortedColumns {
  std::vector<std::vector<std::uint32_t>> order;

  static SortedColumns build(const Matrix& x);
};

enum class SplitCriterion { Newton, Gini };

struct TreeGrowth {
  SplitCriterion criterion = SplitCriterion::Newton;
  int max_depth = 4;
  double lambda = 1.0;           // Newton only
  double min_child = 1.0;        // hessian sum (Newton) or sample weight (Gini) per child
  std::size_t max_features = 0;  // features examined per node; 0 = all
};

/// Per-row statistics: for Newton (gradient, hessian), for Gini
/// (weight * label, weight). Rows with `included[i] == 0` are ignored.
/// Split gains are added to `gain` (one slot per feature).
Tree grow_tree(const Matrix& x, const SortedColumns& sorted, std::span<const double> first,
               std::span<const double> second, std::span<const char> included, const TreeGrowth& growth,
               std::vector<double>& gain, Rng* rng);

}  // namespace triage::detail
