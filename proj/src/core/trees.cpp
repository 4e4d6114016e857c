#include "trees.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace triage::detail {

namespace {

struct Stats {
  double first = 0.0;
  double second = 0.0;
};

struct Candidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

// Minimum improvement for a split to count; keeps round-off from creating
// zero-value splits.
constexpr double kMinGain = 1e-12;

double node_score(const Stats& s, const TreeGrowth& g) {
  if (g.criterion == SplitCriterion::Newton) return s.first * s.first / (s.second + g.lambda);
  // Weighted Gini impurity: W * 2p(1-p) with p = first / second.
  if (s.second <= 0.0) return 0.0;
  return 2.0 * s.first * (s.second - s.first) / s.second;
}

double split_gain(const Stats& left, const Stats& right, const Stats& parent, const TreeGrowth& g) {
  if (g.criterion == SplitCriterion::Newton) {
    return 0.5 * (node_score(left, g) + node_score(right, g) - node_score(parent, g));
  }
  return node_score(parent, g) - node_score(left, g) - node_score(right, g);
}

double leaf_value(const Stats& s, const TreeGrowth& g) {
  if (g.criterion == SplitCriterion::Newton) return -s.first / (s.second + g.lambda);
  return s.second > 0.0 ? s.first / s.second : 0.0;
}

}  // namespace

SortedColumns SortedColumns::build(const Matrix& x) {
  SortedColumns out;
  out.order.resize(x.cols());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    auto& idx = out.order[f];
    idx.resize(x.rows());
    std::iota(idx.begin(), idx.end(), 0u);
    std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
  }
  return out;
}

Tree grow_tree(const Matrix& x, const SortedColumns& sorted, std::span<const double> first,
               std::span<const double> second, std::span<const char> included, const TreeGrowth& growth,
               std::vector<double>& gain, Rng* rng) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  gain.resize(d, 0.0);

  Tree tree;
  std::vector<Stats> stats;
  std::vector<int> node_of(n, -1);

  Stats root;
  for (std::size_t i = 0; i < n; ++i) {
    if (!included[i]) continue;
    node_of[i] = 0;
    root.first += first[i];
    root.second += second[i];
  }
  tree.nodes.push_back({});
  stats.push_back(root);

  std::vector<int> frontier{0};
  for (int depth = 0; depth < growth.max_depth && !frontier.empty(); ++depth) {
    const std::size_t width = frontier.size();
    std::vector<int> slot_of(tree.nodes.size(), -1);
    for (std::size_t s = 0; s < width; ++s) slot_of[frontier[s]] = static_cast<int>(s);

    // Features examined per node.
    std::vector<std::vector<char>> allowed;
    const bool subsample_features = growth.max_features > 0 && growth.max_features < d;
    if (subsample_features) {
      allowed.assign(width, std::vector<char>(d, 0));
      std::vector<std::size_t> pool(d);
      for (std::size_t s = 0; s < width; ++s) {
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (std::size_t k = 0; k < growth.max_features; ++k) {
          const std::size_t pick = k + rng->below(d - k);
          std::swap(pool[k], pool[pick]);
          allowed[s][pool[k]] = 1;
        }
      }
    }

    std::vector<Candidate> best(width);
    std::vector<Stats> left(width);
    std::vector<double> last(width);
    std::vector<char> has_last(width);

    for (std::size_t f = 0; f < d; ++f) {
      std::fill(left.begin(), left.end(), Stats{});
      std::fill(has_last.begin(), has_last.end(), 0);
      for (std::uint32_t row : sorted.order[f]) {
        const int node = node_of[row];
        if (node < 0) continue;
        const int slot = slot_of[node];
        if (slot < 0) continue;
        if (subsample_features && !allowed[slot][f]) continue;
        const double value = x(row, f);
        if (has_last[slot] && value != last[slot]) {
          const Stats& parent = stats[node];
          const Stats& l = left[slot];
          const Stats r{parent.first - l.first, parent.second - l.second};
          if (l.second >= growth.min_child && r.second >= growth.min_child) {
            const double g = split_gain(l, r, parent, growth);
            if (g > best[slot].gain + kMinGain) {
              double threshold = last[slot] + (value - last[slot]) / 2.0;
              if (threshold >= value) threshold = last[slot];
              best[slot] = {g, static_cast<int>(f), threshold};
            }
          }
        }
        left[slot].first += first[row];
        left[slot].second += second[row];
        last[slot] = value;
        has_last[slot] = 1;
      }
    }

    std::vector<int> next;
    std::vector<int> split_node(tree.nodes.size() + 2 * width, -1);
    for (std::size_t s = 0; s < width; ++s) {
      const int node = frontier[s];
      if (best[s].feature < 0) continue;
      const int l = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back({});
      tree.nodes.push_back({});
      stats.push_back({});
      stats.push_back({});
      auto& parent = tree.nodes[node];
      parent.feature = best[s].feature;
      parent.threshold = best[s].threshold;
      parent.left = l;
      parent.right = l + 1;
      gain[best[s].feature] += best[s].gain;
      next.push_back(l);
      next.push_back(l + 1);
    }
    if (next.empty()) break;

    for (std::size_t i = 0; i < n; ++i) {
      const int node = node_of[i];
      if (node < 0) continue;
      const auto& nd = tree.nodes[node];
      if (nd.feature < 0 || slot_of.size() <= static_cast<std::size_t>(node) || slot_of[node] < 0) continue;
      const int child = x(i, nd.feature) <= nd.threshold ? nd.left : nd.right;
      node_of[i] = child;
      stats[child].first += first[i];
      stats[child].second += second[i];
    }
    frontier = std::move(next);
  }

  for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
    if (tree.nodes[k].feature < 0) tree.nodes[k].value = leaf_value(stats[k], growth);
  }
  return tree;
}

}  // namespace triage::detail
