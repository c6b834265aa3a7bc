#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "cuspad/io_util.hpp"

namespace cuspad {

// Binary CART classifier, greedy Gini splitting. Nodes are stored in a flat
// vector; index 0 is the root.

struct TreeNode {
  bool leaf = true;
  int feature = -1;
  double threshold = 0.0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  int label = 0;
  int count0 = 0;  // training samples per class at this node
  int count1 = 0;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;
  int max_depth = 0;
  int min_leaf = 1;
  std::size_t n_features = 0;

  int depth() const { return node_depth(0); }

  int node_depth(int idx) const {
    const auto& n = nodes[idx];
    if (n.leaf) return 0;
    return 1 + std::max(node_depth(n.left), node_depth(n.right));
  }

  std::size_t leaf_count() const {
    std::size_t c = 0;
    for (const auto& n : nodes) c += n.leaf;
    return c;
  }
};

// Gini impurity of a two-class count pair.
inline double gini_impurity(std::size_t a, std::size_t b) {
  const double n = static_cast<double>(a + b);
  if (n == 0) return 0.0;
  const double pa = static_cast<double>(a) / n;
  const double pb = static_cast<double>(b) / n;
  return 1.0 - (pa * pa + pb * pb);
}

namespace detail {

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double score = std::numeric_limits<double>::infinity();  // weighted child impurity
};

// Best split of the samples in `idx`: candidate thresholds are midpoints
// between consecutive distinct sorted values. Ties break toward the lowest
// feature index, then the lowest threshold.
inline SplitChoice best_split(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                              const std::vector<int>& idx, std::size_t n_features, int min_leaf) {
  SplitChoice best;
  const std::size_t n = idx.size();
  std::vector<std::pair<double, int>> vals(n);
  for (std::size_t f = 0; f < n_features; ++f) {
    for (std::size_t i = 0; i < n; ++i) vals[i] = {x[idx[i]][f], y[idx[i]]};
    std::sort(vals.begin(), vals.end());
    std::size_t left1 = 0;
    std::size_t total1 = 0;
    for (const auto& v : vals) total1 += v.second;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left1 += vals[i].second;
      if (vals[i].first == vals[i + 1].first) continue;
      const std::size_t nl = i + 1;
      const std::size_t nr = n - nl;
      if (nl < static_cast<std::size_t>(min_leaf) || nr < static_cast<std::size_t>(min_leaf)) continue;
      const double score = (static_cast<double>(nl) * gini_impurity(nl - left1, left1) +
                            static_cast<double>(nr) * gini_impurity(nr - (total1 - left1), total1 - left1)) /
                           static_cast<double>(n);
      if (score < best.score - 1e-15) {
        best.found = true;
        best.feature = static_cast<int>(f);
        best.threshold = vals[i].first + 0.5 * (vals[i + 1].first - vals[i].first);
        best.score = score;
      }
    }
  }
  return best;
}

inline int grow(DecisionTree& tree, const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                std::vector<int>& idx, int depth) {
  TreeNode node;
  for (int i : idx) (y[i] == 0 ? node.count0 : node.count1)++;
  node.label = node.count1 > node.count0 ? 1 : 0;

  const bool pure = node.count0 == 0 || node.count1 == 0;
  if (!pure && depth < tree.max_depth) {
    const auto split = best_split(x, y, idx, tree.n_features, tree.min_leaf);
    if (split.found) {
      std::vector<int> li, ri;
      for (int i : idx)
        (x[i][split.feature] <= split.threshold ? li : ri).push_back(i);
      node.leaf = false;
      node.feature = split.feature;
      node.threshold = split.threshold;
      const int self = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back(node);
      tree.nodes[self].left = grow(tree, x, y, li, depth + 1);
      tree.nodes[self].right = grow(tree, x, y, ri, depth + 1);
      return self;
    }
  }
  const int self = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back(node);
  return self;
}

}  // namespace detail

// Trains on a dense sample matrix. Deterministic for a fixed input order; the
// seed parameter is accepted for interface symmetry but the algorithm draws
// nothing from it.
inline DecisionTree train_cart(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                               int max_depth, int min_leaf = 1, std::uint64_t seed = 0) {
  (void)seed;
  if (x.size() != y.size() || x.empty()) throw ValidationError("train_cart: empty or ragged input");
  for (int label : y)
    if (label != 0 && label != 1) throw ValidationError("train_cart: labels must be 0/1");
  DecisionTree tree;
  tree.max_depth = max_depth;
  tree.min_leaf = min_leaf;
  tree.n_features = x[0].size();
  for (const auto& row : x)
    if (row.size() != tree.n_features) throw ValidationError("train_cart: ragged feature rows");
  std::vector<int> idx(x.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  detail::grow(tree, x, y, idx, 0);
  return tree;
}

inline int predict(const DecisionTree& tree, const std::vector<double>& fv) {
  if (fv.size() != tree.n_features) throw ValidationError("predict: feature dimension mismatch");
  int cur = 0;
  while (!tree.nodes[cur].leaf)
    cur = fv[tree.nodes[cur].feature] <= tree.nodes[cur].threshold ? tree.nodes[cur].left
                                                                   : tree.nodes[cur].right;
  return tree.nodes[cur].label;
}

inline json tree_to_json(const DecisionTree& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes)
    nodes.push_back({{"leaf", n.leaf},
                     {"feature", n.feature},
                     {"threshold", n.threshold},
                     {"left", n.left},
                     {"right", n.right},
                     {"label", n.label},
                     {"count0", n.count0},
                     {"count1", n.count1}});
  return json{{"nodes", nodes},
              {"max_depth", tree.max_depth},
              {"min_leaf", tree.min_leaf},
              {"n_features", tree.n_features}};
}

inline DecisionTree tree_from_json(const json& j) {
  DecisionTree tree;
  tree.max_depth = j.at("max_depth").get<int>();
  tree.min_leaf = j.at("min_leaf").get<int>();
  tree.n_features = j.at("n_features").get<std::size_t>();
  for (const auto& nj : j.at("nodes")) {
    TreeNode n;
    n.leaf = nj.at("leaf").get<bool>();
    n.feature = nj.at("feature").get<int>();
    n.threshold = nj.at("threshold").get<double>();
    n.left = nj.at("left").get<int>();
    n.right = nj.at("right").get<int>();
    n.label = nj.at("label").get<int>();
    n.count0 = nj.at("count0").get<int>();
    n.count1 = nj.at("count1").get<int>();
    tree.nodes.push_back(n);
  }
  return tree;
}

}  // namespace cuspad
