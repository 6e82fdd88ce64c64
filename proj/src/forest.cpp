#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "drivetraits/models.hpp"
#include "drivetraits/rng.hpp"

namespace drivetraits {

double Tree::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  int node = 0;
  while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const TreeNode& tn = nodes[static_cast<std::size_t>(node)];
    node = row[tn.feature] <= tn.threshold ? tn.left : tn.right;
  }
  return nodes[static_cast<std::size_t>(node)].value;
}

namespace {

struct TreeBuilder {
  const Eigen::MatrixXd& x;
  const Eigen::VectorXd& y;
  bool classification;
  int max_depth;
  int mtry;
  std::mt19937_64 rng;
  std::vector<int> feature_pool;  // permuted in place when sampling candidates
  std::vector<TreeNode> nodes;

  // (value, target) pairs for the current node, reused across nodes.
  std::vector<std::pair<double, double>> scratch;

  double leaf_value(const std::vector<int>& idx) const {
    if (classification) {
      int ones = 0;
      for (int i : idx) ones += y[i] == 1.0 ? 1 : 0;
      const int zeros = static_cast<int>(idx.size()) - ones;
      return ones > zeros ? 1.0 : 0.0;  // tie goes to the smaller label
    }
    double sum = 0;
    for (int i : idx) sum += y[i];
    return sum / static_cast<double>(idx.size());
  }

  bool node_pure(const std::vector<int>& idx) const {
    for (std::size_t k = 1; k < idx.size(); ++k) {
      if (y[idx[k]] != y[idx[0]]) return false;
    }
    return true;
  }

  // Best split of `idx` on feature f; returns improvement in the squared-sum
  // score (valid for both variance reduction and two-class Gini).
  bool best_split_on_feature(const std::vector<int>& idx, int f, double parent_score,
                             double* out_score, double* out_threshold) {
    const std::size_t m = idx.size();
    scratch.clear();
    for (int i : idx) scratch.push_back({x(i, f), y[i]});
    std::sort(scratch.begin(), scratch.end());
    if (scratch.front().first == scratch.back().first) return false;

    // Regression: maximize sum_side (sum y)^2 / n_side.
    // Two-class Gini: maximize sum_side (c0^2 + c1^2) / n_side, with
    // c1 = sum y, c0 = n - c1 on 0/1 targets.
    double left_sum = 0;
    double total_sum = 0;
    for (const auto& p : scratch) total_sum += p.second;

    bool found = false;
    double best = parent_score;
    double best_thr = 0;
    for (std::size_t k = 0; k + 1 < m; ++k) {
      left_sum += scratch[k].second;
      if (scratch[k].first == scratch[k + 1].first) continue;
      const double nl = static_cast<double>(k + 1);
      const double nr = static_cast<double>(m - k - 1);
      const double right_sum = total_sum - left_sum;
      double score;
      if (classification) {
        const double c1l = left_sum, c0l = nl - left_sum;
        const double c1r = right_sum, c0r = nr - right_sum;
        score = (c1l * c1l + c0l * c0l) / nl + (c1r * c1r + c0r * c0r) / nr;
      } else {
        score = left_sum * left_sum / nl + right_sum * right_sum / nr;
      }
      if (score > best + 1e-12) {
        best = score;
        best_thr = 0.5 * (scratch[k].first + scratch[k + 1].first);
        found = true;
      }
    }
    if (found) {
      *out_score = best;
      *out_threshold = best_thr;
    }
    return found;
  }

  int build(std::vector<int>& idx, int depth) {
    const int node_id = static_cast<int>(nodes.size());
    nodes.push_back(TreeNode{});

    if (depth >= max_depth || idx.size() < 2 || node_pure(idx)) {
      nodes[static_cast<std::size_t>(node_id)].value = leaf_value(idx);
      return node_id;
    }

    const std::size_t m = idx.size();
    double parent_score;
    if (classification) {
      double c1 = 0;
      for (int i : idx) c1 += y[i];
      const double c0 = static_cast<double>(m) - c1;
      parent_score = (c1 * c1 + c0 * c0) / static_cast<double>(m);
    } else {
      double s = 0;
      for (int i : idx) s += y[i];
      parent_score = s * s / static_cast<double>(m);
    }

    // Sample mtry candidate features without replacement.
    const int p = static_cast<int>(x.cols());
    int best_feature = -1;
    double best_score = parent_score;
    double best_threshold = 0;
    for (int k = 0; k < mtry; ++k) {
      std::uniform_int_distribution<int> pick(k, p - 1);
      std::swap(feature_pool[static_cast<std::size_t>(k)],
                feature_pool[static_cast<std::size_t>(pick(rng))]);
      const int f = feature_pool[static_cast<std::size_t>(k)];
      double score, thr;
      if (best_split_on_feature(idx, f, parent_score, &score, &thr) &&
          score > best_score + 1e-12) {
        best_score = score;
        best_feature = f;
        best_threshold = thr;
      }
    }

    if (best_feature < 0) {
      nodes[static_cast<std::size_t>(node_id)].value = leaf_value(idx);
      return node_id;
    }

    std::vector<int> left, right;
    for (int i : idx) {
      (x(i, best_feature) <= best_threshold ? left : right).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();

    const int left_id = build(left, depth + 1);
    const int right_id = build(right, depth + 1);
    TreeNode& tn = nodes[static_cast<std::size_t>(node_id)];
    tn.feature = best_feature;
    tn.threshold = best_threshold;
    tn.left = left_id;
    tn.right = right_id;
    return node_id;
  }
};

}  // namespace

FittedModel forest_fit(const Eigen::Ref<const Eigen::MatrixXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& y,
                       const ForestOptions& options, bool classification) {
  if (!x.allFinite() || !y.allFinite()) {
    throw ValidationError("non-finite values in model inputs");
  }
  if (x.rows() != y.size()) {
    throw ConsistencyError("design rows and target length differ");
  }
  if (x.rows() < 2) throw ValidationError("forest needs at least 2 rows");
  if (options.n_trees < 1) throw ConfigError("forest needs at least one tree");
  if (options.max_depth < 1) throw ConfigError("forest max_depth must be >= 1");
  if (classification) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (y[i] != 0.0 && y[i] != 1.0) {
        throw ValidationError("forest classification labels must be 0 or 1");
      }
    }
  }

  FittedModel model;
  model.kind = classification ? ModelKind::random_forest_clf
                              : ModelKind::random_forest_reg;
  model.forest_options = options;
  model.reg = options.max_depth;
  model.standardizer = Standardizer::fit(x);
  const Eigen::MatrixXd xs = model.standardizer.apply(x);
  const Eigen::VectorXd targets = y;

  const int n = static_cast<int>(xs.rows());
  const int p = static_cast<int>(xs.cols());
  const int mtry = std::max(1, static_cast<int>(std::ceil(std::sqrt(
                                   static_cast<double>(p)))));

  model.forest.classification = classification;
  model.forest.trees.reserve(static_cast<std::size_t>(options.n_trees));
  for (int t = 0; t < options.n_trees; ++t) {
    TreeBuilder builder{xs, targets, classification, options.max_depth, mtry,
                        std::mt19937_64(derive_seed(options.seed,
                                                    static_cast<std::uint64_t>(t))),
                        {}, {}, {}};
    builder.feature_pool.resize(static_cast<std::size_t>(p));
    std::iota(builder.feature_pool.begin(), builder.feature_pool.end(), 0);

    std::vector<int> idx;
    idx.reserve(static_cast<std::size_t>(n));
    if (options.bootstrap) {
      std::uniform_int_distribution<int> pick(0, n - 1);
      for (int i = 0; i < n; ++i) idx.push_back(pick(builder.rng));
    } else {
      idx.resize(static_cast<std::size_t>(n));
      std::iota(idx.begin(), idx.end(), 0);
    }

    builder.build(idx, 0);
    Tree tree;
    tree.nodes = std::move(builder.nodes);
    model.forest.trees.push_back(std::move(tree));
  }
  model.info.iterations = options.n_trees;
  return model;
}

}  // namespace drivetraits
