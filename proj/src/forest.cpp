#include "imutrace/baselines/forest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <thread>

#include "imutrace/baselines/features.hpp"
#include "imutrace/error.hpp"
#include "imutrace/rng.hpp"

namespace imutrace::baselines {

void RfConfig::validate() const {
  if (trees < 1) throw ConfigError("baselines", "rf trees must be >= 1");
  if (max_depth < 0) throw ConfigError("baselines", "rf max_depth must be >= 0");
  if (features_per_split < 0) throw ConfigError("baselines", "rf features_per_split must be >= 0");
  if (min_samples_split < 2) throw ConfigError("baselines", "rf min_samples_split must be >= 2");
  if (threads < 0) throw ConfigError("baselines", "rf threads must be >= 0");
}

nlohmann::json RfConfig::to_json() const {
  return {{"trees", trees},
          {"max_depth", max_depth},
          {"features_per_split", features_per_split},
          {"min_samples_split", min_samples_split},
          {"bootstrap", bootstrap},
          {"seed", seed}};
}

RfConfig RfConfig::from_json(const nlohmann::json& j, RfConfig base) {
  base.trees = j.value("trees", base.trees);
  base.max_depth = j.value("max_depth", base.max_depth);
  base.features_per_split = j.value("features_per_split", base.features_per_split);
  base.min_samples_split = j.value("min_samples_split", base.min_samples_split);
  base.bootstrap = j.value("bootstrap", base.bootstrap);
  base.seed = j.value("seed", base.seed);
  return base;
}

int DecisionTree::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  int node = 0;
  while (nodes[node].feature >= 0) {
    const TreeNode& n = nodes[node];
    node = x(n.feature) <= n.threshold ? n.left : n.right;
  }
  return nodes[node].label;
}

int DecisionTree::depth() const {
  std::function<int(int)> walk = [&](int node) -> int {
    if (nodes[node].feature < 0) return 0;
    return 1 + std::max(walk(nodes[node].left), walk(nodes[node].right));
  };
  return nodes.empty() ? 0 : walk(0);
}

double gini(const std::array<int, kNumLabels>& counts) {
  const int total = std::accumulate(counts.begin(), counts.end(), 0);
  if (total == 0) return 0.0;
  double sum_sq = 0.0;
  for (int c : counts) {
    const double p = static_cast<double>(c) / total;
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

std::optional<SplitCandidate> find_best_split(const Eigen::MatrixXd& x, std::span<const int> y,
                                              std::span<const std::size_t> rows,
                                              std::span<const int> features) {
  const auto n = static_cast<int>(rows.size());
  std::array<int, kNumLabels> total{};
  for (const std::size_t r : rows) ++total[y[r]];

  std::optional<SplitCandidate> best;
  std::vector<std::pair<double, int>> column(rows.size());
  for (const int f : features) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      column[i] = {x(static_cast<Eigen::Index>(rows[i]), f), y[rows[i]]};
    }
    std::sort(column.begin(), column.end());
    std::array<int, kNumLabels> left{};
    for (int i = 0; i + 1 < n; ++i) {
      ++left[column[i].second];
      if (column[i].first == column[i + 1].first) continue;
      std::array<int, kNumLabels> right{};
      for (int k = 0; k < kNumLabels; ++k) right[k] = total[k] - left[k];
      const int n_left = i + 1;
      const double impurity = (n_left * gini(left) + (n - n_left) * gini(right)) / n;
      if (!best || impurity < best->weighted_impurity) {
        best = SplitCandidate{f, 0.5 * (column[i].first + column[i + 1].first), impurity};
      }
    }
  }
  return best;
}

namespace {

int majority(const std::array<int, kNumLabels>& counts) {
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

}  // namespace

DecisionTree grow_tree(const Eigen::MatrixXd& x, std::span<const int> y,
                       std::span<const std::size_t> rows, const RfConfig& cfg,
                       std::uint64_t tree_seed) {
  const auto dim = static_cast<int>(x.cols());
  const int mtry = cfg.features_per_split > 0
                       ? std::min(cfg.features_per_split, dim)
                       : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(dim)))));
  Rng rng(tree_seed);
  DecisionTree tree;
  std::vector<int> all_features(static_cast<std::size_t>(dim));
  std::iota(all_features.begin(), all_features.end(), 0);

  struct Pending {
    int node;
    std::vector<std::size_t> rows;
    int depth;
  };
  std::vector<Pending> stack;
  tree.nodes.emplace_back();
  stack.push_back({0, std::vector<std::size_t>(rows.begin(), rows.end()), 0});

  while (!stack.empty()) {
    Pending job = std::move(stack.back());
    stack.pop_back();
    std::array<int, kNumLabels> counts{};
    for (const std::size_t r : job.rows) ++counts[y[r]];
    tree.nodes[job.node].label = majority(counts);

    const bool pure = gini(counts) == 0.0;
    const bool depth_capped = cfg.max_depth > 0 && job.depth >= cfg.max_depth;
    if (pure || depth_capped || static_cast<int>(job.rows.size()) < cfg.min_samples_split) continue;

    // Draw a fresh feature subset; if every drawn feature is constant here,
    // fall back to the remaining features so a splittable node still splits.
    std::vector<int> order = all_features;
    rng.shuffle(std::span(order));
    std::optional<SplitCandidate> split =
        find_best_split(x, y, job.rows, std::span(order).first(static_cast<std::size_t>(mtry)));
    if (!split && mtry < dim) {
      split = find_best_split(x, y, job.rows, std::span(order).subspan(static_cast<std::size_t>(mtry)));
    }
    if (!split) continue;

    std::vector<std::size_t> left_rows, right_rows;
    for (const std::size_t r : job.rows) {
      (x(static_cast<Eigen::Index>(r), split->feature) <= split->threshold ? left_rows : right_rows).push_back(r);
    }
    const int left = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    TreeNode& node = tree.nodes[job.node];
    node.feature = split->feature;
    node.threshold = split->threshold;
    node.left = left;
    node.right = left + 1;
    stack.push_back({left + 1, std::move(right_rows), job.depth + 1});
    stack.push_back({left, std::move(left_rows), job.depth + 1});
  }
  return tree;
}

RandomForest train_rf(const Eigen::MatrixXd& x, std::span<const int> y, const RfConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(x.rows());
  if (n == 0 || y.size() != n) throw DataError("baselines", "random forest needs non-empty, labeled data");
  if (!x.allFinite()) throw DataError("baselines", "random forest features must be finite");
  if (std::set<int>(y.begin(), y.end()).size() < 2) {
    throw DataError("baselines", "random forest needs at least 2 classes");
  }

  RandomForest forest;
  forest.dim = static_cast<int>(x.cols());
  forest.trees.resize(static_cast<std::size_t>(cfg.trees));
  std::vector<std::vector<bool>> in_bag(static_cast<std::size_t>(cfg.trees), std::vector<bool>(n, false));

  const auto grow = [&](std::size_t t) {
    Rng rng = Rng::derive(cfg.seed, t);
    std::vector<std::size_t> rows(n);
    if (cfg.bootstrap) {
      for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    for (const std::size_t r : rows) in_bag[t][r] = true;
    forest.trees[t] = grow_tree(x, y, rows, cfg, rng.next_u64());
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const auto workers = std::min<std::size_t>(cfg.threads > 0 ? static_cast<std::size_t>(cfg.threads) : hw,
                                             static_cast<std::size_t>(cfg.trees));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < forest.trees.size(); t += workers) grow(t);
      });
    }
  }

  std::size_t oob_total = 0, oob_correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Vector<double, kNumLabels> votes = Eigen::Vector<double, kNumLabels>::Zero();
    bool any = false;
    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
      if (in_bag[t][i]) continue;
      votes(forest.trees[t].predict(x.row(static_cast<Eigen::Index>(i)).transpose())) += 1.0;
      any = true;
    }
    if (!any) continue;
    ++oob_total;
    if (argmax_first(votes) == y[i]) ++oob_correct;
  }
  forest.oob_accuracy = oob_total > 0 ? static_cast<double>(oob_correct) / static_cast<double>(oob_total) : 0.0;
  return forest;
}

Vote predict_rf(const RandomForest& forest, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != forest.dim) {
    throw DataError("baselines", "feature dimension " + std::to_string(x.size()) + " does not match model dimension " +
                                     std::to_string(forest.dim));
  }
  Eigen::Vector<double, kNumLabels> votes = Eigen::Vector<double, kNumLabels>::Zero();
  for (const DecisionTree& tree : forest.trees) votes(tree.predict(x)) += 1.0;
  Vote vote;
  vote.label = label_from_index(argmax_first(votes));
  for (int k = 0; k < kNumLabels; ++k) vote.shares[k] = votes(k) / static_cast<double>(forest.trees.size());
  return vote;
}

}  // namespace imutrace::baselines
