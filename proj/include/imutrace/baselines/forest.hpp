#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "imutrace/imu.hpp"

namespace imutrace::baselines {

struct RfConfig {
  int trees = 100;
  int max_depth = 0;           // 0 = grow until pure
  int features_per_split = 0;  // 0 = floor(sqrt(d))
  int min_samples_split = 2;
  bool bootstrap = true;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = hardware concurrency

  void validate() const;
  nlohmann::json to_json() const;
  static RfConfig from_json(const nlohmann::json& j, RfConfig base);
  static RfConfig from_json(const nlohmann::json& j) { return from_json(j, RfConfig{}); }
};

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0.0;
  int left = -1;  // x[feature] <= threshold
  int right = -1;
  int label = 0;  // majority class at a leaf
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  int predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  int depth() const;
};

struct RandomForest {
  std::vector<DecisionTree> trees;
  int dim = 0;
  double oob_accuracy = 0.0;  // over samples left out by at least one tree
};

/// Gini impurity 1 - sum p_k^2 of class counts.
double gini(const std::array<int, kNumLabels>& counts);

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double weighted_impurity = 0.0;  // (n_left * G_left + n_right * G_right) / n
};

/// Best Gini split of rows over the candidate features; thresholds are
/// midpoints between consecutive distinct values. Ties keep the first
/// (feature order, then threshold order). Empty when every candidate feature
/// is constant over rows.
std::optional<SplitCandidate> find_best_split(const Eigen::MatrixXd& x, std::span<const int> y,
                                              std::span<const std::size_t> rows,
                                              std::span<const int> features);

/// CART tree on the given rows (indices may repeat, as in a bootstrap sample).
DecisionTree grow_tree(const Eigen::MatrixXd& x, std::span<const int> y,
                       std::span<const std::size_t> rows, const RfConfig& cfg,
                       std::uint64_t tree_seed);

/// Trees grown in parallel; tree t uses Rng::derive(seed, t) for its
/// bootstrap and feature subsets, so the forest is thread-count independent.
RandomForest train_rf(const Eigen::MatrixXd& x, std::span<const int> y, const RfConfig& cfg);

struct Vote {
  TrajectoryLabel label = TrajectoryLabel::Straight;
  std::array<double, kNumLabels> shares{};
};

/// Majority vote; ties go to the earlier label in the fixed order.
Vote predict_rf(const RandomForest& forest, const Eigen::Ref<const Eigen::VectorXd>& x);

}  // namespace imutrace::baselines
