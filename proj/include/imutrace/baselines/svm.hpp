#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "imutrace/baselines/features.hpp"
#include "imutrace/imu.hpp"

namespace imutrace::baselines {

struct SvmConfig {
  double c = 10.0;
  double gamma = 0.0;  // 0 = 1 / (d * var(X)) on the scaled features
  double tolerance = 1e-3;
  int max_passes = 1000;  // SMO iteration cap = max_passes * n
  FeatureScaling scaling = FeatureScaling::Range;

  void validate() const;
  nlohmann::json to_json() const;
  static SvmConfig from_json(const nlohmann::json& j, SvmConfig base);
  static SvmConfig from_json(const nlohmann::json& j) { return from_json(j, SvmConfig{}); }
};

template <typename DerivedA, typename DerivedB>
double rbf_kernel(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b, double gamma) {
  return std::exp(-gamma * (a - b).squaredNorm());
}

/// Two-class soft-margin SVM with an RBF kernel. alpha holds the dual of
/// every training point; decision(x) = sum alpha_i y_i k(x_i, x) + bias.
struct BinarySvm {
  Eigen::MatrixXd points;  // training rows
  Eigen::VectorXd y;       // +-1
  Eigen::VectorXd alpha;
  double bias = 0.0;
  double gamma = 1.0;
  double c = 1.0;
  int iterations = 0;
  bool converged = false;

  double decision(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

/// SMO with maximal-violating-pair working-set selection. Stops once the
/// KKT gap m(alpha) - M(alpha) falls below tol or after max_iterations
/// updates. A one-class problem yields a constant machine.
BinarySvm train_binary_svm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double c, double gamma,
                           double tol, long max_iterations);

/// Largest KKT violation over the training points, measured on y * f(x):
/// alpha = 0 needs y f >= 1, 0 < alpha < C needs y f = 1, alpha = C needs
/// y f <= 1.
double max_kkt_violation(const BinarySvm& svm);

struct SvmModel {
  FeatureScaler scaler;
  double gamma = 0.0;
  std::array<BinarySvm, kNumLabels> machines;  // one-vs-rest, index = class
};

/// gamma resolved the way train_svm does it.
double resolve_gamma(const SvmConfig& cfg, const Eigen::MatrixXd& scaled);

SvmModel train_svm(const Eigen::MatrixXd& x, std::span<const int> y, const SvmConfig& cfg);

struct SvmScores {
  TrajectoryLabel label = TrajectoryLabel::Straight;
  std::array<double, kNumLabels> decision{};
};

/// Argmax of the one-vs-rest decision values (ties to the earlier label).
SvmScores predict_svm(const SvmModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

}  // namespace imutrace::baselines
