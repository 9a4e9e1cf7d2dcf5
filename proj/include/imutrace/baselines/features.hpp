#pragma once

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "imutrace/imu.hpp"

namespace imutrace::baselines {

/// Per channel (in kChannelNames order): mean, std, min, max, RMS; then the
/// trapezoid integrals of gx, gy, gz.
inline constexpr int kFeatureDim = 48;
inline constexpr int kStatsPerChannel = 5;
using FeatureVector = Eigen::Matrix<double, kFeatureDim, 1>;

/// Trapezoid rule over uniformly spaced samples.
template <typename Derived>
double trapezoid(const Eigen::DenseBase<Derived>& values, double dt) {
  const Eigen::Index n = values.size();
  if (n < 2) return 0.0;
  return dt * (values.sum() - 0.5 * (values(0) + values(n - 1)));
}

FeatureVector extract_features(const TrajectoryWindow& window);

/// Row i holds the features of windows[i].
Eigen::MatrixXd feature_matrix(std::span<const TrajectoryWindow> windows);

enum class FeatureScaling : int { None = 0, ZScore = 1, Range = 2 };

/// "none", "zscore", "range".
std::string_view to_string(FeatureScaling scaling);
FeatureScaling parse_feature_scaling(std::string_view text);

/// Column-wise affine map (x - center) / scale fitted on training data.
/// ZScore uses mean and population std; Range maps [min, max] onto [-1, 1].
/// Constant columns keep a unit scale.
struct FeatureScaler {
  Eigen::VectorXd center;
  Eigen::VectorXd scale;

  static FeatureScaler fit(const Eigen::MatrixXd& rows, FeatureScaling scaling);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& rows) const;
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

/// Labels of windows as class indices; throws DataError for unlabeled ones.
std::vector<int> label_indices(std::span<const TrajectoryWindow> windows);

/// Lowest index among the maxima, which encodes the fixed tie-break order
/// Straight < TurnRight < TurnLeft < TurnAround.
template <typename Derived>
int argmax_first(const Eigen::DenseBase<Derived>& scores) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i) {
    if (scores(i) > scores(best)) best = i;
  }
  return static_cast<int>(best);
}

}  // namespace imutrace::baselines
