#include "imutrace/baselines/features.hpp"

#include <cmath>

#include "imutrace/error.hpp"

namespace imutrace::baselines {

FeatureVector extract_features(const TrajectoryWindow& window) {
  if (window.samples.empty()) {
    throw DataError("baselines", "cannot extract features from empty window '" + window.id + "'");
  }
  const Eigen::MatrixXd data = window.channels();
  const double n = static_cast<double>(data.cols());

  FeatureVector f;
  for (int c = 0; c < kNumChannels; ++c) {
    const auto row = data.row(c);
    const double mean = row.mean();
    const double var = (row.array() - mean).square().sum() / n;
    f.segment<kStatsPerChannel>(kStatsPerChannel * c) << mean, std::sqrt(std::max(0.0, var)),
        row.minCoeff(), row.maxCoeff(), std::sqrt(row.squaredNorm() / n);
  }
  const double dt = window.rate > 0.0 ? 1.0 / window.rate : 0.0;
  for (int a = 0; a < 3; ++a) f(45 + a) = trapezoid(data.row(3 + a), dt);
  return f;
}

Eigen::MatrixXd feature_matrix(std::span<const TrajectoryWindow> windows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(windows.size()), kFeatureDim);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = extract_features(windows[i]).transpose();
  }
  return out;
}

std::string_view to_string(FeatureScaling scaling) {
  switch (scaling) {
    case FeatureScaling::None: return "none";
    case FeatureScaling::ZScore: return "zscore";
    case FeatureScaling::Range: return "range";
  }
  return "?";
}

FeatureScaling parse_feature_scaling(std::string_view text) {
  for (const auto s : {FeatureScaling::None, FeatureScaling::ZScore, FeatureScaling::Range}) {
    if (text == to_string(s)) return s;
  }
  throw ConfigError("baselines", "unknown feature scaling '" + std::string(text) + "' (expected none, zscore or range)");
}

FeatureScaler FeatureScaler::fit(const Eigen::MatrixXd& rows, FeatureScaling scaling) {
  FeatureScaler s;
  s.center = Eigen::VectorXd::Zero(rows.cols());
  s.scale = Eigen::VectorXd::Ones(rows.cols());
  if (rows.rows() == 0 || scaling == FeatureScaling::None) return s;
  Eigen::VectorXd spread;
  if (scaling == FeatureScaling::ZScore) {
    s.center = rows.colwise().mean().transpose();
    const Eigen::MatrixXd centered = rows.rowwise() - s.center.transpose();
    spread = (centered.array().square().colwise().sum() / static_cast<double>(rows.rows())).sqrt().transpose();
  } else {
    const Eigen::VectorXd hi = rows.colwise().maxCoeff().transpose();
    const Eigen::VectorXd lo = rows.colwise().minCoeff().transpose();
    s.center = 0.5 * (hi + lo);
    spread = 0.5 * (hi - lo);
  }
  for (Eigen::Index j = 0; j < spread.size(); ++j) s.scale(j) = spread(j) > 1e-12 ? spread(j) : 1.0;
  return s;
}

Eigen::MatrixXd FeatureScaler::apply(const Eigen::MatrixXd& rows) const {
  return (rows.rowwise() - center.transpose()).array().rowwise() / scale.transpose().array();
}

Eigen::VectorXd FeatureScaler::apply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return (x - center).cwiseQuotient(scale);
}

std::vector<int> label_indices(std::span<const TrajectoryWindow> windows) {
  std::vector<int> out;
  out.reserve(windows.size());
  for (const TrajectoryWindow& w : windows) {
    if (!w.label) throw DataError("baselines", "training window '" + w.id + "' has no label");
    out.push_back(label_index(*w.label));
  }
  return out;
}

}  // namespace imutrace::baselines
