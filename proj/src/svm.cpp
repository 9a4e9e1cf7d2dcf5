#include "imutrace/baselines/svm.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "imutrace/error.hpp"

namespace imutrace::baselines {

void SvmConfig::validate() const {
  if (!(c > 0.0)) throw ConfigError("baselines", "svm C must be > 0");
  if (gamma < 0.0) throw ConfigError("baselines", "svm gamma must be >= 0");
  if (!(tolerance > 0.0)) throw ConfigError("baselines", "svm tolerance must be > 0");
  if (max_passes < 1) throw ConfigError("baselines", "svm max_passes must be >= 1");
}

nlohmann::json SvmConfig::to_json() const {
  return {{"c", c}, {"gamma", gamma}, {"tolerance", tolerance}, {"max_passes", max_passes},
          {"scaling", to_string(scaling)}};
}

SvmConfig SvmConfig::from_json(const nlohmann::json& j, SvmConfig base) {
  base.c = j.value("c", base.c);
  base.gamma = j.value("gamma", base.gamma);
  base.tolerance = j.value("tolerance", base.tolerance);
  base.max_passes = j.value("max_passes", base.max_passes);
  if (j.contains("scaling")) base.scaling = parse_feature_scaling(j.at("scaling").get<std::string>());
  return base;
}

double BinarySvm::decision(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  double sum = bias;
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    if (alpha(i) == 0.0) continue;
    sum += alpha(i) * y(i) * rbf_kernel(points.row(i).transpose(), x, gamma);
  }
  return sum;
}

BinarySvm train_binary_svm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double c, double gamma,
                           double tol, long max_iterations) {
  const Eigen::Index n = x.rows();
  BinarySvm svm;
  svm.points = x;
  svm.y = y;
  svm.alpha = Eigen::VectorXd::Zero(n);
  svm.gamma = gamma;
  svm.c = c;

  const bool has_pos = (y.array() > 0).any();
  const bool has_neg = (y.array() < 0).any();
  if (!has_pos || !has_neg) {
    svm.bias = has_pos ? 1.0 : -1.0;
    svm.converged = true;
    return svm;
  }

  Eigen::MatrixXd q(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      q(i, j) = q(j, i) = y(i) * y(j) * rbf_kernel(x.row(i), x.row(j), gamma);
    }
  }

  Eigen::VectorXd& alpha = svm.alpha;
  Eigen::VectorXd grad = -Eigen::VectorXd::Ones(n);  // Q alpha - 1
  const auto in_up = [&](Eigen::Index t) { return (y(t) > 0 && alpha(t) < c) || (y(t) < 0 && alpha(t) > 0); };
  const auto in_low = [&](Eigen::Index t) { return (y(t) > 0 && alpha(t) > 0) || (y(t) < 0 && alpha(t) < c); };
  constexpr double kTau = 1e-12;

  for (svm.iterations = 0; svm.iterations < max_iterations; ++svm.iterations) {
    Eigen::Index i = -1, j = -1;
    double g_max = -std::numeric_limits<double>::infinity();
    double g_min = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      const double v = -y(t) * grad(t);
      if (in_up(t) && v > g_max) {
        g_max = v;
        i = t;
      }
      if (in_low(t) && v < g_min) {
        g_min = v;
        j = t;
      }
    }
    if (i < 0 || j < 0 || g_max - g_min < tol) {
      svm.converged = true;
      break;
    }

    const double old_ai = alpha(i), old_aj = alpha(j);
    if (y(i) != y(j)) {
      double quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0) {
        if (alpha(j) < 0) alpha(j) = 0, alpha(i) = diff;
      } else {
        if (alpha(i) < 0) alpha(i) = 0, alpha(j) = -diff;
      }
      if (diff > 0) {
        if (alpha(i) > c) alpha(i) = c, alpha(j) = c - diff;
      } else {
        if (alpha(j) > c) alpha(j) = c, alpha(i) = c + diff;
      }
    } else {
      double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > c) {
        if (alpha(i) > c) alpha(i) = c, alpha(j) = sum - c;
      } else {
        if (alpha(j) < 0) alpha(j) = 0, alpha(i) = sum;
      }
      if (sum > c) {
        if (alpha(j) > c) alpha(j) = c, alpha(i) = sum - c;
      } else {
        if (alpha(i) < 0) alpha(i) = 0, alpha(j) = sum;
      }
    }
    const double d_ai = alpha(i) - old_ai, d_aj = alpha(j) - old_aj;
    grad += q.col(i) * d_ai + q.col(j) * d_aj;
  }

  // Bias from the free duals, or the midpoint of the feasible interval when
  // every dual sits at a bound.
  double upper = std::numeric_limits<double>::infinity();
  double lower = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  int free_count = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y(t) * grad(t);
    if (alpha(t) >= c) {
      if (y(t) < 0) upper = std::min(upper, yg);
      else lower = std::max(lower, yg);
    } else if (alpha(t) <= 0) {
      if (y(t) > 0) upper = std::min(upper, yg);
      else lower = std::max(lower, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  const double rho = free_count > 0 ? free_sum / free_count : 0.5 * (upper + lower);
  svm.bias = -rho;
  return svm;
}

double max_kkt_violation(const BinarySvm& svm) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < svm.alpha.size(); ++i) {
    const double yf = svm.y(i) * svm.decision(svm.points.row(i).transpose());
    double violation = 0.0;
    if (svm.alpha(i) <= 0.0) {
      violation = std::max(0.0, 1.0 - yf);
    } else if (svm.alpha(i) >= svm.c) {
      violation = std::max(0.0, yf - 1.0);
    } else {
      violation = std::abs(yf - 1.0);
    }
    worst = std::max(worst, violation);
  }
  return worst;
}

double resolve_gamma(const SvmConfig& cfg, const Eigen::MatrixXd& scaled) {
  if (cfg.gamma > 0.0) return cfg.gamma;
  const double d = static_cast<double>(scaled.cols());
  const double mean = scaled.mean();
  const double var = (scaled.array() - mean).square().mean();
  return var > 0.0 ? 1.0 / (d * var) : 1.0 / d;
}

SvmModel train_svm(const Eigen::MatrixXd& x, std::span<const int> y, const SvmConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(x.rows());
  if (n == 0 || y.size() != n) throw DataError("baselines", "svm needs non-empty, labeled data");
  if (!x.allFinite()) throw DataError("baselines", "svm features must be finite");
  if (std::set<int>(y.begin(), y.end()).size() < 2) throw DataError("baselines", "svm needs at least 2 classes");

  SvmModel model;
  model.scaler = FeatureScaler::fit(x, cfg.scaling);
  const Eigen::MatrixXd z = model.scaler.apply(x);
  model.gamma = resolve_gamma(cfg, z);
  const long cap = static_cast<long>(cfg.max_passes) * static_cast<long>(n);
  for (int k = 0; k < kNumLabels; ++k) {
    Eigen::VectorXd target(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) target(static_cast<Eigen::Index>(i)) = y[i] == k ? 1.0 : -1.0;
    model.machines[k] = train_binary_svm(z, target, cfg.c, model.gamma, cfg.tolerance, cap);
  }
  return model;
}

SvmScores predict_svm(const SvmModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != model.scaler.center.size()) {
    throw DataError("baselines", "feature dimension " + std::to_string(x.size()) + " does not match the svm");
  }
  const Eigen::VectorXd z = model.scaler.apply(x);
  SvmScores scores;
  Eigen::Vector<double, kNumLabels> d;
  for (int k = 0; k < kNumLabels; ++k) d(k) = scores.decision[k] = model.machines[k].decision(z);
  scores.label = label_from_index(argmax_first(d));
  return scores;
}

}  // namespace imutrace::baselines
