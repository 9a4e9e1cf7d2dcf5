#include <cmath>

#include "imutrace/baselines/nn.hpp"
#include "imutrace/error.hpp"
#include "imutrace/rng.hpp"

namespace imutrace::baselines {

namespace {

enum { kW1, kB1, kW2, kB2, kWd, kBd };

/// Column t holds the receptive field of output t, rows ordered (channel, tap).
Eigen::MatrixXd im2col(const Eigen::MatrixXd& x, int kernel) {
  const Eigen::Index out_len = x.cols() - kernel + 1;
  Eigen::MatrixXd cols(x.rows() * kernel, out_len);
  for (Eigen::Index t = 0; t < out_len; ++t) {
    for (Eigen::Index c = 0; c < x.rows(); ++c) {
      cols.block(c * kernel, t, kernel, 1) = x.block(c, t, 1, kernel).transpose();
    }
  }
  return cols;
}

struct Shapes {
  int l1, l2, l3;
};

Shapes shapes_for(const CnnConfig& cfg, int input_length) {
  Shapes s{};
  s.l1 = input_length - cfg.kernel1 + 1;
  s.l2 = s.l1 / cfg.pool;
  s.l3 = s.l2 - cfg.kernel2 + 1;
  return s;
}

struct Forward {
  Eigen::MatrixXd x1;      // im2col of the input
  Eigen::MatrixXd z1;      // F1 x l1 pre-activation
  Eigen::MatrixXd pooled;  // F1 x l2
  Eigen::MatrixXi argmax;  // F1 x l2, index into l1
  Eigen::MatrixXd x2;      // im2col of pooled
  Eigen::MatrixXd z2;      // F2 x l3
  Eigen::VectorXd gap;     // F2
  Eigen::VectorXd logits;
};

Forward forward(const CnnNet& net, const Eigen::MatrixXd& input) {
  const CnnConfig& cfg = net.config;
  if (input.rows() != kNumChannels || input.cols() != net.input_length) {
    throw DataError("baselines", "cnn expects a 9 x " + std::to_string(net.input_length) + " window, got " +
                                     std::to_string(input.rows()) + " x " + std::to_string(input.cols()));
  }
  const auto& p = net.params.tensors;
  const Shapes s = shapes_for(cfg, net.input_length);
  Forward f;
  f.x1 = im2col(input, cfg.kernel1);
  f.z1 = (p[kW1] * f.x1).colwise() + p[kB1].col(0);
  const Eigen::MatrixXd a1 = f.z1.cwiseMax(0.0);
  f.pooled.resize(cfg.filters1, s.l2);
  f.argmax.resize(cfg.filters1, s.l2);
  for (int c = 0; c < cfg.filters1; ++c) {
    for (int u = 0; u < s.l2; ++u) {
      int best = u * cfg.pool;
      for (int k = 1; k < cfg.pool; ++k) {
        if (a1(c, u * cfg.pool + k) > a1(c, best)) best = u * cfg.pool + k;
      }
      f.argmax(c, u) = best;
      f.pooled(c, u) = a1(c, best);
    }
  }
  f.x2 = im2col(f.pooled, cfg.kernel2);
  f.z2 = (p[kW2] * f.x2).colwise() + p[kB2].col(0);
  f.gap = f.z2.cwiseMax(0.0).rowwise().mean();
  f.logits = p[kWd] * f.gap + p[kBd].col(0);
  return f;
}

}  // namespace

CnnNet CnnNet::init(const CnnConfig& cfg, int input_length) {
  cfg.validate();
  const Shapes s = shapes_for(cfg, input_length);
  if (s.l1 < 1 || s.l2 < 1 || s.l3 < 1) {
    throw ConfigError("baselines", "window length " + std::to_string(input_length) + " is too short for the cnn");
  }
  CnnNet net;
  net.config = cfg;
  net.input_length = input_length;
  Rng rng = Rng::derive(cfg.seed, 0);
  const double fan1 = kNumChannels * cfg.kernel1;
  const double fan2 = static_cast<double>(cfg.filters1) * cfg.kernel2;
  const double fand = cfg.filters2;
  net.params.names = {"conv1.w", "conv1.b", "conv2.w", "conv2.b", "dense.w", "dense.b"};
  net.params.tensors = {
      uniform_init(cfg.filters1, kNumChannels * cfg.kernel1, fan1, rng),
      uniform_init(cfg.filters1, 1, fan1, rng),
      uniform_init(cfg.filters2, static_cast<Eigen::Index>(cfg.filters1) * cfg.kernel2, fan2, rng),
      uniform_init(cfg.filters2, 1, fan2, rng),
      uniform_init(kNumLabels, cfg.filters2, fand, rng),
      uniform_init(kNumLabels, 1, fand, rng),
  };
  return net;
}

Eigen::VectorXd CnnNet::logits(const Eigen::MatrixXd& input) const { return forward(*this, input).logits; }

double loss_and_grad(const CnnNet& net, std::span<const Eigen::MatrixXd> inputs, std::span<const int> labels,
                     ParamSet* grad) {
  if (inputs.empty() || inputs.size() != labels.size()) throw DataError("baselines", "empty or unlabeled batch");
  const CnnConfig& cfg = net.config;
  const auto& p = net.params.tensors;
  if (grad) *grad = net.params.zeros_like();
  const double inv_n = 1.0 / static_cast<double>(inputs.size());
  double loss = 0.0;

  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Forward f = forward(net, inputs[i]);
    const Eigen::VectorXd prob = softmax(f.logits);
    loss -= std::log(std::max(prob(labels[i]), 1e-300)) * inv_n;
    if (!grad) continue;
    auto& g = grad->tensors;

    Eigen::VectorXd d_logits = prob;
    d_logits(labels[i]) -= 1.0;
    d_logits *= inv_n;
    g[kWd] += d_logits * f.gap.transpose();
    g[kBd] += d_logits;

    const Eigen::VectorXd d_gap = p[kWd].transpose() * d_logits;
    const double inv_l3 = 1.0 / static_cast<double>(f.z2.cols());
    const Eigen::MatrixXd d_z2 =
        (f.z2.array() > 0.0).cast<double>().colwise() * (d_gap.array() * inv_l3);
    g[kW2] += d_z2 * f.x2.transpose();
    g[kB2] += d_z2.rowwise().sum();

    const Eigen::MatrixXd d_x2 = p[kW2].transpose() * d_z2;
    Eigen::MatrixXd d_pooled = Eigen::MatrixXd::Zero(f.pooled.rows(), f.pooled.cols());
    for (Eigen::Index t = 0; t < d_x2.cols(); ++t) {
      for (Eigen::Index c = 0; c < f.pooled.rows(); ++c) {
        d_pooled.block(c, t, 1, cfg.kernel2) += d_x2.block(c * cfg.kernel2, t, cfg.kernel2, 1).transpose();
      }
    }
    Eigen::MatrixXd d_z1 = Eigen::MatrixXd::Zero(f.z1.rows(), f.z1.cols());
    for (Eigen::Index c = 0; c < d_pooled.rows(); ++c) {
      for (Eigen::Index u = 0; u < d_pooled.cols(); ++u) {
        const int src = f.argmax(c, u);
        if (f.z1(c, src) > 0.0) d_z1(c, src) += d_pooled(c, u);
      }
    }
    g[kW1] += d_z1 * f.x1.transpose();
    g[kB1] += d_z1.rowwise().sum();
  }
  return loss;
}

}  // namespace imutrace::baselines
