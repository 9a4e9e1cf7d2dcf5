#include <cmath>

#include "imutrace/baselines/nn.hpp"
#include "imutrace/error.hpp"
#include "imutrace/rng.hpp"

namespace imutrace::baselines {

namespace {

enum { kW, kB, kWd, kBd };

// Added to the forget-gate biases after the uniform draw. With a zero-mean
// start the forget gate sits near 0.5 and the cell halves every step, so a
// turn early in a 30-step window never reaches the final state.
constexpr double kForgetBias = 1.0;

Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& a) { return 1.0 / (1.0 + (-a).exp()); }

// Gate blocks of the stacked pre-activation, in order: input, forget,
// candidate, output.
struct Step {
  Eigen::VectorXd v;  // [x_t; h_{t-1}]
  Eigen::ArrayXd i, f, g, o;
  Eigen::ArrayXd c_prev, c, tanh_c;
};

struct Forward {
  std::vector<Step> steps;
  Eigen::VectorXd h;
  Eigen::VectorXd logits;
};

Forward forward(const LstmNet& net, const Eigen::MatrixXd& input) {
  if (input.rows() != kNumChannels || input.cols() != net.input_length) {
    throw DataError("baselines", "lstm expects a 9 x " + std::to_string(net.input_length) + " window, got " +
                                     std::to_string(input.rows()) + " x " + std::to_string(input.cols()));
  }
  const auto& p = net.params.tensors;
  const int h_dim = net.config.hidden;
  Forward fw;
  fw.h = Eigen::VectorXd::Zero(h_dim);
  Eigen::ArrayXd c = Eigen::ArrayXd::Zero(h_dim);
  fw.steps.reserve(static_cast<std::size_t>(input.cols()));
  for (Eigen::Index t = 0; t < input.cols(); ++t) {
    Step s;
    s.v.resize(kNumChannels + h_dim);
    s.v << input.col(t), fw.h;
    const Eigen::ArrayXd a = (p[kW] * s.v + p[kB].col(0)).array();
    s.i = sigmoid(a.segment(0, h_dim));
    s.f = sigmoid(a.segment(h_dim, h_dim));
    s.g = a.segment(2 * h_dim, h_dim).tanh();
    s.o = sigmoid(a.segment(3 * h_dim, h_dim));
    s.c_prev = c;
    c = s.f * c + s.i * s.g;
    s.c = c;
    s.tanh_c = c.tanh();
    fw.h = (s.o * s.tanh_c).matrix();
    fw.steps.push_back(std::move(s));
  }
  fw.logits = p[kWd] * fw.h + p[kBd].col(0);
  return fw;
}

}  // namespace

LstmNet LstmNet::init(const LstmConfig& cfg, int input_length) {
  cfg.validate();
  if (input_length < 1) throw ConfigError("baselines", "lstm needs windows of at least one sample");
  LstmNet net;
  net.config = cfg;
  net.input_length = input_length;
  Rng rng = Rng::derive(cfg.seed, 0);
  const int h = cfg.hidden;
  const double fan_gate = kNumChannels + h;
  net.params.names = {"lstm.w", "lstm.b", "dense.w", "dense.b"};
  net.params.tensors = {
      uniform_init(4 * h, kNumChannels + h, fan_gate, rng),
      uniform_init(4 * h, 1, fan_gate, rng),
      uniform_init(kNumLabels, h, h, rng),
      uniform_init(kNumLabels, 1, h, rng),
  };
  net.params.tensors[kB].middleRows(h, h).array() += kForgetBias;
  return net;
}

Eigen::VectorXd LstmNet::logits(const Eigen::MatrixXd& input) const { return forward(*this, input).logits; }

double loss_and_grad(const LstmNet& net, std::span<const Eigen::MatrixXd> inputs, std::span<const int> labels,
                     ParamSet* grad) {
  if (inputs.empty() || inputs.size() != labels.size()) throw DataError("baselines", "empty or unlabeled batch");
  const auto& p = net.params.tensors;
  const int h_dim = net.config.hidden;
  if (grad) *grad = net.params.zeros_like();
  const double inv_n = 1.0 / static_cast<double>(inputs.size());
  double loss = 0.0;

  for (std::size_t n = 0; n < inputs.size(); ++n) {
    const Forward fw = forward(net, inputs[n]);
    const Eigen::VectorXd prob = softmax(fw.logits);
    loss -= std::log(std::max(prob(labels[n]), 1e-300)) * inv_n;
    if (!grad) continue;
    auto& g = grad->tensors;

    Eigen::VectorXd d_logits = prob;
    d_logits(labels[n]) -= 1.0;
    d_logits *= inv_n;
    g[kWd] += d_logits * fw.h.transpose();
    g[kBd] += d_logits;

    Eigen::ArrayXd dh = (p[kWd].transpose() * d_logits).array();
    Eigen::ArrayXd dc = Eigen::ArrayXd::Zero(h_dim);
    Eigen::VectorXd da(4 * h_dim);
    for (auto it = fw.steps.rbegin(); it != fw.steps.rend(); ++it) {
      const Step& s = *it;
      const Eigen::ArrayXd d_o = dh * s.tanh_c;
      dc += dh * s.o * (1.0 - s.tanh_c.square());
      const Eigen::ArrayXd d_i = dc * s.g;
      const Eigen::ArrayXd d_g = dc * s.i;
      const Eigen::ArrayXd d_f = dc * s.c_prev;
      da.segment(0, h_dim) = (d_i * s.i * (1.0 - s.i)).matrix();
      da.segment(h_dim, h_dim) = (d_f * s.f * (1.0 - s.f)).matrix();
      da.segment(2 * h_dim, h_dim) = (d_g * (1.0 - s.g.square())).matrix();
      da.segment(3 * h_dim, h_dim) = (d_o * s.o * (1.0 - s.o)).matrix();
      g[kW] += da * s.v.transpose();
      g[kB] += da;
      dh = (p[kW].rightCols(h_dim).transpose() * da).array();
      dc = dc * s.f;
    }
  }
  return loss;
}

}  // namespace imutrace::baselines
