#include <algorithm>
#include <cmath>
#include <numeric>

#include "imutrace/baselines/features.hpp"
#include "imutrace/baselines/nn.hpp"
#include "imutrace/error.hpp"
#include "imutrace/rng.hpp"

namespace imutrace::baselines {

void NetTrainingConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("baselines", "learning_rate must be > 0");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("baselines", "momentum must be in [0, 1)");
  if (epochs < 1) throw ConfigError("baselines", "epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("baselines", "batch_size must be >= 1");
}

namespace {

nlohmann::json training_json(const NetTrainingConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"momentum", c.momentum},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed}};
}

void read_training(const nlohmann::json& j, NetTrainingConfig& c) {
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.momentum = j.value("momentum", c.momentum);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
}

}  // namespace

void CnnConfig::validate() const {
  NetTrainingConfig::validate();
  if (filters1 < 1 || filters2 < 1) throw ConfigError("baselines", "cnn filter counts must be >= 1");
  if (kernel1 < 1 || kernel2 < 1) throw ConfigError("baselines", "cnn kernel sizes must be >= 1");
  if (pool < 1) throw ConfigError("baselines", "cnn pool size must be >= 1");
}

nlohmann::json CnnConfig::to_json() const {
  nlohmann::json j = training_json(*this);
  j["filters1"] = filters1;
  j["kernel1"] = kernel1;
  j["filters2"] = filters2;
  j["kernel2"] = kernel2;
  j["pool"] = pool;
  return j;
}

CnnConfig CnnConfig::from_json(const nlohmann::json& j, CnnConfig base) {
  read_training(j, base);
  base.filters1 = j.value("filters1", base.filters1);
  base.kernel1 = j.value("kernel1", base.kernel1);
  base.filters2 = j.value("filters2", base.filters2);
  base.kernel2 = j.value("kernel2", base.kernel2);
  base.pool = j.value("pool", base.pool);
  return base;
}

void LstmConfig::validate() const {
  NetTrainingConfig::validate();
  if (hidden < 1) throw ConfigError("baselines", "lstm hidden size must be >= 1");
}

nlohmann::json LstmConfig::to_json() const {
  nlohmann::json j = training_json(*this);
  j["hidden"] = hidden;
  return j;
}

LstmConfig LstmConfig::from_json(const nlohmann::json& j, LstmConfig base) {
  read_training(j, base);
  base.hidden = j.value("hidden", base.hidden);
  return base;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  out.names = names;
  for (const auto& t : tensors) out.tensors.push_back(Eigen::MatrixXd::Zero(t.rows(), t.cols()));
  return out;
}

std::size_t ParamSet::size() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += static_cast<std::size_t>(t.size());
  return n;
}

ChannelScaler ChannelScaler::fit(std::span<const Eigen::MatrixXd> inputs) {
  ChannelScaler s;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(kNumChannels);
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(kNumChannels);
  double count = 0.0;
  for (const auto& x : inputs) {
    sum += x.rowwise().sum();
    sum_sq += x.array().square().rowwise().sum().matrix();
    count += static_cast<double>(x.cols());
  }
  if (count == 0.0) return s;
  s.mean = sum / count;
  for (int c = 0; c < kNumChannels; ++c) {
    const double var = std::max(0.0, sum_sq(c) / count - s.mean(c) * s.mean(c));
    const double sd = std::sqrt(var);
    s.scale(c) = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Eigen::MatrixXd ChannelScaler::apply(const Eigen::MatrixXd& input) const {
  if (input.rows() != kNumChannels) throw DataError("baselines", "network input must have 9 channels");
  return (input.colwise() - mean).array().colwise() / scale.array();
}

Eigen::MatrixXd uniform_init(Eigen::Index rows, Eigen::Index cols, double fan_in, Rng& rng) {
  const double s = 1.0 / std::sqrt(fan_in);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(-s, s);
  }
  return m;
}

Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  const Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

NetPrediction classify_logits(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  NetPrediction p;
  p.probabilities = softmax(logits);
  p.label = label_from_index(argmax_first(p.probabilities));
  return p;
}

namespace {

template <typename Net>
EpochLog evaluate_epoch(const Net& net, std::span<const Eigen::MatrixXd> inputs, std::span<const int> labels,
                        int epoch) {
  EpochLog log;
  log.epoch = epoch;
  log.loss = loss_and_grad(net, inputs, labels, nullptr);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (argmax_first(net.logits(inputs[i])) == labels[i]) ++correct;
  }
  log.train_accuracy = static_cast<double>(correct) / static_cast<double>(inputs.size());
  return log;
}

}  // namespace

template <typename Net>
std::vector<EpochLog> train_network(Net& net, std::span<const Eigen::MatrixXd> inputs,
                                    std::span<const int> labels) {
  const auto& cfg = net.config;
  cfg.validate();
  if (inputs.empty() || inputs.size() != labels.size()) {
    throw DataError("baselines", "network training needs non-empty, labeled data");
  }
  for (const auto& x : inputs) {
    if (x.cols() != net.input_length) throw DataError("baselines", "all training windows must have the same length");
  }

  ParamSet velocity = net.params.zeros_like();
  ParamSet grad = net.params.zeros_like();
  std::vector<std::size_t> order(inputs.size());
  std::vector<Eigen::MatrixXd> batch_x;
  std::vector<int> batch_y;
  std::vector<EpochLog> curve;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng::derive(cfg.seed, static_cast<std::uint64_t>(epoch));
    rng.shuffle(std::span(order));
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch_x.clear();
      batch_y.clear();
      for (std::size_t k = start; k < end; ++k) {
        batch_x.push_back(inputs[order[k]]);
        batch_y.push_back(labels[order[k]]);
      }
      const double loss = loss_and_grad(net, batch_x, batch_y, &grad);
      if (!std::isfinite(loss)) {
        throw TrainingError("loss became non-finite in epoch " + std::to_string(epoch) +
                            "; try a lower learning rate (currently " + std::to_string(cfg.learning_rate) + ")");
      }
      for (std::size_t t = 0; t < net.params.tensors.size(); ++t) {
        velocity.tensors[t] = cfg.momentum * velocity.tensors[t] - cfg.learning_rate * grad.tensors[t];
        net.params.tensors[t] += velocity.tensors[t];
      }
    }
    EpochLog log = evaluate_epoch(net, inputs, labels, epoch);
    if (!std::isfinite(log.loss)) {
      throw TrainingError("loss became non-finite after epoch " + std::to_string(epoch) +
                          "; try a lower learning rate (currently " + std::to_string(cfg.learning_rate) + ")");
    }
    curve.push_back(log);
  }
  return curve;
}

template std::vector<EpochLog> train_network<CnnNet>(CnnNet&, std::span<const Eigen::MatrixXd>, std::span<const int>);
template std::vector<EpochLog> train_network<LstmNet>(LstmNet&, std::span<const Eigen::MatrixXd>,
                                                      std::span<const int>);

}  // namespace imutrace::baselines
