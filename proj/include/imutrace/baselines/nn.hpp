#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "imutrace/imu.hpp"

namespace imutrace {
class Rng;
}

namespace imutrace::baselines {

/// Settings shared by the two network baselines.
struct NetTrainingConfig {
  double learning_rate = 1e-2;
  double momentum = 0.9;
  int epochs = 40;
  int batch_size = 8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct CnnConfig : NetTrainingConfig {
  int filters1 = 16;
  int kernel1 = 5;
  int filters2 = 32;
  int kernel2 = 5;
  int pool = 2;

  void validate() const;
  nlohmann::json to_json() const;
  static CnnConfig from_json(const nlohmann::json& j, CnnConfig base);
  static CnnConfig from_json(const nlohmann::json& j) { return from_json(j, CnnConfig{}); }
};

struct LstmConfig : NetTrainingConfig {
  int hidden = 32;

  LstmConfig() { epochs = 100; }

  void validate() const;
  nlohmann::json to_json() const;
  static LstmConfig from_json(const nlohmann::json& j, LstmConfig base);
  static LstmConfig from_json(const nlohmann::json& j) { return from_json(j, LstmConfig{}); }
};

/// Named parameter tensors; gradients share the same layout.
struct ParamSet {
  std::vector<std::string> names;
  std::vector<Eigen::MatrixXd> tensors;

  ParamSet zeros_like() const;
  std::size_t size() const;  // total scalar count
};

/// Per-channel z-scoring of raw 9 x T inputs, fitted on the training windows.
struct ChannelScaler {
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(kNumChannels);
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(kNumChannels);

  static ChannelScaler fit(std::span<const Eigen::MatrixXd> inputs);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& input) const;
};

/// rows x cols drawn from uniform(-s, s), s = 1 / sqrt(fan_in), column-major.
Eigen::MatrixXd uniform_init(Eigen::Index rows, Eigen::Index cols, double fan_in, Rng& rng);

/// Numerically stable softmax.
Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits);

// --- 1-D CNN: conv -> ReLU -> maxpool -> conv -> ReLU -> global average
// pool -> dense(4) -> softmax. Inputs are 9 x T with valid convolutions.

struct CnnNet {
  CnnConfig config;
  int input_length = 0;
  ParamSet params;  // w1, b1, w2, b2, wd, bd

  static CnnNet init(const CnnConfig& cfg, int input_length);
  Eigen::VectorXd logits(const Eigen::MatrixXd& input) const;
};

// --- LSTM: input/forget/cell/output gates, final hidden state -> dense(4).

struct LstmNet {
  LstmConfig config;
  int input_length = 0;
  ParamSet params;  // w (4H x (9+H)), b (4H), wd (4 x H), bd

  static LstmNet init(const LstmConfig& cfg, int input_length);
  Eigen::VectorXd logits(const Eigen::MatrixXd& input) const;
};

/// Mean cross-entropy over the batch; fills grad (same layout as the
/// network's params) when non-null.
double loss_and_grad(const CnnNet& net, std::span<const Eigen::MatrixXd> inputs, std::span<const int> labels,
                     ParamSet* grad);
double loss_and_grad(const LstmNet& net, std::span<const Eigen::MatrixXd> inputs, std::span<const int> labels,
                     ParamSet* grad);

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double train_accuracy = 0.0;
};

/// Mini-batch SGD with momentum over a fixed, seeded batch order. Inputs are
/// expected to be scaled already. Throws TrainingError on a non-finite loss.
template <typename Net>
std::vector<EpochLog> train_network(Net& net, std::span<const Eigen::MatrixXd> inputs,
                                    std::span<const int> labels);

struct NetPrediction {
  TrajectoryLabel label = TrajectoryLabel::Straight;
  Eigen::VectorXd probabilities;
};

/// Argmax of softmax(logits), ties to the earlier label.
NetPrediction classify_logits(const Eigen::Ref<const Eigen::VectorXd>& logits);

}  // namespace imutrace::baselines
