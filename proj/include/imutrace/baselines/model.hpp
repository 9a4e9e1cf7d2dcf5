#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "imutrace/baselines/forest.hpp"
#include "imutrace/baselines/nn.hpp"
#include "imutrace/baselines/svm.hpp"
#include "imutrace/imu.hpp"

namespace imutrace::baselines {

enum class ModelKind : int { RandomForest = 0, Svm = 1, Cnn = 2, Lstm = 3 };
inline constexpr std::array<ModelKind, 4> kAllModelKinds = {ModelKind::RandomForest, ModelKind::Svm,
                                                            ModelKind::Cnn, ModelKind::Lstm};

/// "rf", "svm", "cnn", "lstm".
std::string_view to_string(ModelKind kind);
/// "RF", "SVM", "CNN", "LSTM".
std::string_view display_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

struct BaselineConfigs {
  RfConfig rf;
  SvmConfig svm;
  CnnConfig cnn;
  LstmConfig lstm;

  void set_seed(std::uint64_t seed);
  void validate() const;
  nlohmann::json to_json() const;
  static BaselineConfigs from_json(const nlohmann::json& j, BaselineConfigs base);
  static BaselineConfigs from_json(const nlohmann::json& j) { return from_json(j, BaselineConfigs{}); }
};

struct TrainingManifest {
  ModelKind kind = ModelKind::RandomForest;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::string data_hash;  // sha256 of the training windows as CSV
  std::size_t train_windows = 0;
  std::optional<double> final_loss;  // networks only
  double final_train_accuracy = 0.0;
  std::optional<double> oob_accuracy;  // random forest only
  std::vector<EpochLog> curve;         // networks only

  nlohmann::json to_json() const;
  static TrainingManifest from_json(const nlohmann::json& j);
};

struct CnnModel {
  ChannelScaler scaler;
  CnnNet net;
};

struct LstmModel {
  ChannelScaler scaler;
  LstmNet net;
};

struct TrainedModel {
  TrainingManifest manifest;
  std::variant<RandomForest, SvmModel, CnnModel, LstmModel> params;

  ModelKind kind() const { return manifest.kind; }
};

/// Trains one baseline on labeled windows. RF and SVM see the 48-dim feature
/// vectors; the networks see the channel-standardized 9 x T windows, which
/// must all have the same length.
TrainedModel train_model(ModelKind kind, std::span<const TrajectoryWindow> train, const BaselineConfigs& cfg);

struct ModelOutput {
  TrajectoryLabel label = TrajectoryLabel::Straight;
  std::array<double, kNumLabels> scores{};  // vote shares, decision values or probabilities
};

ModelOutput predict(const TrainedModel& model, const TrajectoryWindow& window);

inline constexpr int kModelFormatVersion = 1;

nlohmann::json to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

/// CSV with header epoch,loss,train_accuracy.
void write_training_log(std::ostream& out, std::span<const EpochLog> curve);

}  // namespace imutrace::baselines
