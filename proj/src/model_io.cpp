#include <cmath>
#include <fstream>
#include <iomanip>

#include "imutrace/baselines/features.hpp"
#include "imutrace/baselines/model.hpp"
#include "imutrace/error.hpp"
#include "imutrace/hash.hpp"

namespace imutrace::baselines {

using nlohmann::json;

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::RandomForest: return "rf";
    case ModelKind::Svm: return "svm";
    case ModelKind::Cnn: return "cnn";
    case ModelKind::Lstm: return "lstm";
  }
  return "?";
}

std::string_view display_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::RandomForest: return "RF";
    case ModelKind::Svm: return "SVM";
    case ModelKind::Cnn: return "CNN";
    case ModelKind::Lstm: return "LSTM";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  for (const ModelKind k : kAllModelKinds) {
    if (text == to_string(k)) return k;
  }
  throw ConfigError("baselines", "unknown baseline '" + std::string(text) + "' (expected rf, svm, cnn or lstm)");
}

void BaselineConfigs::set_seed(std::uint64_t seed) {
  rf.seed = seed;
  cnn.seed = seed;
  lstm.seed = seed;
}

void BaselineConfigs::validate() const {
  rf.validate();
  svm.validate();
  cnn.validate();
  lstm.validate();
}

json BaselineConfigs::to_json() const {
  return {{"rf", rf.to_json()}, {"svm", svm.to_json()}, {"cnn", cnn.to_json()}, {"lstm", lstm.to_json()}};
}

BaselineConfigs BaselineConfigs::from_json(const json& j, BaselineConfigs base) {
  if (j.contains("rf")) base.rf = RfConfig::from_json(j.at("rf"), base.rf);
  if (j.contains("svm")) base.svm = SvmConfig::from_json(j.at("svm"), base.svm);
  if (j.contains("cnn")) base.cnn = CnnConfig::from_json(j.at("cnn"), base.cnn);
  if (j.contains("lstm")) base.lstm = LstmConfig::from_json(j.at("lstm"), base.lstm);
  return base;
}

json TrainingManifest::to_json() const {
  json j = {{"kind", to_string(kind)},
            {"config", config},
            {"seed", seed},
            {"data_hash", data_hash},
            {"train_windows", train_windows},
            {"final_train_accuracy", final_train_accuracy}};
  j["final_loss"] = final_loss ? json(*final_loss) : json(nullptr);
  j["oob_accuracy"] = oob_accuracy ? json(*oob_accuracy) : json(nullptr);
  json c = json::array();
  for (const EpochLog& e : curve) c.push_back({e.epoch, e.loss, e.train_accuracy});
  j["curve"] = std::move(c);
  return j;
}

TrainingManifest TrainingManifest::from_json(const json& j) {
  TrainingManifest m;
  m.kind = parse_model_kind(j.at("kind").get<std::string>());
  m.config = j.at("config");
  m.seed = j.at("seed").get<std::uint64_t>();
  m.data_hash = j.at("data_hash").get<std::string>();
  m.train_windows = j.at("train_windows").get<std::size_t>();
  m.final_train_accuracy = j.at("final_train_accuracy").get<double>();
  if (!j.at("final_loss").is_null()) m.final_loss = j.at("final_loss").get<double>();
  if (!j.at("oob_accuracy").is_null()) m.oob_accuracy = j.at("oob_accuracy").get<double>();
  for (const json& e : j.at("curve")) m.curve.push_back({e.at(0).get<int>(), e.at(1).get<double>(), e.at(2).get<double>()});
  return m;
}

namespace {

std::vector<Eigen::MatrixXd> network_inputs(std::span<const TrajectoryWindow> windows) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(w.channels());
  return out;
}

template <typename Model, typename Net, typename Config>
Model train_net(std::span<const TrajectoryWindow> train, const std::vector<int>& labels, const Config& cfg,
                TrainingManifest& manifest) {
  const std::vector<Eigen::MatrixXd> raw = network_inputs(train);
  Model model;
  model.scaler = ChannelScaler::fit(raw);
  std::vector<Eigen::MatrixXd> scaled;
  scaled.reserve(raw.size());
  for (const auto& x : raw) scaled.push_back(model.scaler.apply(x));
  model.net = Net::init(cfg, static_cast<int>(raw.front().cols()));
  manifest.curve = train_network(model.net, std::span<const Eigen::MatrixXd>(scaled), std::span<const int>(labels));
  manifest.final_loss = manifest.curve.back().loss;
  manifest.final_train_accuracy = manifest.curve.back().train_accuracy;
  return model;
}

json matrix_json(const Eigen::MatrixXd& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Eigen::MatrixXd matrix_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw DataError("baselines", "matrix size mismatch in model file");
  return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

json params_json(const ParamSet& p) {
  json j = json::array();
  for (std::size_t i = 0; i < p.tensors.size(); ++i) j.push_back({{"name", p.names[i]}, {"value", matrix_json(p.tensors[i])}});
  return j;
}

void read_params(const json& j, ParamSet& p) {
  if (j.size() != p.tensors.size()) throw DataError("baselines", "parameter count mismatch in model file");
  for (std::size_t i = 0; i < p.tensors.size(); ++i) {
    Eigen::MatrixXd m = matrix_from(j.at(i).at("value"));
    if (j.at(i).at("name").get<std::string>() != p.names[i] || m.rows() != p.tensors[i].rows() ||
        m.cols() != p.tensors[i].cols()) {
      throw DataError("baselines", "parameter '" + p.names[i] + "' does not match the architecture");
    }
    p.tensors[i] = std::move(m);
  }
}

json scaler_json(const ChannelScaler& s) { return {{"mean", matrix_json(s.mean)}, {"scale", matrix_json(s.scale)}}; }

ChannelScaler scaler_from(const json& j) {
  ChannelScaler s;
  s.mean = matrix_from(j.at("mean"));
  s.scale = matrix_from(j.at("scale"));
  return s;
}

json params_of(const RandomForest& f) {
  json trees = json::array();
  for (const DecisionTree& t : f.trees) {
    json nodes = json::array();
    for (const TreeNode& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.label});
    trees.push_back(std::move(nodes));
  }
  return {{"dim", f.dim}, {"oob_accuracy", f.oob_accuracy}, {"trees", std::move(trees)}};
}

json params_of(const SvmModel& m) {
  json machines = json::array();
  for (const BinarySvm& s : m.machines) {
    machines.push_back({{"points", matrix_json(s.points)},
                        {"y", matrix_json(s.y)},
                        {"alpha", matrix_json(s.alpha)},
                        {"bias", s.bias},
                        {"c", s.c},
                        {"iterations", s.iterations},
                        {"converged", s.converged}});
  }
  return {{"center", matrix_json(m.scaler.center)},
          {"scale", matrix_json(m.scaler.scale)},
          {"gamma", m.gamma},
          {"machines", std::move(machines)}};
}

json params_of(const CnnModel& m) {
  return {{"input_length", m.net.input_length}, {"scaler", scaler_json(m.scaler)}, {"tensors", params_json(m.net.params)}};
}

json params_of(const LstmModel& m) {
  return {{"input_length", m.net.input_length}, {"scaler", scaler_json(m.scaler)}, {"tensors", params_json(m.net.params)}};
}

}  // namespace

TrainedModel train_model(ModelKind kind, std::span<const TrajectoryWindow> train, const BaselineConfigs& cfg) {
  if (train.empty()) throw DataError("baselines", "no training windows for " + std::string(display_name(kind)));
  const std::vector<int> labels = label_indices(train);

  TrainedModel model;
  TrainingManifest& m = model.manifest;
  m.kind = kind;
  m.data_hash = sha256_hex(serialize_csv(train));
  m.train_windows = train.size();

  const auto train_accuracy = [&](const TrainedModel& tm) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (label_index(predict(tm, train[i]).label) == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(train.size());
  };

  switch (kind) {
    case ModelKind::RandomForest: {
      m.config = cfg.rf.to_json();
      m.seed = cfg.rf.seed;
      RandomForest forest = train_rf(feature_matrix(train), labels, cfg.rf);
      m.oob_accuracy = forest.oob_accuracy;
      model.params = std::move(forest);
      m.final_train_accuracy = train_accuracy(model);
      break;
    }
    case ModelKind::Svm:
      m.config = cfg.svm.to_json();
      model.params = train_svm(feature_matrix(train), labels, cfg.svm);
      m.final_train_accuracy = train_accuracy(model);
      break;
    case ModelKind::Cnn:
      m.config = cfg.cnn.to_json();
      m.seed = cfg.cnn.seed;
      model.params = train_net<CnnModel, CnnNet>(train, labels, cfg.cnn, m);
      break;
    case ModelKind::Lstm:
      m.config = cfg.lstm.to_json();
      m.seed = cfg.lstm.seed;
      model.params = train_net<LstmModel, LstmNet>(train, labels, cfg.lstm, m);
      break;
  }
  return model;
}

ModelOutput predict(const TrainedModel& model, const TrajectoryWindow& window) {
  ModelOutput out;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RandomForest>) {
          const Vote v = predict_rf(p, extract_features(window));
          out.label = v.label;
          out.scores = v.shares;
        } else if constexpr (std::is_same_v<T, SvmModel>) {
          const SvmScores s = predict_svm(p, extract_features(window));
          out.label = s.label;
          out.scores = s.decision;
        } else {
          if (static_cast<int>(window.samples.size()) != p.net.input_length) {
            throw DataError("baselines", "window '" + window.id + "' has " + std::to_string(window.samples.size()) +
                                             " samples; the network was trained on " +
                                             std::to_string(p.net.input_length));
          }
          const NetPrediction np = classify_logits(p.net.logits(p.scaler.apply(window.channels())));
          out.label = np.label;
          for (int k = 0; k < kNumLabels; ++k) out.scores[k] = np.probabilities(k);
        }
      },
      model.params);
  return out;
}

json to_json(const TrainedModel& model) {
  return {{"format", "imutrace-model"},
          {"version", kModelFormatVersion},
          {"kind", to_string(model.kind())},
          {"manifest", model.manifest.to_json()},
          {"params", std::visit([](const auto& p) { return params_of(p); }, model.params)}};
}

TrainedModel model_from_json(const json& j) {
  if (j.value("format", "") != "imutrace-model") throw DataError("baselines", "not a model file");
  if (j.value("version", 0) != kModelFormatVersion) {
    throw DataError("baselines", "unsupported model file version " + j.value("version", json(0)).dump());
  }
  TrainedModel model;
  model.manifest = TrainingManifest::from_json(j.at("manifest"));
  const json& p = j.at("params");
  switch (model.kind()) {
    case ModelKind::RandomForest: {
      RandomForest f;
      f.dim = p.at("dim").get<int>();
      f.oob_accuracy = p.at("oob_accuracy").get<double>();
      for (const json& t : p.at("trees")) {
        DecisionTree tree;
        for (const json& n : t) {
          tree.nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                                n.at(4).get<int>()});
        }
        f.trees.push_back(std::move(tree));
      }
      model.params = std::move(f);
      break;
    }
    case ModelKind::Svm: {
      SvmModel s;
      s.scaler.center = matrix_from(p.at("center"));
      s.scaler.scale = matrix_from(p.at("scale"));
      s.gamma = p.at("gamma").get<double>();
      const json& machines = p.at("machines");
      if (machines.size() != kNumLabels) throw DataError("baselines", "svm model needs one machine per class");
      for (int k = 0; k < kNumLabels; ++k) {
        const json& mj = machines.at(static_cast<std::size_t>(k));
        BinarySvm& b = s.machines[k];
        b.points = matrix_from(mj.at("points"));
        b.y = matrix_from(mj.at("y"));
        b.alpha = matrix_from(mj.at("alpha"));
        b.bias = mj.at("bias").get<double>();
        b.c = mj.at("c").get<double>();
        b.gamma = s.gamma;
        b.iterations = mj.at("iterations").get<int>();
        b.converged = mj.at("converged").get<bool>();
      }
      model.params = std::move(s);
      break;
    }
    case ModelKind::Cnn: {
      CnnModel m;
      m.net = CnnNet::init(CnnConfig::from_json(model.manifest.config), p.at("input_length").get<int>());
      m.scaler = scaler_from(p.at("scaler"));
      read_params(p.at("tensors"), m.net.params);
      model.params = std::move(m);
      break;
    }
    case ModelKind::Lstm: {
      LstmModel m;
      m.net = LstmNet::init(LstmConfig::from_json(model.manifest.config), p.at("input_length").get<int>());
      m.scaler = scaler_from(p.at("scaler"));
      read_params(p.at("tensors"), m.net.params);
      model.params = std::move(m);
      break;
    }
  }
  return model;
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("baselines", "cannot write model file " + path.string());
  out << to_json(model).dump() << '\n';
  if (!out) throw ConfigError("baselines", "failed writing model file " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("baselines", "cannot open model file " + path.string());
  try {
    return model_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw DataError("baselines", "malformed model file " + path.string() + ": " + e.what());
  }
}

void write_training_log(std::ostream& out, std::span<const EpochLog> curve) {
  out << "epoch,loss,train_accuracy\n";
  const auto old = out.precision(17);
  for (const EpochLog& e : curve) out << e.epoch << ',' << e.loss << ',' << e.train_accuracy << '\n';
  out.precision(old);
}

}  // namespace imutrace::baselines
