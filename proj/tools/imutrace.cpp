// imutrace: generate, split, train, run and report trajectory-tracing
// experiments on 9-axis IMU windows.

#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "imutrace/error.hpp"
#include "imutrace/pipeline.hpp"

namespace {

using namespace imutrace;
namespace fs = std::filesystem;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<baselines::ModelKind> parse_kinds(const std::string& text) {
  std::vector<baselines::ModelKind> out;
  for (const auto& s : split_list(text)) out.push_back(baselines::parse_model_kind(s));
  return out;
}

std::string join_kinds(const std::vector<baselines::ModelKind>& kinds) {
  std::string out;
  for (const auto k : kinds) out += (out.empty() ? "" : ",") + std::string(baselines::to_string(k));
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

void warn(const std::string& message) { std::cerr << "warning: " << message << "\n"; }

/// Flags shared by `train` and `run` that tune the baselines.
struct BaselineFlags {
  int trees = baselines::RfConfig{}.trees;
  double svm_c = baselines::SvmConfig{}.c;
  int epochs = 0;
  int batch_size = baselines::CnnConfig{}.batch_size;
  double learning_rate = baselines::CnnConfig{}.learning_rate;
  CLI::Option* trees_opt = nullptr;
  CLI::Option* svm_c_opt = nullptr;
  CLI::Option* epochs_opt = nullptr;
  CLI::Option* batch_opt = nullptr;
  CLI::Option* lr_opt = nullptr;

  void add(CLI::App* app) {
    trees_opt = app->add_option("--trees", trees, "Random forest tree count")->capture_default_str();
    svm_c_opt = app->add_option("--svm-c", svm_c, "SVM box constraint C")->capture_default_str();
    epochs_opt = app->add_option("--epochs", epochs,
                                 "CNN and LSTM training epochs [default: " +
                                     std::to_string(baselines::CnnConfig{}.epochs) + " CNN, " +
                                     std::to_string(baselines::LstmConfig{}.epochs) + " LSTM]");
    batch_opt = app->add_option("--batch-size", batch_size, "CNN/LSTM mini-batch size")->capture_default_str();
    lr_opt = app->add_option("--learning-rate", learning_rate, "CNN/LSTM SGD learning rate")->capture_default_str();
  }

  void apply(baselines::BaselineConfigs& c) const {
    if (trees_opt->count()) c.rf.trees = trees;
    if (svm_c_opt->count()) c.svm.c = svm_c;
    if (epochs_opt->count()) c.cnn.epochs = c.lstm.epochs = epochs;
    if (batch_opt->count()) c.cnn.batch_size = c.lstm.batch_size = batch_size;
    if (lr_opt->count()) c.cnn.learning_rate = c.lstm.learning_rate = learning_rate;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory tracing from 9-axis IMU windows: synthetic data, baselines and LLM prompting."};
  app.require_subcommand(1);
  app.set_version_flag("--version", "imutrace 1.0");

  const pipeline::RunConfig defaults;

  // generate
  CLI::App* gen = app.add_subcommand("generate", "Simulate a labeled dataset and write dataset.csv + manifest");
  std::uint64_t gen_seed = defaults.generator.seed;
  int gen_per_class = defaults.per_class;
  double gen_rate = defaults.generator.rate;
  double gen_duration = defaults.generator.duration;
  std::string gen_scenarios = "indoor,outdoor";
  std::string gen_out = "data";
  gen->add_option("--seed", gen_seed, "Generator seed")->capture_default_str();
  gen->add_option("--per-class", gen_per_class, "Windows per label and scenario")->capture_default_str();
  gen->add_option("--rate", gen_rate, "Sample rate in Hz")->capture_default_str();
  gen->add_option("--duration", gen_duration, "Window duration in seconds")->capture_default_str();
  gen->add_option("--scenarios", gen_scenarios, "Comma-separated scenarios to simulate")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->capture_default_str();

  // split
  CLI::App* spl = app.add_subcommand("split", "Assign windows to Train/Validation/SeenTest/UnseenTest");
  std::string split_data;
  std::uint64_t split_seed = defaults.split_seed;
  std::string split_out = "split.csv";
  spl->add_option("--data", split_data, "Dataset CSV")->required();
  spl->add_option("--seed", split_seed, "Split seed")->capture_default_str();
  spl->add_option("--out", split_out, "Output split CSV")->capture_default_str();

  // train
  CLI::App* trn = app.add_subcommand("train", "Train baselines per scenario on the Train part");
  std::string train_data, train_split, train_out = "models";
  std::string train_baselines = join_kinds(defaults.baselines);
  std::uint64_t train_seed = 0;
  double train_rate = defaults.target_rate;
  std::string train_config;
  BaselineFlags train_flags;
  trn->add_option("--data", train_data, "Dataset CSV")->required();
  trn->add_option("--split", train_split, "Split CSV")->required();
  trn->add_option("--baselines", train_baselines, "Comma-separated baselines (rf, svm, cnn, lstm)")
      ->capture_default_str();
  auto* train_seed_opt = trn->add_option("--seed", train_seed, "Baseline seed")->capture_default_str();
  trn->add_option("--target-rate", train_rate, "Downsampled input rate in Hz")->capture_default_str();
  trn->add_option("--config", train_config, "JSON config file (its baseline_configs are used)");
  trn->add_option("--out", train_out, "Output directory")->capture_default_str();
  train_flags.add(trn);

  // run
  CLI::App* run = app.add_subcommand("run", "Generate or load data, split, train, classify and write the report");
  std::string run_config, run_data, run_out = defaults.output_dir.string();
  std::uint64_t run_seed = 0, run_split_seed = defaults.split_seed;
  int run_per_class = defaults.per_class;
  std::string run_baselines = join_kinds(defaults.baselines);
  std::string run_providers = join(defaults.providers);
  std::string run_modes = "do,cot";
  std::string run_templates, run_lexicon;
  double run_rate = defaults.target_rate;
  double run_max_fail = defaults.max_failure_fraction;
  BaselineFlags run_flags;
  auto* rc = run->add_option("--config", run_config, "JSON config file or a previous run's manifest.json");
  auto* rd = run->add_option("--data", run_data, "Dataset CSV (otherwise data is generated)");
  auto* rs = run->add_option("--seed", run_seed, "Seed for generator, split and baselines")->capture_default_str();
  auto* rss = run->add_option("--split-seed", run_split_seed, "Split seed (overrides --seed)")->capture_default_str();
  auto* rpc = run->add_option("--per-class", run_per_class, "Generated windows per label and scenario")
                  ->capture_default_str();
  auto* rb = run->add_option("--baselines", run_baselines, "Comma-separated baselines; empty for none")
                 ->capture_default_str();
  auto* rp = run->add_option("--providers", run_providers, "Comma-separated LLM providers (mock or a live id)")
                 ->capture_default_str();
  auto* rm = run->add_option("--modes", run_modes, "Comma-separated prompt modes (do, cot)")->capture_default_str();
  auto* rt = run->add_option("--templates", run_templates, "Directory with prompt templates");
  auto* rl = run->add_option("--lexicon", run_lexicon, "Label lexicon JSON");
  auto* rr = run->add_option("--target-rate", run_rate, "Downsampled rate in Hz")->capture_default_str();
  auto* rf = run->add_option("--max-failure-fraction", run_max_fail, "Skip an LLM cell above this failure share")
                 ->capture_default_str();
  auto* ro = run->add_option("--out", run_out, "Output directory")->capture_default_str();
  run_flags.add(run);

  // report
  CLI::App* rep = app.add_subcommand("report", "Print the report of a finished run");
  std::string rep_dir;
  std::string rep_format = "text";
  rep->add_option("run_dir", rep_dir, "Run output directory")->required();
  rep->add_option("--format", rep_format, "text or jsonl")->capture_default_str()->check(CLI::IsMember({"text", "jsonl"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kConfig);
  }

  try {
    if (*gen) {
      if (gen_per_class == 0) warn("--per-class 0 produces an empty dataset");
      synth::GeneratorConfig cfg;
      cfg.seed = gen_seed;
      cfg.rate = gen_rate;
      cfg.duration = gen_duration;
      bool indoor = false, outdoor = false;
      for (const auto& s : split_list(gen_scenarios)) {
        (parse_scenario(s) == Scenario::Indoor ? indoor : outdoor) = true;
      }
      if (gen_per_class < 0) throw ConfigError("cli", "--per-class must be >= 0");
      const auto r = pipeline::cmd_generate(cfg, synth::DatasetCounts::uniform(gen_per_class, indoor, outdoor), gen_out);
      std::cout << "wrote " << r.dataset.windows.size() << " windows to " << r.csv_path.string() << "\n";
      for (const Scenario s : kAllScenarios) {
        std::cout << "  " << to_string(s) << ":";
        for (const TrajectoryLabel l : kAllLabels) {
          std::cout << " " << to_string(l) << "=" << r.dataset.counts.per[static_cast<int>(s)][label_index(l)];
        }
        std::cout << "\n";
      }
    } else if (*spl) {
      const SplitAssignment split = pipeline::cmd_split(split_data, split_seed, split_out);
      std::cout << "wrote " << split_out << ":";
      for (const SplitPart p : kAllSplitParts) std::cout << " " << to_string(p) << "=" << split.count(p);
      std::cout << "\n";
    } else if (*trn) {
      baselines::BaselineConfigs configs;
      if (!train_config.empty()) configs = pipeline::RunConfig::load(train_config, {}).baseline_configs;
      if (train_seed_opt->count()) configs.set_seed(train_seed);
      train_flags.apply(configs);
      const auto written =
          pipeline::cmd_train(train_data, train_split, parse_kinds(train_baselines), configs, train_rate, train_out);
      for (const auto& p : written) std::cout << "wrote " << p.string() << "\n";
    } else if (*run) {
      pipeline::RunConfig cfg;
      if (rc->count()) cfg = pipeline::RunConfig::load(run_config, cfg);
      if (rs->count()) {
        cfg.generator.seed = run_seed;
        cfg.split_seed = run_seed;
        cfg.baseline_configs.set_seed(run_seed);
      }
      if (rss->count()) cfg.split_seed = run_split_seed;
      if (rd->count()) cfg.data_path = fs::path(run_data);
      if (rpc->count()) {
        cfg.per_class = run_per_class;
        cfg.data_path.reset();
      }
      if (rb->count()) cfg.baselines = parse_kinds(run_baselines);
      if (rp->count()) cfg.providers = split_list(run_providers);
      if (rm->count()) {
        cfg.modes.clear();
        for (const auto& m : split_list(run_modes)) cfg.modes.push_back(prompt::parse_mode(m));
      }
      if (rt->count()) cfg.templates_dir = fs::path(run_templates);
      if (rl->count()) cfg.lexicon_path = fs::path(run_lexicon);
      if (rr->count()) cfg.target_rate = run_rate;
      if (rf->count()) cfg.max_failure_fraction = run_max_fail;
      if (ro->count()) cfg.output_dir = run_out;
      run_flags.apply(cfg.baseline_configs);
      if (rd->count() && rpc->count()) throw ConfigError("cli", "--data and --per-class select different data sources");
      if (!cfg.data_path && cfg.per_class == 0) warn("--per-class 0 produces an empty dataset");

      const eval::EvalReport report = pipeline::cmd_run(cfg);
      std::cout << eval::render_text(report);
      std::cout << "wrote " << (cfg.output_dir / "report.txt").string() << "\n";
    } else if (*rep) {
      if (rep_format == "jsonl") {
        std::cout << pipeline::read_text(fs::path(rep_dir) / "report.jsonl");
      } else {
        std::cout << pipeline::cmd_report(rep_dir);
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kInternal);
  }
  return 0;
}
