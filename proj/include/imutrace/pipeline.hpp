#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "imutrace/baselines/model.hpp"
#include "imutrace/eval.hpp"
#include "imutrace/imu.hpp"
#include "imutrace/llm_client.hpp"
#include "imutrace/prompt.hpp"
#include "imutrace/synthgen.hpp"

namespace imutrace::pipeline {

/// Everything a run needs. Precedence: built-in defaults, then the JSON
/// config file, then command-line flags. Exactly one data source: a CSV file
/// (data_path) or the generator (generator + per_class).
struct RunConfig {
  std::optional<std::filesystem::path> data_path;
  synth::GeneratorConfig generator;
  int per_class = 40;
  double window_seconds = 10.0;  // longer CSV recordings are cut into windows
  double window_stride = 10.0;
  std::uint64_t split_seed = 0;
  std::vector<baselines::ModelKind> baselines = {baselines::kAllModelKinds.begin(),
                                                  baselines::kAllModelKinds.end()};
  baselines::BaselineConfigs baseline_configs;
  std::vector<std::string> providers = {"mock"};
  std::vector<llm::ProviderConfig> provider_configs;  // live providers by id
  std::vector<prompt::PromptMode> modes = {prompt::PromptMode::DirectOutput, prompt::PromptMode::ChainOfThought};
  std::optional<std::filesystem::path> templates_dir;
  std::optional<std::filesystem::path> lexicon_path;
  prompt::SerializationOptions serialization;
  std::size_t max_prompt_chars = 4000;
  double target_rate = 3.0;
  double max_failure_fraction = 0.2;
  std::filesystem::path output_dir = "out";

  void validate() const;
  /// Serialized without output_dir so identical runs in different places
  /// produce identical manifests.
  nlohmann::json to_json() const;
  /// Accepts a config file or a run manifest (its "run_config" member).
  static RunConfig from_json(const nlohmann::json& j, RunConfig base);
  static RunConfig from_json(const nlohmann::json& j) { return from_json(j, RunConfig{}); }
  static RunConfig load(const std::filesystem::path& path, RunConfig base);
};

/// Provider instances for the configured ids ("mock" or a live id). Live
/// providers check their token here, before any output exists.
std::vector<std::shared_ptr<llm::Provider>> make_providers(const RunConfig& cfg);

std::vector<TrajectoryWindow> read_dataset(const std::filesystem::path& csv);
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

/// Split files are CSV "window_id,part" sorted by window id.
void write_split(std::ostream& out, const SplitAssignment& split);
SplitAssignment read_split(std::istream& in);

struct GenerateResult {
  synth::Dataset dataset;
  std::filesystem::path csv_path;
  std::filesystem::path manifest_path;
};

/// Writes dataset.csv and dataset_manifest.json under out_dir.
GenerateResult cmd_generate(const synth::GeneratorConfig& cfg, const synth::DatasetCounts& counts,
                            const std::filesystem::path& out_dir);

/// Writes the split of the CSV dataset to out_path.
SplitAssignment cmd_split(const std::filesystem::path& csv, std::uint64_t seed, const std::filesystem::path& out_path);

/// Trains the requested baselines per scenario on the Train part and writes
/// <kind>_<scenario>.model.json plus <kind>_<scenario>.log.csv (networks).
std::vector<std::filesystem::path> cmd_train(const std::filesystem::path& csv, const std::filesystem::path& split_path,
                                             const std::vector<baselines::ModelKind>& kinds,
                                             const baselines::BaselineConfigs& configs, double target_rate,
                                             const std::filesystem::path& out_dir);

/// Full run into cfg.output_dir: dataset.csv, split.csv, report.txt,
/// report.jsonl, manifest.json and transcript.jsonl. Nothing is written
/// when configuration fails.
eval::EvalReport cmd_run(const RunConfig& cfg);

/// Re-renders report.txt content from a run directory's report.jsonl and
/// manifest.json, checking the manifest hash.
std::string cmd_report(const std::filesystem::path& run_dir);

}  // namespace imutrace::pipeline
