#pragma once

#include <memory>
#include <span>
#include <vector>

#include <json.hpp>

#include "imutrace/baselines/model.hpp"
#include "imutrace/eval.hpp"
#include "imutrace/imu.hpp"
#include "imutrace/llm_client.hpp"
#include "imutrace/prompt.hpp"

namespace imutrace::eval {

struct ExperimentOptions {
  std::vector<baselines::ModelKind> baselines = {baselines::kAllModelKinds.begin(), baselines::kAllModelKinds.end()};
  baselines::BaselineConfigs baseline_configs;
  std::vector<std::shared_ptr<llm::Provider>> providers;
  std::vector<prompt::PromptMode> modes = {prompt::PromptMode::DirectOutput, prompt::PromptMode::ChainOfThought};
  prompt::PromptSettings prompt;
  llm::Lexicon lexicon = llm::Lexicon::defaults();
  double target_rate = 3.0;  // Hz, input rate of every model
  /// An LLM cell is skipped when more than this fraction of its windows
  /// failed in transport.
  double max_failure_fraction = 0.2;
  llm::TranscriptLog* transcript = nullptr;
  /// Merged into the report manifest (data source, seeds, ...).
  nlohmann::json extra_manifest = nlohmann::json::object();
};

/// Model id of an LLM cell, e.g. "mock-CoT".
std::string llm_model_id(const llm::Provider& provider, prompt::PromptMode mode);

/// Downsamples every window to target_rate, trains each baseline per
/// scenario on Train and evaluates it on SeenTest and UnseenTest, then sends
/// the UnseenTest windows of each scenario through every provider and mode.
/// Cells come out in a fixed order: baselines, then providers x modes; within
/// a model Indoor before Outdoor, Seen before Unseen. Cells that cannot be
/// filled (no training data, a single class, too many transport failures)
/// are kept and marked skipped.
EvalReport run_experiment(std::span<const TrajectoryWindow> dataset, const SplitAssignment& split,
                          const ExperimentOptions& options);

}  // namespace imutrace::eval
