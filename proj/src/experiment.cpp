#include "imutrace/experiment.hpp"

#include <map>

#include "imutrace/error.hpp"
#include "imutrace/hash.hpp"
#include "imutrace/rng.hpp"

namespace imutrace::eval {

using nlohmann::json;

std::string llm_model_id(const llm::Provider& provider, prompt::PromptMode mode) {
  return provider.id() + "-" + std::string(prompt::display_name(mode));
}

namespace {

using Windows = std::vector<TrajectoryWindow>;

struct Partitioned {
  // [scenario][part]
  std::array<std::array<Windows, 4>, 2> parts;
};

Partitioned partition(std::span<const TrajectoryWindow> windows, const SplitAssignment& split) {
  Partitioned out;
  for (const auto& w : windows) {
    const auto it = split.parts.find(w.id);
    if (it == split.parts.end()) throw DataError("eval", "window '" + w.id + "' is missing from the split");
    out.parts[static_cast<int>(w.scenario)][static_cast<int>(it->second)].push_back(w);
  }
  return out;
}

Cell skipped_cell(std::string model, Scenario s, SplitPart part, std::string reason, long windows = 0) {
  Cell c;
  c.model = std::move(model);
  c.scenario = s;
  c.split = part;
  c.skipped = true;
  c.skip_reason = std::move(reason);
  c.windows = windows;
  return c;
}

Cell baseline_cell(const baselines::TrainedModel& model, std::string name, Scenario s, SplitPart part,
                   const Windows& test) {
  if (test.empty()) return skipped_cell(std::move(name), s, part, "no test windows");
  Cell c;
  c.model = std::move(name);
  c.scenario = s;
  c.split = part;
  c.windows = static_cast<long>(test.size());
  for (const auto& w : test) {
    if (!w.label) throw DataError("eval", "test window '" + w.id + "' has no label");
    c.matrix.add(*w.label, baselines::predict(model, w).label);
  }
  c.metrics = metrics(c.matrix);
  return c;
}

json split_json(const SplitAssignment& split) {
  json j = json::object();
  for (const auto& [id, part] : split.parts) j[id] = to_string(part);
  return j;
}

}  // namespace

EvalReport run_experiment(std::span<const TrajectoryWindow> dataset, const SplitAssignment& split,
                          const ExperimentOptions& options) {
  options.baseline_configs.validate();
  if (!(options.target_rate > 0.0)) throw ConfigError("eval", "target rate must be > 0");
  if (options.max_failure_fraction < 0.0 || options.max_failure_fraction > 1.0) {
    throw ConfigError("eval", "max failure fraction must be in [0, 1]");
  }

  prompt::PromptSettings prompt_settings = options.prompt;
  if (!dataset.empty()) prompt_settings.source_rate = dataset.front().rate;

  Windows reduced;
  reduced.reserve(dataset.size());
  for (const auto& w : dataset) reduced.push_back(downsample(w, options.target_rate));
  const Partitioned data = partition(reduced, split);

  EvalReport report;
  constexpr std::array<SplitPart, 2> kTestParts = {SplitPart::SeenTest, SplitPart::UnseenTest};

  for (const baselines::ModelKind kind : options.baselines) {
    const std::string name(baselines::display_name(kind));
    for (const Scenario s : kAllScenarios) {
      const auto& parts = data.parts[static_cast<int>(s)];
      const Windows& train = parts[static_cast<int>(SplitPart::Train)];
      std::optional<baselines::TrainedModel> model;
      std::string reason;
      if (train.empty()) {
        reason = "no training windows";
      } else {
        try {
          model = baselines::train_model(kind, train, options.baseline_configs);
        } catch (const DataError& e) {
          reason = e.what();
        }
      }
      for (const SplitPart part : kTestParts) {
        const Windows& test = parts[static_cast<int>(part)];
        report.cells.push_back(model ? baseline_cell(*model, name, s, part, test)
                                     : skipped_cell(name, s, part, reason, static_cast<long>(test.size())));
      }
    }
  }

  for (const auto& provider : options.providers) {
    for (const prompt::PromptMode mode : options.modes) {
      const std::string name = llm_model_id(*provider, mode);
      for (const Scenario s : kAllScenarios) {
        const Windows& test = data.parts[static_cast<int>(s)][static_cast<int>(SplitPart::UnseenTest)];
        if (test.empty()) {
          report.cells.push_back(skipped_cell(name, s, SplitPart::UnseenTest, "no test windows"));
          continue;
        }
        std::vector<prompt::PromptBundle> bundles;
        bundles.reserve(test.size());
        for (const auto& w : test) bundles.push_back(prompt::build_prompt(w, mode, prompt_settings));
        const std::vector<llm::Prediction> preds =
            llm::classify_batch(*provider, bundles, options.lexicon, options.transcript);

        Cell c;
        c.model = name;
        c.scenario = s;
        c.split = SplitPart::UnseenTest;
        c.windows = static_cast<long>(test.size());
        std::string first_failure;
        for (const auto& p : preds) {
          if (p.status == llm::PredictionStatus::Failed) {
            ++c.failed;
            if (first_failure.empty()) first_failure = p.detail;
          } else if (p.status == llm::PredictionStatus::Unparsed) {
            ++c.unparsed;
          }
        }
        if (static_cast<double>(c.failed) > options.max_failure_fraction * static_cast<double>(c.windows)) {
          report.cells.push_back(skipped_cell(name, s, SplitPart::UnseenTest,
                                              std::to_string(c.failed) + " of " + std::to_string(c.windows) +
                                                  " requests failed (first: " + first_failure + ")",
                                              c.windows));
          report.cells.back().failed = c.failed;
          continue;
        }
        c.matrix = confusion(preds, test);
        c.metrics = metrics(c.matrix);
        report.cells.push_back(std::move(c));
      }
    }
  }

  json manifest = options.extra_manifest.is_object() ? options.extra_manifest : json::object();
  manifest["dataset_sha256"] = sha256_hex(serialize_csv(dataset));
  manifest["dataset_windows"] = dataset.size();
  manifest["split_sha256"] = sha256_hex(split_json(split).dump());
  manifest["target_rate"] = options.target_rate;
  manifest["rng"] = Rng::kAlgorithm;
  json kinds = json::array();
  for (const auto k : options.baselines) kinds.push_back(baselines::to_string(k));
  manifest["baselines"] = kinds;
  manifest["baseline_configs"] = options.baseline_configs.to_json();
  json providers = json::array();
  for (const auto& p : options.providers) providers.push_back(p->describe());
  manifest["providers"] = providers;
  json modes = json::array();
  for (const auto m : options.modes) modes.push_back(prompt::to_string(m));
  manifest["modes"] = modes;
  manifest["template_sha256"] = prompt_settings.templates.hash();
  manifest["lexicon_sha256"] = options.lexicon.hash();
  manifest["prompt"] = {{"decimals", prompt_settings.serialization.decimals},
                        {"axis_order", prompt_settings.serialization.axis_order},
                        {"sample_delimiter", prompt_settings.serialization.sample_delimiter},
                        {"channel_labels", prompt_settings.serialization.channel_labels},
                        {"source_rate", prompt_settings.source_rate},
                        {"max_chars", prompt_settings.max_chars}};
  manifest["max_failure_fraction"] = options.max_failure_fraction;
  report.manifest_hash = manifest_hash(manifest);
  report.manifest = std::move(manifest);
  return report;
}

}  // namespace imutrace::eval
