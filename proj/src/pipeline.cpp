#include "imutrace/pipeline.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "imutrace/error.hpp"
#include "imutrace/experiment.hpp"
#include "imutrace/hash.hpp"

namespace imutrace::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

void RunConfig::validate() const {
  generator.validate();
  if (per_class < 0) throw ConfigError("cli", "per_class must be >= 0");
  if (!(window_seconds > 0.0) || !(window_stride > 0.0)) throw ConfigError("cli", "window length and stride must be > 0");
  baseline_configs.validate();
  serialization.validate();
  if (!(target_rate > 0.0)) throw ConfigError("cli", "target_rate must be > 0");
  if (max_failure_fraction < 0.0 || max_failure_fraction > 1.0) {
    throw ConfigError("cli", "max_failure_fraction must be in [0, 1]");
  }
  std::set<std::string> seen;
  for (const auto& p : providers) {
    if (!seen.insert(p).second) throw ConfigError("cli", "provider '" + p + "' listed twice");
  }
  if (baselines.empty() && providers.empty()) throw ConfigError("cli", "nothing to evaluate: no baselines or providers");
  if (!providers.empty() && modes.empty()) throw ConfigError("cli", "providers need at least one prompt mode");
}

json RunConfig::to_json() const {
  json j;
  j["data_path"] = data_path ? json(data_path->string()) : json(nullptr);
  j["generator"] = synth::to_json(generator);
  j["per_class"] = per_class;
  j["window_seconds"] = window_seconds;
  j["window_stride"] = window_stride;
  j["split_seed"] = split_seed;
  json kinds = json::array();
  for (const auto k : baselines) kinds.push_back(baselines::to_string(k));
  j["baselines"] = kinds;
  j["baseline_configs"] = baseline_configs.to_json();
  j["providers"] = providers;
  json pcs = json::array();
  for (const auto& pc : provider_configs) pcs.push_back(pc.to_json());
  j["provider_configs"] = pcs;
  json modes_json = json::array();
  for (const auto m : modes) modes_json.push_back(prompt::to_string(m));
  j["modes"] = modes_json;
  j["templates_dir"] = templates_dir ? json(templates_dir->string()) : json(nullptr);
  j["lexicon_path"] = lexicon_path ? json(lexicon_path->string()) : json(nullptr);
  j["serialization"] = {{"decimals", serialization.decimals},
                        {"axis_order", serialization.axis_order},
                        {"sample_delimiter", serialization.sample_delimiter},
                        {"channel_labels", serialization.channel_labels}};
  j["max_prompt_chars"] = max_prompt_chars;
  j["target_rate"] = target_rate;
  j["max_failure_fraction"] = max_failure_fraction;
  return j;
}

RunConfig RunConfig::from_json(const json& in, RunConfig base) {
  const json& j = in.contains("run_config") ? in.at("run_config") : in;
  if (!j.is_object()) throw ConfigError("cli", "config must be a JSON object");
  try {
    if (j.contains("seed")) {
      const auto seed = j.at("seed").get<std::uint64_t>();
      base.generator.seed = seed;
      base.split_seed = seed;
      base.baseline_configs.set_seed(seed);
    }
    if (j.contains("data_path")) {
      base.data_path = j.at("data_path").is_null() ? std::nullopt
                                                   : std::optional<fs::path>(j.at("data_path").get<std::string>());
    }
    if (j.contains("generator")) base.generator = synth::generator_config_from_json(j.at("generator"), base.generator);
    base.per_class = j.value("per_class", base.per_class);
    base.window_seconds = j.value("window_seconds", base.window_seconds);
    base.window_stride = j.value("window_stride", base.window_stride);
    base.split_seed = j.value("split_seed", base.split_seed);
    if (j.contains("baselines")) {
      base.baselines.clear();
      for (const auto& k : j.at("baselines")) base.baselines.push_back(baselines::parse_model_kind(k.get<std::string>()));
    }
    if (j.contains("baseline_configs")) {
      base.baseline_configs = baselines::BaselineConfigs::from_json(j.at("baseline_configs"), base.baseline_configs);
    }
    if (j.contains("providers")) base.providers = j.at("providers").get<std::vector<std::string>>();
    if (j.contains("provider_configs")) {
      base.provider_configs.clear();
      for (const auto& pc : j.at("provider_configs")) base.provider_configs.push_back(llm::ProviderConfig::from_json(pc));
    }
    if (j.contains("modes")) {
      base.modes.clear();
      for (const auto& m : j.at("modes")) base.modes.push_back(prompt::parse_mode(m.get<std::string>()));
    }
    if (j.contains("templates_dir")) {
      base.templates_dir = j.at("templates_dir").is_null()
                               ? std::nullopt
                               : std::optional<fs::path>(j.at("templates_dir").get<std::string>());
    }
    if (j.contains("lexicon_path")) {
      base.lexicon_path = j.at("lexicon_path").is_null()
                              ? std::nullopt
                              : std::optional<fs::path>(j.at("lexicon_path").get<std::string>());
    }
    if (j.contains("serialization")) {
      const json& s = j.at("serialization");
      base.serialization.decimals = s.value("decimals", base.serialization.decimals);
      if (s.contains("axis_order")) base.serialization.axis_order = s.at("axis_order").get<std::array<int, kNumChannels>>();
      base.serialization.sample_delimiter = s.value("sample_delimiter", base.serialization.sample_delimiter);
      base.serialization.channel_labels = s.value("channel_labels", base.serialization.channel_labels);
    }
    base.max_prompt_chars = j.value("max_prompt_chars", base.max_prompt_chars);
    base.target_rate = j.value("target_rate", base.target_rate);
    base.max_failure_fraction = j.value("max_failure_fraction", base.max_failure_fraction);
    if (j.contains("output_dir")) base.output_dir = j.at("output_dir").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError("cli", std::string("bad config value: ") + e.what());
  }
  return base;
}

RunConfig RunConfig::load(const fs::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cli", "cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("cli", "config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j, std::move(base));
}

std::vector<std::shared_ptr<llm::Provider>> make_providers(const RunConfig& cfg) {
  std::vector<std::shared_ptr<llm::Provider>> out;
  for (const std::string& id : cfg.providers) {
    if (id == "mock") {
      out.push_back(std::make_shared<llm::MockProvider>());
      continue;
    }
    llm::ProviderConfig pc;
    pc.id = id;
    bool found = false;
    for (const auto& c : cfg.provider_configs) {
      if (c.id == id) {
        pc = c;
        found = true;
      }
    }
    if (!found && id != llm::ProviderConfig{}.id) {
      throw ConfigError("cli", "provider '" + id + "' has no entry in provider_configs");
    }
    out.push_back(std::make_shared<llm::HttpProvider>(pc));
  }
  return out;
}

std::vector<TrajectoryWindow> read_dataset(const fs::path& csv) {
  std::ifstream in(csv, std::ios::binary);
  if (!in) throw DataError("cli", "cannot open dataset " + csv.string());
  return ingest_csv(in);
}

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw ConfigError("cli", "cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cli", "cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("cli", "failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cli", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_split(std::ostream& out, const SplitAssignment& split) {
  out << "window_id,part\n";
  for (const auto& [id, part] : split.parts) out << id << ',' << to_string(part) << '\n';
}

SplitAssignment read_split(std::istream& in) {
  SplitAssignment split;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "window_id,part") throw DataError("cli", "split file must start with 'window_id,part'");
      continue;
    }
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw DataError("cli", "split line " + std::to_string(line_no) + " has no comma");
    if (!split.parts.emplace(line.substr(0, comma), parse_split_part(line.substr(comma + 1))).second) {
      throw DataError("cli", "split line " + std::to_string(line_no) + " repeats a window id");
    }
  }
  return split;
}

GenerateResult cmd_generate(const synth::GeneratorConfig& cfg, const synth::DatasetCounts& counts,
                            const fs::path& out_dir) {
  GenerateResult r;
  r.dataset = synth::generate_dataset(cfg, counts);
  r.csv_path = out_dir / "dataset.csv";
  r.manifest_path = out_dir / "dataset_manifest.json";
  const std::string csv = serialize_csv(r.dataset.windows);
  json manifest = r.dataset.manifest();
  manifest["dataset_sha256"] = sha256_hex(csv);
  write_text(r.csv_path, csv);
  write_text(r.manifest_path, eval::manifest_text(manifest));
  return r;
}

SplitAssignment cmd_split(const fs::path& csv, std::uint64_t seed, const fs::path& out_path) {
  const auto windows = read_dataset(csv);
  SplitAssignment split = split_dataset(windows, seed);
  std::ostringstream out;
  write_split(out, split);
  write_text(out_path, out.str());
  return split;
}

std::vector<fs::path> cmd_train(const fs::path& csv, const fs::path& split_path,
                                const std::vector<baselines::ModelKind>& kinds,
                                const baselines::BaselineConfigs& configs, double target_rate, const fs::path& out_dir) {
  configs.validate();
  const auto windows = read_dataset(csv);
  std::ifstream split_in(split_path);
  if (!split_in) throw DataError("cli", "cannot open split file " + split_path.string());
  const SplitAssignment split = read_split(split_in);

  std::array<std::vector<TrajectoryWindow>, 2> train;
  for (const auto& w : windows) {
    const auto it = split.parts.find(w.id);
    if (it == split.parts.end()) throw DataError("cli", "window '" + w.id + "' is missing from the split");
    if (it->second == SplitPart::Train) train[static_cast<int>(w.scenario)].push_back(downsample(w, target_rate));
  }

  std::vector<fs::path> written;
  for (const auto kind : kinds) {
    for (const Scenario s : kAllScenarios) {
      const auto& data = train[static_cast<int>(s)];
      if (data.empty()) continue;
      const baselines::TrainedModel model = baselines::train_model(kind, data, configs);
      const std::string stem = std::string(baselines::to_string(kind)) + "_" + std::string(to_string(s));
      const fs::path model_path = out_dir / (stem + ".model.json");
      write_text(model_path, baselines::to_json(model).dump() + "\n");
      written.push_back(model_path);
      if (!model.manifest.curve.empty()) {
        std::ostringstream log;
        baselines::write_training_log(log, model.manifest.curve);
        const fs::path log_path = out_dir / (stem + ".log.csv");
        write_text(log_path, log.str());
        written.push_back(log_path);
      }
    }
  }
  return written;
}

eval::EvalReport cmd_run(const RunConfig& cfg) {
  cfg.validate();
  eval::ExperimentOptions options;
  options.providers = make_providers(cfg);
  options.baselines = cfg.baselines;
  options.baseline_configs = cfg.baseline_configs;
  options.modes = cfg.modes;
  options.prompt.serialization = cfg.serialization;
  options.prompt.max_chars = cfg.max_prompt_chars;
  if (cfg.templates_dir) options.prompt.templates = prompt::PromptTemplates::load(*cfg.templates_dir);
  if (cfg.lexicon_path) options.lexicon = llm::Lexicon::load(*cfg.lexicon_path);
  options.target_rate = cfg.target_rate;
  options.max_failure_fraction = cfg.max_failure_fraction;

  std::vector<TrajectoryWindow> windows;
  json source;
  if (cfg.data_path) {
    for (auto& rec : read_dataset(*cfg.data_path)) {
      const auto window_len = static_cast<std::size_t>(cfg.window_seconds * rec.rate + 1e-9);
      if (rec.samples.size() > window_len) {
        for (auto& w : slice_windows(rec, cfg.window_seconds, cfg.window_stride)) windows.push_back(std::move(w));
      } else {
        windows.push_back(std::move(rec));
      }
    }
    source = {{"kind", "csv"}, {"path", cfg.data_path->string()}};
  } else {
    const synth::Dataset ds = synth::generate_dataset(cfg.generator, synth::DatasetCounts::uniform(cfg.per_class));
    windows = ds.windows;
    source = {{"kind", "generator"}, {"generator_manifest", ds.manifest()}};
  }
  for (const auto& w : windows) validate(w);
  const SplitAssignment split = split_dataset(windows, cfg.split_seed);

  options.extra_manifest = {{"tool", "imutrace"}, {"run_config", cfg.to_json()}, {"data_source", source}};

  const fs::path dir = cfg.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cli", "cannot create output directory " + dir.string() + ": " + ec.message());
  std::optional<llm::TranscriptLog> transcript;
  if (!options.providers.empty()) {
    transcript.emplace(dir / "transcript.jsonl");
    options.transcript = &*transcript;
  }
  const eval::EvalReport report = eval::run_experiment(windows, split, options);

  std::ostringstream split_text;
  write_split(split_text, split);
  write_text(dir / "dataset.csv", serialize_csv(windows));
  write_text(dir / "split.csv", split_text.str());
  write_text(dir / "manifest.json", eval::manifest_text(report.manifest));
  write_text(dir / "report.jsonl", eval::render_jsonl(report));
  write_text(dir / "report.txt", eval::render_text(report));
  return report;
}

std::string cmd_report(const fs::path& run_dir) {
  eval::EvalReport report = eval::parse_jsonl(read_text(run_dir / "report.jsonl"));
  const std::string manifest_text = read_text(run_dir / "manifest.json");
  if (sha256_hex(manifest_text) != report.manifest_hash) {
    throw DataError("cli", "manifest.json does not match the hash recorded in report.jsonl");
  }
  report.manifest = json::parse(manifest_text);
  return eval::render_text(report);
}

}  // namespace imutrace::pipeline
