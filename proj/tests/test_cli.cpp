#include <doctest.h>

#include "imutrace/eval.hpp"
#include "imutrace/pipeline.hpp"
#include "support.hpp"

using namespace imutrace;
using namespace imutrace::testing;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) { return pipeline::read_text(p); }

fs::path zero_noise_config_file(const fs::path& dir) {
  nlohmann::json noise = synth::to_json(synth::NoiseProfile::none());
  const nlohmann::json cfg = {{"generator", {{"noise", {{"indoor", noise}, {"outdoor", noise}}}}}};
  const fs::path path = dir / "zero_noise.json";
  pipeline::write_text(path, cfg.dump(2));
  return path;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("HelpListsFlagsWithDefaults") {
  std::string out;
  CHECK(run_cli("run --help", &out) == 0);
  for (const char* flag : {"--config", "--data", "--seed", "--per-class", "--baselines", "--providers", "--modes",
                           "--target-rate", "--max-failure-fraction", "--out", "--trees", "--svm-c", "--epochs",
                           "--batch-size", "--learning-rate"}) {
    CAPTURE(flag);
    CHECK(out.find(flag) != std::string::npos);
  }
  CHECK(out.find("[40]") != std::string::npos);   // per-class
  CHECK(out.find("[mock]") != std::string::npos);
  CHECK(out.find("[do,cot]") != std::string::npos);
  CHECK(out.find("[rf,svm,cnn,lstm]") != std::string::npos);
  CHECK(out.find("[100]") != std::string::npos);  // trees
  CHECK(out.find("40 CNN, 100 LSTM") != std::string::npos);
  CHECK(run_cli("generate --help", &out) == 0);
  CHECK(out.find("--per-class") != std::string::npos);
}

TEST_CASE("BadFlagIsConfigExit") {
  CHECK(run_cli("run --no-such-flag") == 2);
  CHECK(run_cli("run --modes sideways --baselines \"\"") == 2);
  CHECK(run_cli("") == 2);
}

TEST_CASE("GenerateCountsAndDeterminism") {
  const auto a = fresh_dir("gen_a");
  const auto b = fresh_dir("gen_b");
  std::string out;
  CHECK(run_cli("generate --per-class 10 --seed 7 --out " + a.string(), &out) == 0);
  CHECK(out.find("wrote 80 windows") != std::string::npos);
  CHECK(run_cli("generate --per-class 10 --seed 7 --out " + b.string()) == 0);
  CHECK(slurp(a / "dataset.csv") == slurp(b / "dataset.csv"));
  CHECK(slurp(a / "dataset_manifest.json") == slurp(b / "dataset_manifest.json"));
}

TEST_CASE("GenerateZeroPerClassWarnsAndSucceeds") {
  const auto dir = fresh_dir("gen_zero");
  std::string out;
  CHECK(run_cli("generate --per-class 0 --out " + dir.string(), &out) == 0);
  CHECK(out.find("warning") != std::string::npos);
  CHECK(slurp(dir / "dataset.csv") == std::string(kCsvHeader) + "\n");
}

TEST_CASE("MissingTokenFailsBeforeAnyOutput") {
  const auto dir = fresh_dir("no_token") / "run";
  std::string out;
  const int code = run_cli("run --providers openai --baselines \"\" --per-class 4 --out " + dir.string(), &out,
                           "env -u OPENAI_API_KEY");
  CHECK(code == 2);
  CHECK(out.find("OPENAI_API_KEY") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "report.txt"));
  CHECK_FALSE(fs::exists(dir / "report.jsonl"));
}

TEST_CASE("MissingDataFileIsDataExit") {
  const auto dir = fresh_dir("no_data");
  CHECK(run_cli("run --data " + (dir / "absent.csv").string() + " --out " + dir.string()) == 3);
}

TEST_CASE("BaselineSelectionLimitsCells") {
  const auto dir = fresh_dir("rf_only");
  CHECK(run_cli("run --baselines rf --providers \"\" --per-class 6 --trees 10 --out " + dir.string()) == 0);
  const auto report = eval::parse_jsonl(slurp(dir / "report.jsonl"));
  CHECK(report.cells.size() == 4);
  for (const auto& c : report.cells) CHECK(c.model == "RF");
}

TEST_CASE("MockOnZeroNoiseDataIsPerfect") {
  const auto dir = fresh_dir("mock_zero");
  const auto cfg = zero_noise_config_file(dir);
  CHECK(run_cli("run --config " + cfg.string() + " --providers mock --modes cot,do --baselines \"\" --per-class 8 --out " +
                (dir / "run").string()) == 0);
  const auto report = eval::parse_jsonl(slurp(dir / "run" / "report.jsonl"));
  for (const auto s : kAllScenarios) {
    const auto* cot = report.find("mock-CoT", s, SplitPart::UnseenTest);
    REQUIRE(cot != nullptr);
    CHECK(cot->metrics.f1 == 1.0);
    CHECK(report.find("mock-DO", s, SplitPart::UnseenTest) != nullptr);
  }
  for (const char* f : {"dataset.csv", "split.csv", "manifest.json", "report.txt", "report.jsonl", "transcript.jsonl"}) {
    CHECK(fs::exists(dir / "run" / f));
  }
  // The report subcommand re-renders the stored text exactly.
  std::string out;
  CHECK(run_cli("report " + (dir / "run").string(), &out) == 0);
  CHECK(out == slurp(dir / "run" / "report.txt"));
}

TEST_CASE("ManifestReplaysTheRun") {
  const auto dir = fresh_dir("replay");
  CHECK(run_cli("run --seed 4 --baselines rf,svm --trees 10 --per-class 6 --out " + (dir / "a").string()) == 0);
  CHECK(run_cli("run --config " + (dir / "a" / "manifest.json").string() + " --out " + (dir / "b").string()) == 0);
  for (const char* f : {"dataset.csv", "split.csv", "manifest.json", "report.txt", "report.jsonl"}) {
    CAPTURE(f);
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
}

TEST_CASE("TamperedManifestIsRejected") {
  const auto dir = fresh_dir("tamper");
  CHECK(run_cli("run --baselines \"\" --per-class 4 --out " + dir.string()) == 0);
  pipeline::write_text(dir / "manifest.json", slurp(dir / "manifest.json") + " ");
  CHECK(run_cli("report " + dir.string()) == 3);
}

TEST_CASE("SplitAndTrainSubcommands") {
  const auto dir = fresh_dir("stepwise");
  CHECK(run_cli("generate --per-class 6 --scenarios indoor --out " + dir.string()) == 0);
  CHECK(run_cli("split --data " + (dir / "dataset.csv").string() + " --out " + (dir / "split.csv").string()) == 0);
  std::ifstream split_in(dir / "split.csv");
  const auto split = pipeline::read_split(split_in);
  const auto windows = pipeline::read_dataset(dir / "dataset.csv");
  CHECK(split_violation(windows, split).empty());
  CHECK(run_cli("train --data " + (dir / "dataset.csv").string() + " --split " + (dir / "split.csv").string() +
                " --baselines rf,cnn --trees 5 --epochs 2 --out " + (dir / "models").string()) == 0);
  CHECK(fs::exists(dir / "models" / "rf_indoor.model.json"));
  CHECK(fs::exists(dir / "models" / "cnn_indoor.model.json"));
  CHECK(fs::exists(dir / "models" / "cnn_indoor.log.csv"));
  const auto model = baselines::load_model(dir / "models" / "cnn_indoor.model.json");
  CHECK(model.manifest.curve.size() == 2);
}

}
