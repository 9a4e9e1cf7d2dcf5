#include <doctest.h>

#include "imutrace/error.hpp"
#include "imutrace/eval.hpp"
#include "imutrace/experiment.hpp"
#include "support.hpp"

using namespace imutrace;
using namespace imutrace::eval;
using namespace imutrace::testing;

namespace {

llm::Prediction pred(const std::string& id, std::optional<TrajectoryLabel> label,
                     llm::PredictionStatus status = llm::PredictionStatus::Ok) {
  llm::Prediction p;
  p.window_id = id;
  p.label = label;
  p.status = status;
  return p;
}

TrajectoryWindow truth(const std::string& id, TrajectoryLabel label) {
  TrajectoryWindow w;
  w.id = id;
  w.label = label;
  return w;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("PerfectDiagonal") {
  ConfusionMatrix m;
  for (int i = 0; i < 20; ++i) m.add(label_from_index(i % 4), label_from_index(i % 4));
  long diagonal = 0;
  for (int c = 0; c < kNumLabels; ++c) diagonal += m.counts[c][c];
  CHECK(diagonal == 20);
  const auto r = metrics(m);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
  CHECK(r.f1 == 1.0);
}

TEST_CASE("SingleMistakeLandsOffDiagonal") {
  ConfusionMatrix m;
  m.add(TrajectoryLabel::TurnLeft, TrajectoryLabel::Straight);
  CHECK(m.counts[2][0] == 1);
  CHECK(m.total() == 1);
}

TEST_CASE("HandComputedTwoClassSlice") {
  // TurnLeft: TP=4, FP=1 (a Straight called TurnLeft), FN=1.
  ConfusionMatrix m;
  for (int i = 0; i < 4; ++i) m.add(TrajectoryLabel::TurnLeft, TrajectoryLabel::TurnLeft);
  m.add(TrajectoryLabel::Straight, TrajectoryLabel::TurnLeft);
  m.add(TrajectoryLabel::TurnLeft, TrajectoryLabel::Straight);
  const auto r = metrics(m).per_class[2];
  CHECK(r.precision == doctest::Approx(0.8));
  CHECK(r.recall == doctest::Approx(0.8));
  CHECK(r.f1 == doctest::Approx(0.8));
}

TEST_CASE("MacroMetricsMatchBruteForce") {
  Rng rng(42);
  for (int i = 0; i < 200; ++i) {
    const auto m = random_matrix(rng, i % 2 == 1);
    const auto got = metrics(m);
    const auto want = brute_force_metrics(m);
    CHECK(std::abs(got.precision - want.precision) <= 1e-12);
    CHECK(std::abs(got.recall - want.recall) <= 1e-12);
    CHECK(std::abs(got.f1 - want.f1) <= 1e-12);
    CHECK(got.f1 <= 1.0);
  }
}

TEST_CASE("MacroF1IsInvariantUnderClassRelabeling") {
  Rng rng(5);
  const std::array<int, 4> perm = {2, 0, 3, 1};
  for (int i = 0; i < 50; ++i) {
    const auto m = random_matrix(rng, false);
    ConfusionMatrix p;
    for (int t = 0; t < 4; ++t) {
      for (int q = 0; q < 4; ++q) p.counts[perm[t]][perm[q]] = m.counts[t][q];
    }
    CHECK(metrics(p).f1 == doctest::Approx(metrics(m).f1).epsilon(1e-12));
  }
}

TEST_CASE("PerClassF1NeverExceedsMeanOfPrecisionAndRecall") {
  Rng rng(6);
  for (int i = 0; i < 50; ++i) {
    for (const auto& c : metrics(random_matrix(rng, true)).per_class) {
      CHECK(c.f1 <= 0.5 * (c.precision + c.recall) + 1e-15);
    }
  }
}

TEST_CASE("AbsentClassIsLeftOutOfMacroMean") {
  ConfusionMatrix m;
  m.add(TrajectoryLabel::Straight, TrajectoryLabel::Straight);
  m.add(TrajectoryLabel::TurnLeft, TrajectoryLabel::TurnLeft);
  m.add(TrajectoryLabel::TurnRight, TrajectoryLabel::TurnRight);
  CHECK(metrics(m).f1 == 1.0);
  CHECK(metrics(m).per_class[3].f1 == 0.0);
  // Predicted but never true still counts: precision 0 for TurnAround.
  m.add(TrajectoryLabel::Straight, TrajectoryLabel::TurnAround);
  CHECK(metrics(m).precision == doctest::Approx(0.75));
}

TEST_CASE("EmptyMatrixIsAnError") { CHECK_THROWS_AS(metrics(ConfusionMatrix{}), DataError); }

TEST_CASE("UnparsedCountsAgainstRecallOnly") {
  ConfusionMatrix m;
  m.add(TrajectoryLabel::Straight, TrajectoryLabel::Straight);
  m.add(TrajectoryLabel::Straight, std::nullopt);
  const auto r = metrics(m).per_class[0];
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 0.5);
  CHECK(m.unparsed_total() == 1);
}

TEST_CASE("ConfusionRecountMatchesPredictionCount") {
  Rng rng(9);
  std::vector<TrajectoryWindow> truths;
  std::vector<llm::Prediction> preds;
  for (int i = 0; i < 60; ++i) {
    const std::string id = "w" + std::to_string(i);
    truths.push_back(truth(id, label_from_index(static_cast<int>(rng.below(4)))));
    const auto roll = rng.below(10);
    if (roll == 0) preds.push_back(pred(id, std::nullopt, llm::PredictionStatus::Unparsed));
    else if (roll == 1) preds.push_back(pred(id, std::nullopt, llm::PredictionStatus::Failed));
    else preds.push_back(pred(id, label_from_index(static_cast<int>(rng.below(4)))));
  }
  const auto m = confusion(preds, truths);
  long recount = 0;
  for (const auto& row : m.counts) {
    for (const long v : row) recount += v;
  }
  for (const long v : m.unparsed) recount += v;
  CHECK(recount == 60);
  CHECK(m.total() == 60);
}

TEST_CASE("ConfusionNeedsTruth") {
  const std::vector<TrajectoryWindow> truths = {truth("a", TrajectoryLabel::Straight)};
  const std::vector<llm::Prediction> preds = {pred("b", TrajectoryLabel::Straight)};
  CHECK_THROWS_AS(confusion(preds, truths), DataError);
}

TEST_CASE("PercentRoundsHalfAwayFromZero") {
  CHECK(format_percent(0.8325) == "83.3%");
  CHECK(format_percent(0.8324) == "83.2%");
  CHECK(format_percent(1.0) == "100.0%");
  CHECK(format_percent(0.0) == "0.0%");
  CHECK(format_percent(0.0005) == "0.1%");
  CHECK(format_percent(-0.0005) == "-0.1%");
  CHECK(format_percent(0.836) == "83.6%");
}

TEST_CASE("OneCellReport") {
  EvalReport r;
  Cell c;
  c.model = "RF";
  c.scenario = Scenario::Indoor;
  c.split = SplitPart::SeenTest;
  c.windows = 2;
  c.matrix.add(TrajectoryLabel::Straight, TrajectoryLabel::Straight);
  c.matrix.add(TrajectoryLabel::TurnLeft, TrajectoryLabel::TurnLeft);
  c.metrics = metrics(c.matrix);
  r.cells.push_back(c);
  r.manifest = {{"seed", 1}};
  r.manifest_hash = manifest_hash(r.manifest);
  const std::string text = render_text(r);
  CHECK(text.find("Models") != std::string::npos);
  CHECK(text.find("Scenarios") != std::string::npos);
  CHECK(text.find("Test subject") != std::string::npos);
  CHECK(text.find("Accuracy") != std::string::npos);
  CHECK(text.find("F1-Score") != std::string::npos);
  CHECK(text.find("83.6%") != std::string::npos);
  CHECK(text.find("76.7%") != std::string::npos);
  CHECK(text.find(r.manifest_hash) != std::string::npos);
  int rows = 0;
  std::stringstream ss(text);
  for (std::string line; std::getline(ss, line);) rows += line.starts_with("RF");
  CHECK(rows == 1);
}

TEST_CASE("JsonlRoundTrip") {
  EvalReport r;
  Rng rng(11);
  for (const std::string model : {"RF", "mock-CoT"}) {
    for (const auto s : kAllScenarios) {
      Cell c;
      c.model = model;
      c.scenario = s;
      c.split = SplitPart::UnseenTest;
      c.matrix = random_matrix(rng, true);
      c.windows = c.matrix.total();
      c.unparsed = c.matrix.unparsed_total();
      c.metrics = metrics(c.matrix);
      r.cells.push_back(c);
    }
  }
  Cell skipped;
  skipped.model = "SVM";
  skipped.skipped = true;
  skipped.skip_reason = "no training windows";
  r.cells.push_back(skipped);
  r.manifest = {{"k", "v"}};
  r.manifest_hash = manifest_hash(r.manifest);
  const auto back = parse_jsonl(render_jsonl(r));
  CHECK(back.manifest_hash == r.manifest_hash);
  REQUIRE(back.cells.size() == r.cells.size());
  for (std::size_t i = 0; i < r.cells.size(); ++i) CHECK(back.cells[i] == r.cells[i]);
  CHECK(render_jsonl(back) == render_jsonl(r));
}

TEST_CASE("ManifestHashIsKeyOrderIndependent") {
  const auto a = nlohmann::json::parse(R"({"b": 1, "a": [1, 2]})");
  const auto b = nlohmann::json::parse(R"({"a": [1, 2], "b": 1})");
  CHECK(manifest_hash(a) == manifest_hash(b));
  CHECK(manifest_text(a).ends_with("\n"));
}

TEST_CASE("ExperimentFillsEveryCellAndMockIsPerfectOnZeroNoise") {
  const auto ds = synth::generate_dataset(zero_noise_config(2), synth::DatasetCounts::uniform(12));
  const auto split = split_dataset(ds.windows, 2);
  ExperimentOptions opt;
  opt.baselines = {baselines::ModelKind::RandomForest, baselines::ModelKind::Svm};
  opt.baseline_configs.rf.trees = 20;
  opt.providers = {std::make_shared<llm::MockProvider>()};
  const auto report = run_experiment(ds.windows, split, opt);
  // 2 baselines x 2 scenarios x 2 splits + 2 modes x 2 scenarios
  CHECK(report.cells.size() == 12);
  for (const auto& c : report.cells) {
    CHECK_FALSE(c.skipped);
    CHECK(c.windows == c.matrix.total());
    if (c.model.starts_with("mock")) CHECK(c.split == SplitPart::UnseenTest);
  }
  for (const auto s : kAllScenarios) {
    const Cell* cot = report.find("mock-CoT", s, SplitPart::UnseenTest);
    REQUIRE(cot != nullptr);
    CHECK(cot->metrics.f1 == 1.0);
    CHECK(report.find("RF", s, SplitPart::SeenTest) != nullptr);
  }
  CHECK(report.manifest.at("dataset_sha256").get<std::string>().size() == 64);
  CHECK(report.manifest_hash == manifest_hash(report.manifest));
}

TEST_CASE("ExperimentSkipsCellsWithTooManyFailures") {
  struct Broken final : llm::Provider {
    std::string id() const override { return "broken"; }
    nlohmann::json describe() const override { return {{"id", "broken"}}; }
    llm::CompletionResult complete(const prompt::PromptBundle&) override {
      throw TransportError("stub", "down", 503, 4);
    }
  };
  const auto ds = synth::generate_dataset(zero_noise_config(1), synth::DatasetCounts::uniform(6));
  ExperimentOptions opt;
  opt.baselines.clear();
  opt.modes = {prompt::PromptMode::DirectOutput};
  opt.providers = {std::make_shared<Broken>()};
  const auto report = run_experiment(ds.windows, split_dataset(ds.windows, 1), opt);
  REQUIRE(report.cells.size() == 2);
  for (const auto& c : report.cells) {
    CHECK(c.skipped);
    CHECK(c.failed == c.windows);
    CHECK(c.skip_reason.find("requests failed") != std::string::npos);
  }
  CHECK(render_text(report).find("skipped") != std::string::npos);
}

}
