#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "imutrace/imu.hpp"
#include "imutrace/llm_client.hpp"

namespace imutrace::eval {

/// Rows are truth, columns prediction, both in the fixed label order. Answers
/// that never resolved to a label land in a fifth "unparsed" column per truth
/// row: they count against recall but not against any class's precision.
struct ConfusionMatrix {
  std::array<std::array<long, kNumLabels>, kNumLabels> counts{};
  std::array<long, kNumLabels> unparsed{};

  void add(TrajectoryLabel truth, std::optional<TrajectoryLabel> predicted);
  long total() const;
  long unparsed_total() const;
  bool operator==(const ConfusionMatrix&) const = default;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  bool operator==(const ClassMetrics&) const = default;
};

struct Metrics {
  double precision = 0.0;  // macro
  double recall = 0.0;
  double f1 = 0.0;
  std::array<ClassMetrics, kNumLabels> per_class{};

  bool operator==(const Metrics&) const = default;
};

/// Per-class P = TP/(TP+FP), R = TP/(TP+FN+unparsed), F1 = 2PR/(P+R), each 0
/// when its denominator is 0. Macro values are the unweighted mean over the
/// classes that occur in the matrix as truth or prediction; a class with
/// TP+FP+FN = 0 is left out instead of counting as 0. Throws DataError for an
/// empty matrix.
Metrics metrics(const ConfusionMatrix& m);

/// Tallies predictions against the windows' labels. Unparsed and failed
/// predictions go to the unparsed column. Throws DataError when a prediction
/// has no labeled truth window.
ConfusionMatrix confusion(std::span<const llm::Prediction> predictions, std::span<const TrajectoryWindow> truths);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct Cell {
  std::string model;  // "RF", "mock-CoT", ...
  Scenario scenario = Scenario::Indoor;
  SplitPart split = SplitPart::SeenTest;
  bool skipped = false;
  std::string skip_reason;
  long windows = 0;
  long failed = 0;    // transport/provider failures (LLM cells)
  long unparsed = 0;  // answers without a resolvable label (LLM cells)
  ConfusionMatrix matrix;
  Metrics metrics;

  nlohmann::json to_json() const;
  static Cell from_json(const nlohmann::json& j);
  bool operator==(const Cell&) const = default;
};

struct EvalReport {
  std::vector<Cell> cells;
  nlohmann::json manifest;
  std::string manifest_hash;  // sha256 of the canonical manifest dump

  const Cell* find(std::string_view model, Scenario scenario, SplitPart split) const;
};

/// Canonical manifest text (sorted keys, two-space indent, trailing newline)
/// and its hash.
std::string manifest_text(const nlohmann::json& manifest);
std::string manifest_hash(const nlohmann::json& manifest);

/// Percentage at one decimal, half away from zero: 0.8325 -> "83.3%".
std::string format_percent(double fraction);

/// Aligned plain-text table in the layout models x scenarios x test subject
/// with P/R/F1 grouped under "Accuracy", followed by reference values and the
/// manifest hash.
std::string render_text(const EvalReport& report);

/// One JSON object per line: a header carrying the manifest hash, then one
/// line per cell.
std::string render_jsonl(const EvalReport& report);

/// Inverse of render_jsonl (manifest itself is not part of the stream).
EvalReport parse_jsonl(std::string_view text);

/// Reference GPT4-CoT unseen F1 values shown in the report footer.
inline constexpr double kReferenceCotIndoorF1 = 0.836;
inline constexpr double kReferenceCotOutdoorF1 = 0.767;

}  // namespace imutrace::eval
