#include "imutrace/eval.hpp"

#include <map>
#include <numeric>

#include "imutrace/error.hpp"

namespace imutrace::eval {

void ConfusionMatrix::add(TrajectoryLabel truth, std::optional<TrajectoryLabel> predicted) {
  const int t = label_index(truth);
  if (predicted) {
    ++counts[t][label_index(*predicted)];
  } else {
    ++unparsed[t];
  }
}

long ConfusionMatrix::total() const {
  long sum = unparsed_total();
  for (const auto& row : counts) sum += std::accumulate(row.begin(), row.end(), 0L);
  return sum;
}

long ConfusionMatrix::unparsed_total() const { return std::accumulate(unparsed.begin(), unparsed.end(), 0L); }

Metrics metrics(const ConfusionMatrix& m) {
  if (m.total() == 0) throw DataError("eval", "metrics of an empty confusion matrix");
  Metrics out;
  int present = 0;
  for (int k = 0; k < kNumLabels; ++k) {
    const long tp = m.counts[k][k];
    long predicted = 0, actual = m.unparsed[k];
    for (int j = 0; j < kNumLabels; ++j) {
      predicted += m.counts[j][k];
      actual += m.counts[k][j];
    }
    ClassMetrics& c = out.per_class[k];
    c.precision = predicted > 0 ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    c.recall = actual > 0 ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
    c.f1 = c.precision + c.recall > 0.0 ? 2.0 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
    // A class nobody had and nobody predicted says nothing about the model.
    if (predicted == 0 && actual == 0) continue;
    ++present;
    out.precision += c.precision;
    out.recall += c.recall;
    out.f1 += c.f1;
  }
  out.precision /= present;
  out.recall /= present;
  out.f1 /= present;
  return out;
}

ConfusionMatrix confusion(std::span<const llm::Prediction> predictions, std::span<const TrajectoryWindow> truths) {
  std::map<std::string_view, TrajectoryLabel> truth_of;
  for (const auto& w : truths) {
    if (w.label) truth_of.emplace(w.id, *w.label);
  }
  ConfusionMatrix m;
  for (const auto& p : predictions) {
    const auto it = truth_of.find(p.window_id);
    if (it == truth_of.end()) throw DataError("eval", "no labeled truth for window '" + p.window_id + "'");
    m.add(it->second, p.status == llm::PredictionStatus::Ok ? p.label : std::nullopt);
  }
  return m;
}

const Cell* EvalReport::find(std::string_view model, Scenario scenario, SplitPart split) const {
  for (const Cell& c : cells) {
    if (c.model == model && c.scenario == scenario && c.split == split) return &c;
  }
  return nullptr;
}

}  // namespace imutrace::eval
