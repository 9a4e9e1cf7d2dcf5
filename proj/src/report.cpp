#include <cmath>
#include <cstdio>
#include <sstream>

#include "imutrace/error.hpp"
#include "imutrace/eval.hpp"
#include "imutrace/hash.hpp"

namespace imutrace::eval {

using nlohmann::json;

namespace {

json metrics_json(const Metrics& m) {
  json per = json::array();
  for (const ClassMetrics& c : m.per_class) per.push_back({c.precision, c.recall, c.f1});
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"per_class", std::move(per)}};
}

Metrics metrics_from(const json& j) {
  Metrics m;
  m.precision = j.at("precision").get<double>();
  m.recall = j.at("recall").get<double>();
  m.f1 = j.at("f1").get<double>();
  for (int k = 0; k < kNumLabels; ++k) {
    const json& c = j.at("per_class").at(static_cast<std::size_t>(k));
    m.per_class[k] = {c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()};
  }
  return m;
}

std::string subject_name(SplitPart split) { return split == SplitPart::UnseenTest ? "Unseen" : "Seen"; }

std::string capitalized(std::string_view s) {
  std::string out(s);
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

json Cell::to_json() const {
  json j = {{"model", model},
            {"scenario", to_string(scenario)},
            {"split", to_string(split)},
            {"skipped", skipped},
            {"skip_reason", skip_reason},
            {"windows", windows},
            {"failed", failed},
            {"unparsed", unparsed},
            {"confusion", matrix.counts},
            {"unparsed_by_truth", matrix.unparsed}};
  j["metrics"] = skipped ? json(nullptr) : metrics_json(metrics);
  return j;
}

Cell Cell::from_json(const json& j) {
  Cell c;
  c.model = j.at("model").get<std::string>();
  c.scenario = parse_scenario(j.at("scenario").get<std::string>());
  c.split = parse_split_part(j.at("split").get<std::string>());
  c.skipped = j.at("skipped").get<bool>();
  c.skip_reason = j.at("skip_reason").get<std::string>();
  c.windows = j.at("windows").get<long>();
  c.failed = j.at("failed").get<long>();
  c.unparsed = j.at("unparsed").get<long>();
  c.matrix.counts = j.at("confusion").get<decltype(c.matrix.counts)>();
  c.matrix.unparsed = j.at("unparsed_by_truth").get<decltype(c.matrix.unparsed)>();
  if (!j.at("metrics").is_null()) c.metrics = metrics_from(j.at("metrics"));
  return c;
}

std::string manifest_text(const json& manifest) { return manifest.dump(2) + "\n"; }

std::string manifest_hash(const json& manifest) { return sha256_hex(manifest_text(manifest)); }

std::string format_percent(double fraction) {
  // The epsilon absorbs binary representation error so that decimal halves
  // such as 0.8325 round up as written.
  const double scaled = fraction * 1000.0;
  const double rounded = std::copysign(std::floor(std::abs(scaled) + 0.5 + 1e-7), scaled) / 10.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", rounded == 0.0 ? 0.0 : rounded);
  return buf;
}

std::string render_text(const EvalReport& report) {
  const std::vector<std::string> head = {"Models", "Scenarios", "Test subject", "Precision", "Recall", "F1-Score"};
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> notes;
  for (const Cell& c : report.cells) {
    std::vector<std::string> row = {c.model, capitalized(to_string(c.scenario)), subject_name(c.split)};
    if (c.skipped) {
      row.insert(row.end(), {"-", "-", "-"});
      notes.push_back(c.model + " / " + row[1] + " / " + row[2] + " skipped: " + c.skip_reason);
    } else {
      row.insert(row.end(), {format_percent(c.metrics.precision), format_percent(c.metrics.recall),
                             format_percent(c.metrics.f1)});
      if (c.unparsed > 0 || c.failed > 0) {
        notes.push_back(c.model + " / " + row[1] + " / " + row[2] + ": " + std::to_string(c.unparsed) +
                        " unparsed, " + std::to_string(c.failed) + " failed of " + std::to_string(c.windows));
      }
    }
    rows.push_back(std::move(row));
  }

  std::vector<std::size_t> width(head.size());
  for (std::size_t k = 0; k < head.size(); ++k) {
    width[k] = head[k].size();
    for (const auto& r : rows) width[k] = std::max(width[k], r[k].size());
  }
  constexpr std::size_t kGap = 2;
  const auto line = [&](const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      s += k + 1 < cells.size() ? pad(cells[k], width[k] + kGap) : cells[k];
    }
    return s + "\n";
  };

  std::ostringstream out;
  std::size_t metrics_col = 0;
  for (std::size_t k = 0; k < 3; ++k) metrics_col += width[k] + kGap;
  out << std::string(metrics_col, ' ') << "Accuracy\n";
  out << line(head);
  std::size_t total_width = metrics_col;
  for (std::size_t k = 3; k < head.size(); ++k) total_width += width[k] + (k + 1 < head.size() ? kGap : 0);
  out << std::string(total_width, '-') << "\n";
  for (const auto& r : rows) out << line(r);
  out << std::string(total_width, '-') << "\n";
  for (const auto& n : notes) out << "note: " << n << "\n";
  out << "reference GPT4-CoT unseen F1: indoor " << format_percent(kReferenceCotIndoorF1) << ", outdoor "
      << format_percent(kReferenceCotOutdoorF1) << "\n";
  out << "manifest sha256: " << report.manifest_hash << "\n";
  return out.str();
}

std::string render_jsonl(const EvalReport& report) {
  std::string out = json{{"record", "report"}, {"manifest_sha256", report.manifest_hash}}.dump() + "\n";
  for (const Cell& c : report.cells) {
    json j = c.to_json();
    j["record"] = "cell";
    out += j.dump() + "\n";
  }
  return out;
}

EvalReport parse_jsonl(std::string_view text) {
  EvalReport report;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("eval", "report line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::string kind = j.value("record", "");
    if (kind == "report") {
      report.manifest_hash = j.at("manifest_sha256").get<std::string>();
      have_header = true;
    } else if (kind == "cell") {
      report.cells.push_back(Cell::from_json(j));
    } else {
      throw DataError("eval", "report line " + std::to_string(line_no) + ": unknown record '" + kind + "'");
    }
  }
  if (!have_header) throw DataError("eval", "report has no header line");
  return report;
}

}  // namespace imutrace::eval
