#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "imutrace/error.hpp"
#include "imutrace/imu.hpp"

namespace imutrace {

namespace {

constexpr std::size_t kColumns = 13;

std::string format_field(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

double parse_number(std::string_view field, std::size_t line_no, std::string_view column) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty() || !std::isfinite(value)) {
    throw DataError("imu_core", "line " + std::to_string(line_no) + ": column '" +
                                    std::string(column) + "' is not a finite number: '" +
                                    std::string(field) + "'");
  }
  return value;
}

}  // namespace

double quantize_csv(double value) {
  const std::string text = format_field(value);
  double out = 0.0;
  std::from_chars(text.data(), text.data() + text.size(), out);
  return out;
}

std::vector<TrajectoryWindow> ingest_csv(std::istream& in) {
  static constexpr std::array<std::string_view, kColumns> kNames = {
      "recording_id", "scenario", "label", "t", "ax", "ay", "az",
      "gx",           "gy",       "gz",    "mx", "my", "mz"};

  std::vector<TrajectoryWindow> windows;
  std::unordered_map<std::string, std::size_t> index_of;
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!seen_header) {
      if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
      if (line != kCsvHeader) {
        throw DataError("imu_core", "line 1: expected header '" + std::string(kCsvHeader) + "'");
      }
      seen_header = true;
      continue;
    }
    if (line.empty()) continue;

    const auto fields = split_fields(line);
    if (fields.size() != kColumns) {
      throw DataError("imu_core", "line " + std::to_string(line_no) + ": expected " +
                                      std::to_string(kColumns) + " columns, found " +
                                      std::to_string(fields.size()));
    }
    const std::string id(fields[0]);
    if (id.empty()) {
      throw DataError("imu_core", "line " + std::to_string(line_no) + ": empty recording_id");
    }

    Scenario scenario;
    std::optional<TrajectoryLabel> label;
    try {
      scenario = parse_scenario(fields[1]);
      if (!fields[2].empty()) label = parse_trajectory_label(fields[2]);
    } catch (const DataError& e) {
      throw DataError("imu_core", "line " + std::to_string(line_no) + ": " + e.what());
    }

    ImuSample sample;
    sample.t = parse_number(fields[3], line_no, kNames[3]);
    for (int c = 0; c < kNumChannels; ++c) {
      sample.channel(c) = parse_number(fields[4 + c], line_no, kNames[4 + c]);
    }

    auto [it, inserted] = index_of.try_emplace(id, windows.size());
    if (inserted) {
      TrajectoryWindow w;
      w.id = id;
      w.scenario = scenario;
      w.recording_group = recording_group_of(id);
      w.label = label;
      windows.push_back(std::move(w));
    }
    TrajectoryWindow& w = windows[it->second];
    if (w.scenario != scenario || w.label != label) {
      throw DataError("imu_core", "line " + std::to_string(line_no) + ": recording '" + id +
                                      "' changes scenario or label mid-recording");
    }
    if (!w.samples.empty() && !(sample.t > w.samples.back().t)) {
      throw DataError("imu_core", "line " + std::to_string(line_no) + ": timestamps of recording '" +
                                      id + "' are not strictly increasing");
    }
    w.samples.push_back(sample);
  }
  if (!seen_header) throw DataError("imu_core", "missing CSV header");

  for (TrajectoryWindow& w : windows) {
    if (w.samples.size() < 2) {
      throw DataError("imu_core", "recording '" + w.id + "' has fewer than 2 samples");
    }
    std::vector<double> deltas;
    deltas.reserve(w.samples.size() - 1);
    for (std::size_t i = 1; i < w.samples.size(); ++i) {
      deltas.push_back(w.samples[i].t - w.samples[i - 1].t);
    }
    const auto mid = deltas.begin() + static_cast<std::ptrdiff_t>(deltas.size() / 2);
    std::nth_element(deltas.begin(), mid, deltas.end());
    w.rate = quantize_csv(1.0 / *mid);
    validate(w);
  }
  return windows;
}

void serialize_csv(std::ostream& out, std::span<const TrajectoryWindow> windows) {
  out << kCsvHeader << '\n';
  for (const TrajectoryWindow& w : windows) {
    if (w.id.find_first_of(",\r\n") != std::string::npos) {
      throw DataError("imu_core", "recording id '" + w.id + "' cannot contain commas or newlines");
    }
    const std::string label = w.label ? std::string(to_string(*w.label)) : std::string();
    for (const ImuSample& s : w.samples) {
      out << w.id << ',' << to_string(w.scenario) << ',' << label << ',' << format_field(s.t);
      for (int c = 0; c < kNumChannels; ++c) out << ',' << format_field(s.channel(c));
      out << '\n';
    }
  }
}

std::string serialize_csv(std::span<const TrajectoryWindow> windows) {
  std::ostringstream out;
  serialize_csv(out, windows);
  return out.str();
}

}  // namespace imutrace
