#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>

#include "imutrace/error.hpp"
#include "imutrace/llm_client.hpp"

namespace imutrace::llm {

namespace {

struct EmbeddedData {
  std::array<int, kNumChannels> order = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<std::array<double, kNumChannels>> rows;
  double rate = 0.0;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

std::optional<double> to_number(std::string_view token) {
  token = trim(token);
  if (token.empty()) return std::nullopt;
  if (token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

// Smallest "<number> Hz" mention: the question states the source rate and
// the downsampled rate of the embedded data.
std::optional<double> find_rate(std::string_view text) {
  std::optional<double> best;
  for (auto pos = text.find("Hz"); pos != std::string_view::npos; pos = text.find("Hz", pos + 2)) {
    std::size_t end = pos;
    while (end > 0 && text[end - 1] == ' ') --end;
    std::size_t begin = end;
    while (begin > 0 && (std::isdigit(static_cast<unsigned char>(text[begin - 1])) || text[begin - 1] == '.')) {
      --begin;
    }
    if (begin == end) continue;
    const auto value = to_number(text.substr(begin, end - begin));
    if (value && *value > 0.0 && (!best || *value < *best)) best = value;
  }
  return best;
}

EmbeddedData extract(std::string_view question) {
  EmbeddedData data;
  for (std::string_view line : split(question, '\n')) {
    for (std::string_view segment : split(line, ';')) {
      const auto tokens = split(segment, ',');
      if (tokens.size() != kNumChannels) continue;
      std::array<int, kNumChannels> order{};
      bool header = true;
      for (int k = 0; k < kNumChannels && header; ++k) {
        const auto name = trim(tokens[k]);
        const auto it = std::find(kChannelNames.begin(), kChannelNames.end(), name);
        if (it == kChannelNames.end()) header = false;
        else order[k] = static_cast<int>(it - kChannelNames.begin());
      }
      if (header) {
        data.order = order;
        continue;
      }
      std::array<double, kNumChannels> row{};
      bool numeric = true;
      for (int k = 0; k < kNumChannels && numeric; ++k) {
        const auto value = to_number(tokens[k]);
        if (!value) numeric = false;
        else row[k] = *value;
      }
      if (numeric) data.rows.push_back(row);
    }
  }
  if (data.rows.size() < 2) {
    throw ProviderError("mock", "prompt does not embed at least two parseable IMU samples");
  }
  const auto rate = find_rate(question);
  if (!rate) throw ProviderError("mock", "prompt does not state a sampling rate in Hz");
  data.rate = *rate;
  return data;
}

std::string fmt(const char* pattern, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, value);
  return buf;
}

}  // namespace

CompletionResult mock_complete(const PromptBundle& bundle) {
  const auto start = std::chrono::steady_clock::now();
  const EmbeddedData data = extract(bundle.question);
  const auto gz_col = static_cast<std::size_t>(
      std::find(data.order.begin(), data.order.end(), 5) - data.order.begin());
  const double dt = 1.0 / data.rate;

  double heading = 0.0;
  double gz_min = data.rows.front()[gz_col];
  double gz_max = gz_min;
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    const double gz = data.rows[i][gz_col];
    gz_min = std::min(gz_min, gz);
    gz_max = std::max(gz_max, gz);
    if (i > 0) heading += 0.5 * dt * (data.rows[i - 1][gz_col] + gz);
  }

  constexpr double kPi = std::numbers::pi;
  const double magnitude = std::abs(heading);
  TrajectoryLabel label = TrajectoryLabel::Straight;
  std::string reading;
  if (magnitude < kPi / 4.0) {
    reading = "The magnitude is below 45 degrees, so the heading barely changed and gz shows only minor fluctuation.";
  } else if (magnitude < 3.0 * kPi / 4.0) {
    label = heading > 0.0 ? TrajectoryLabel::TurnLeft : TrajectoryLabel::TurnRight;
    reading = std::string("The magnitude lies between 45 and 135 degrees, consistent with a quarter rotation in the ") +
              (heading > 0.0 ? "counter-clockwise" : "clockwise") + " direction.";
  } else {
    label = TrajectoryLabel::TurnAround;
    reading = "The magnitude is at least 135 degrees, consistent with the robot reversing its direction of travel.";
  }

  CompletionResult result;
  result.provider_id = "mock";
  if (bundle.mode == PromptMode::DirectOutput) {
    result.text = std::string(to_string(label));
  } else {
    const double duration = static_cast<double>(data.rows.size()) * dt;
    result.text =
        "Phase 1 - Understanding the problem: The question provides " + std::to_string(data.rows.size()) +
        " samples of 9-axis IMU data (accelerometer, gyroscope, magnetometer) from a smartphone on a wheeled "
        "robot, sampled at " + fmt("%g", data.rate) + " Hz and covering about " + fmt("%.1f", duration) +
        " seconds. I need to decide which of the four candidate trajectories the robot followed.\n\n"
        "Phase 2 - Expert knowledge: Rotation about the vertical axis appears in the z-axis gyroscope (gz). "
        "Going straight shows minimal fluctuation in gz. A quarter-turn maneuver produces a sustained gz "
        "excursion whose integral is roughly 90 degrees, positive for counter-clockwise rotation and negative "
        "for clockwise rotation. Reversing direction produces a larger, longer excursion that integrates to "
        "roughly 180 degrees. The magnetometer heading rotates by the same angle.\n\n"
        "Phase 3 - Data analysis: gz ranges from " + fmt("%.2f", gz_min) + " to " + fmt("%.2f", gz_max) +
        " rad/s. Integrating gz with the trapezoid rule (dt = " + fmt("%.3f", dt) +
        " s) gives a net heading change of " + fmt("%+.2f", heading) + " rad (" +
        fmt("%+.1f", heading * 180.0 / kPi) + " degrees). " + reading + "\n\n"
        "Phase 4 - Conclusion: Combining the expert knowledge with the measured heading change, the action is "
        "most likely a '" + std::string(to_string(label)) + "' trajectory.";
  }
  result.latency_s = std::max(
      1e-9, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  return result;
}

}  // namespace imutrace::llm
