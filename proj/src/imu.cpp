#include "imutrace/imu.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "imutrace/error.hpp"

namespace imutrace {

namespace {

std::string lower_trimmed(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  std::string out(text.substr(first, last - first + 1));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

TrajectoryLabel label_from_index(int index) {
  if (index < 0 || index >= kNumLabels) {
    throw DataError("imu_core", "label index out of range: " + std::to_string(index));
  }
  return static_cast<TrajectoryLabel>(index);
}

std::string_view to_string(TrajectoryLabel label) {
  switch (label) {
    case TrajectoryLabel::Straight: return "straight";
    case TrajectoryLabel::TurnRight: return "turn right";
    case TrajectoryLabel::TurnLeft: return "turn left";
    case TrajectoryLabel::TurnAround: return "turn around";
  }
  return "?";
}

TrajectoryLabel parse_trajectory_label(std::string_view text) {
  const std::string key = lower_trimmed(text);
  for (const TrajectoryLabel label : kAllLabels) {
    if (key == to_string(label)) return label;
  }
  throw DataError("imu_core", "unknown trajectory label '" + std::string(text) + "'");
}

std::string_view to_string(Scenario scenario) {
  return scenario == Scenario::Indoor ? "indoor" : "outdoor";
}

Scenario parse_scenario(std::string_view text) {
  const std::string key = lower_trimmed(text);
  if (key == "indoor") return Scenario::Indoor;
  if (key == "outdoor") return Scenario::Outdoor;
  throw DataError("imu_core", "unknown scenario '" + std::string(text) + "'");
}

double ImuSample::channel(int index) const {
  if (index < 3) return accel[index];
  if (index < 6) return gyro[index - 3];
  return mag[index - 6];
}

double& ImuSample::channel(int index) {
  if (index < 3) return accel[index];
  if (index < 6) return gyro[index - 3];
  return mag[index - 6];
}

Eigen::MatrixXd TrajectoryWindow::channels() const {
  Eigen::MatrixXd out(kNumChannels, static_cast<Eigen::Index>(samples.size()));
  for (std::size_t j = 0; j < samples.size(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    out.col(col).segment<3>(0) = samples[j].accel;
    out.col(col).segment<3>(3) = samples[j].gyro;
    out.col(col).segment<3>(6) = samples[j].mag;
  }
  return out;
}

void validate(const TrajectoryWindow& window) {
  const auto fail = [&](const std::string& why) {
    throw DataError("imu_core", "window '" + window.id + "': " + why);
  };
  if (!(window.rate > 0.0) || !std::isfinite(window.rate)) fail("rate must be positive");
  if (window.samples.size() < 2) fail("needs at least 2 samples");
  const double dt = 1.0 / window.rate;
  for (std::size_t i = 0; i < window.samples.size(); ++i) {
    const ImuSample& s = window.samples[i];
    if (!std::isfinite(s.t) || s.t < 0.0) fail("timestamp must be finite and >= 0");
    if (!s.accel.allFinite() || !s.gyro.allFinite() || !s.mag.allFinite()) {
      fail("non-finite value at sample " + std::to_string(i));
    }
    if (i > 0) {
      const double delta = s.t - window.samples[i - 1].t;
      if (!(delta > 0.0)) fail("timestamps not strictly increasing at sample " + std::to_string(i));
      if (std::abs(delta - dt) > 1e-6) {
        fail("timestamp spacing " + std::to_string(delta) + " s differs from 1/rate at sample " +
             std::to_string(i));
      }
    }
  }
}

std::string recording_group_of(std::string_view recording_id) {
  const auto slash = recording_id.rfind('/');
  if (slash == std::string_view::npos) return std::string(recording_id);
  return std::string(recording_id.substr(0, slash));
}

TrajectoryWindow downsample(const TrajectoryWindow& window, double target_rate) {
  if (!(target_rate > 0.0) || target_rate > window.rate) {
    throw DataError("imu_core", "downsample target rate " + std::to_string(target_rate) +
                                    " Hz must be in (0, " + std::to_string(window.rate) + "]");
  }
  const auto bucket = static_cast<std::size_t>(std::max(1.0, std::round(window.rate / target_rate)));
  const std::size_t n_out = window.samples.size() / bucket;

  TrajectoryWindow out;
  out.id = window.id;
  out.scenario = window.scenario;
  out.recording_group = window.recording_group;
  out.label = window.label;
  out.rate = target_rate;
  out.samples.reserve(n_out);
  for (std::size_t k = 0; k < n_out; ++k) {
    ImuSample mean;
    mean.t = static_cast<double>(k) / target_rate;
    for (std::size_t j = k * bucket; j < (k + 1) * bucket; ++j) {
      mean.accel += window.samples[j].accel;
      mean.gyro += window.samples[j].gyro;
      mean.mag += window.samples[j].mag;
    }
    const double inv = 1.0 / static_cast<double>(bucket);
    mean.accel *= inv;
    mean.gyro *= inv;
    mean.mag *= inv;
    out.samples.push_back(mean);
  }
  return out;
}

std::vector<TrajectoryWindow> slice_windows(const TrajectoryWindow& recording, double duration,
                                            double stride) {
  if (!(duration > 0.0) || !(stride > 0.0)) {
    throw DataError("imu_core", "slice_windows needs positive duration and stride");
  }
  // The epsilon keeps 10 s * 100 Hz from flooring to 999.
  const auto length = static_cast<std::size_t>(std::floor(duration * recording.rate + 1e-9));
  const auto step = static_cast<std::size_t>(std::max(1.0, std::round(stride * recording.rate)));
  std::vector<TrajectoryWindow> out;
  if (length < 2 || recording.samples.size() < length) return out;

  for (std::size_t start = 0, k = 0; start + length <= recording.samples.size(); start += step, ++k) {
    TrajectoryWindow w;
    w.id = recording.id + "#" + std::to_string(k);
    w.scenario = recording.scenario;
    w.recording_group = recording.recording_group;
    w.rate = recording.rate;
    w.label = recording.label;
    w.samples.assign(recording.samples.begin() + static_cast<std::ptrdiff_t>(start),
                     recording.samples.begin() + static_cast<std::ptrdiff_t>(start + length));
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
      w.samples[i].t = static_cast<double>(i) / recording.rate;
    }
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace imutrace
