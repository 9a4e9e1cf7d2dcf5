#include "imutrace/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "imutrace/error.hpp"

namespace imutrace::synth {

namespace {

constexpr double kBumpWidth = 0.1;  // s, half-sine jolt
constexpr std::uint64_t kSceneStream = 0x5CE7E5CE7E000000ULL;

std::string zero_padded(std::size_t value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, value);
  return buf;
}

}  // namespace

double MotionProfile::total_duration() const {
  double total = 0.0;
  for (const auto& s : segments) total += s.duration;
  return total;
}

double MotionProfile::net_heading_change() const {
  double total = 0.0;
  for (const auto& s : segments) total += s.yaw_rate * s.duration;
  return total;
}

const MotionSegment& MotionProfile::segment_at(double t) const {
  double start = 0.0;
  for (const auto& s : segments) {
    if (t < start + s.duration) return s;
    start += s.duration;
  }
  return segments.back();
}

double MotionProfile::heading_at(double t) const {
  if (t <= 0.0) return segments.front().yaw_rate * t;
  double heading = 0.0;
  double start = 0.0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    const bool last = i + 1 == segments.size();
    if (t < start + s.duration || last) return heading + s.yaw_rate * (t - start);
    heading += s.yaw_rate * s.duration;
    start += s.duration;
  }
  return heading;
}

void GeneratorConfig::validate() const {
  if (!(rate > 0.0)) throw ConfigError("synthgen", "rate must be > 0");
  if (!(duration > 0.0)) throw ConfigError("synthgen", "duration must be > 0");
  if (!(gravity > 0.0)) throw ConfigError("synthgen", "gravity must be > 0");
  if (windows_per_group < 1) throw ConfigError("synthgen", "windows_per_group must be >= 1");
  if (std::llround(duration * rate) < 2) {
    throw ConfigError("synthgen", "duration * rate must give at least 2 samples");
  }
  for (const NoiseProfile& n : noise) {
    if (n.accel_sigma < 0 || n.gyro_sigma < 0 || n.mag_sigma < 0 || n.bump_rate < 0 ||
        n.bump_amp < 0) {
      throw ConfigError("synthgen", "noise parameters must be >= 0");
    }
  }
}

MotionProfile profile_for(TrajectoryLabel label, Rng& rng, double duration) {
  using B = ProfileBounds;
  const double speed = rng.uniform(B::kSpeedMin, B::kSpeedMax);
  if (label == TrajectoryLabel::Straight) return {{{duration, speed, 0.0}}};

  double angle = std::numbers::pi / 2.0;
  double rate = 0.0;
  switch (label) {
    case TrajectoryLabel::TurnLeft:
      rate = rng.uniform(B::kQuarterRateMin, B::kQuarterRateMax);
      break;
    case TrajectoryLabel::TurnRight:
      angle = -angle;
      rate = rng.uniform(B::kQuarterRateMin, B::kQuarterRateMax);
      break;
    default:
      angle = rng.uniform() < 0.5 ? std::numbers::pi : -std::numbers::pi;
      rate = rng.uniform(B::kHalfRateMin, B::kHalfRateMax);
      break;
  }

  double min_lead = B::kMinLead;
  if (duration - 2.0 * min_lead <= 0.0) min_lead = 0.2 * duration;
  const double available = duration - 2.0 * min_lead;
  const double turn = std::min(std::abs(angle) / rate, available);
  const double lead = min_lead + rng.uniform() * (available - turn);
  const double trail = duration - lead - turn;
  return {{{lead, speed, 0.0}, {turn, speed, angle / turn}, {trail, speed, 0.0}}};
}

TrajectoryWindow simulate(const MotionProfile& profile, const NoiseProfile& noise,
                          const GeneratorConfig& cfg, Rng& rng, const SceneParams& scene) {
  if (profile.segments.empty() || std::abs(profile.total_duration() - cfg.duration) > 1e-9) {
    throw DataError("synthgen", "profile duration " + std::to_string(profile.total_duration()) +
                                    " s does not match configured duration " +
                                    std::to_string(cfg.duration) + " s");
  }
  const auto n = static_cast<std::size_t>(std::llround(cfg.duration * cfg.rate));
  const double dt = 1.0 / cfg.rate;

  std::vector<std::pair<double, double>> bumps;  // (start time, signed amplitude)
  if (noise.bump_rate > 0.0) {
    for (double t = rng.exponential(noise.bump_rate); t < cfg.duration;
         t += rng.exponential(noise.bump_rate)) {
      bumps.emplace_back(t, rng.uniform() < 0.5 ? noise.bump_amp : -noise.bump_amp);
    }
  }

  TrajectoryWindow w;
  w.rate = cfg.rate;
  w.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    ImuSample& s = w.samples[k];
    s.t = static_cast<double>(k) * dt;
    const double yaw_rate =
        (profile.heading_at(s.t + 0.5 * dt) - profile.heading_at(s.t - 0.5 * dt)) / dt;
    const double heading = scene.initial_heading + profile.heading_at(s.t);
    const double speed = profile.segment_at(s.t).speed;

    s.accel = Eigen::Vector3d(speed * yaw_rate, 0.0, cfg.gravity);
    s.gyro = Eigen::Vector3d(0.0, 0.0, yaw_rate);
    s.mag = Eigen::Vector3d(cfg.earth_field_h * std::cos(heading),
                            -cfg.earth_field_h * std::sin(heading), cfg.earth_field_v);

    for (int a = 0; a < 3; ++a) s.accel[a] += noise.accel_sigma * rng.normal();
    for (int a = 0; a < 3; ++a) s.gyro[a] += noise.gyro_sigma * rng.normal();
    for (int a = 0; a < 3; ++a) s.mag[a] += noise.mag_sigma * rng.normal();
    for (const auto& [start, amp] : bumps) {
      if (s.t >= start && s.t < start + kBumpWidth) {
        s.accel.z() += amp * std::sin(std::numbers::pi * (s.t - start) / kBumpWidth);
      }
    }
  }
  return w;
}

DatasetCounts DatasetCounts::uniform(int per_class, bool indoor, bool outdoor) {
  DatasetCounts c;
  for (int l = 0; l < kNumLabels; ++l) {
    c.per[0][l] = indoor ? per_class : 0;
    c.per[1][l] = outdoor ? per_class : 0;
  }
  return c;
}

int DatasetCounts::total() const {
  int total = 0;
  for (const auto& row : per) {
    for (int v : row) total += v;
  }
  return total;
}

Dataset generate_dataset(const GeneratorConfig& cfg, const DatasetCounts& counts) {
  cfg.validate();
  for (const auto& row : counts.per) {
    for (int v : row) {
      if (v < 0) throw ConfigError("synthgen", "window counts must be >= 0");
    }
  }

  struct Job {
    Scenario scenario;
    TrajectoryLabel label;
  };
  std::vector<Job> jobs;
  for (const Scenario scenario : kAllScenarios) {
    for (const TrajectoryLabel label : kAllLabels) {
      const int count = counts.per[static_cast<int>(scenario)][label_index(label)];
      for (int i = 0; i < count; ++i) jobs.push_back({scenario, label});
    }
  }

  // Scene membership: shuffle each scenario's windows, then cut into runs of
  // 1..windows_per_group.
  std::vector<std::size_t> scene_of(jobs.size());
  std::vector<double> scene_heading;
  std::vector<Scenario> scene_scenario;
  std::vector<std::size_t> scene_ordinal;
  for (const Scenario scenario : kAllScenarios) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (jobs[i].scenario == scenario) members.push_back(i);
    }
    Rng rng = Rng::derive(cfg.seed ^ kSceneStream, static_cast<std::uint64_t>(scenario));
    rng.shuffle(std::span(members));
    std::size_t ordinal = 0;
    for (std::size_t pos = 0; pos < members.size(); ++ordinal) {
      const std::size_t size =
          1 + static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(cfg.windows_per_group)));
      const std::size_t end = std::min(members.size(), pos + size);
      for (; pos < end; ++pos) scene_of[members[pos]] = scene_heading.size();
      scene_heading.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
      scene_scenario.push_back(scenario);
      scene_ordinal.push_back(ordinal);
    }
  }

  Dataset out;
  out.config = cfg;
  out.counts = counts;
  out.windows.reserve(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const Job& job = jobs[i];
    Rng rng = Rng::derive(cfg.seed, i);
    const MotionProfile profile = profile_for(job.label, rng, cfg.duration);
    const std::size_t scene = scene_of[i];
    TrajectoryWindow w = simulate(profile, cfg.noise[static_cast<std::size_t>(job.scenario)], cfg,
                                  rng, SceneParams{scene_heading[scene]});
    w.scenario = job.scenario;
    w.label = job.label;
    w.recording_group =
        std::string(to_string(job.scenario)) + "-s" + zero_padded(scene_ordinal[scene], 3);
    w.id = w.recording_group + "/w" + zero_padded(i, 5);
    for (ImuSample& s : w.samples) {
      s.t = quantize_csv(s.t);
      for (int c = 0; c < kNumChannels; ++c) s.channel(c) = quantize_csv(s.channel(c));
    }
    out.windows.push_back(std::move(w));
  }
  std::sort(out.windows.begin(), out.windows.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

nlohmann::json to_json(const NoiseProfile& noise) {
  return {{"accel_sigma", noise.accel_sigma}, {"gyro_sigma", noise.gyro_sigma},
          {"mag_sigma", noise.mag_sigma},     {"bump_rate", noise.bump_rate},
          {"bump_amp", noise.bump_amp}};
}

nlohmann::json to_json(const GeneratorConfig& cfg) {
  return {{"seed", cfg.seed},
          {"rate", cfg.rate},
          {"duration", cfg.duration},
          {"earth_field_h", cfg.earth_field_h},
          {"earth_field_v", cfg.earth_field_v},
          {"gravity", cfg.gravity},
          {"windows_per_group", cfg.windows_per_group},
          {"noise", {{"indoor", to_json(cfg.noise[0])}, {"outdoor", to_json(cfg.noise[1])}}}};
}

namespace {

NoiseProfile noise_from_json(const nlohmann::json& j, NoiseProfile base) {
  base.accel_sigma = j.value("accel_sigma", base.accel_sigma);
  base.gyro_sigma = j.value("gyro_sigma", base.gyro_sigma);
  base.mag_sigma = j.value("mag_sigma", base.mag_sigma);
  base.bump_rate = j.value("bump_rate", base.bump_rate);
  base.bump_amp = j.value("bump_amp", base.bump_amp);
  return base;
}

}  // namespace

GeneratorConfig generator_config_from_json(const nlohmann::json& j, GeneratorConfig base) {
  try {
    base.seed = j.value("seed", base.seed);
    base.rate = j.value("rate", base.rate);
    base.duration = j.value("duration", base.duration);
    base.earth_field_h = j.value("earth_field_h", base.earth_field_h);
    base.earth_field_v = j.value("earth_field_v", base.earth_field_v);
    base.gravity = j.value("gravity", base.gravity);
    base.windows_per_group = j.value("windows_per_group", base.windows_per_group);
    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      if (n.contains("indoor")) base.noise[0] = noise_from_json(n.at("indoor"), base.noise[0]);
      if (n.contains("outdoor")) base.noise[1] = noise_from_json(n.at("outdoor"), base.noise[1]);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("synthgen", std::string("bad generator config: ") + e.what());
  }
  return base;
}

nlohmann::json Dataset::manifest() const {
  nlohmann::json count_json;
  for (const Scenario scenario : kAllScenarios) {
    nlohmann::json row;
    for (const TrajectoryLabel label : kAllLabels) {
      row[std::string(to_string(label))] = counts.per[static_cast<int>(scenario)][label_index(label)];
    }
    count_json[std::string(to_string(scenario))] = row;
  }
  return {{"generator", "imutrace.synthgen"},
          {"version", kGeneratorVersion},
          {"rng", Rng::kAlgorithm},
          {"config", to_json(config)},
          {"counts", count_json},
          {"windows", windows.size()}};
}

}  // namespace imutrace::synth
