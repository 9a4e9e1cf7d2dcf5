#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "imutrace/imu.hpp"
#include "imutrace/rng.hpp"

namespace imutrace::synth {

/// Constant-speed, constant-yaw-rate piece of a planar trajectory.
struct MotionSegment {
  double duration = 0.0;  // s
  double speed = 0.0;     // m/s
  double yaw_rate = 0.0;  // rad/s, positive = counter-clockwise (left)
};

struct MotionProfile {
  std::vector<MotionSegment> segments;

  double total_duration() const;
  /// Sum of yaw_rate * duration.
  double net_heading_change() const;
  /// Heading relative to the start at time t (exact piecewise integral).
  /// Outside [0, total] the first/last segment is extended.
  double heading_at(double t) const;
  const MotionSegment& segment_at(double t) const;
};

struct NoiseProfile {
  double accel_sigma = 0.0;  // m/s^2
  double gyro_sigma = 0.0;   // rad/s
  double mag_sigma = 0.0;    // uT
  double bump_rate = 0.0;    // events/s
  double bump_amp = 0.0;     // m/s^2

  static NoiseProfile none() { return {}; }
  static NoiseProfile indoor() { return {0.05, 0.01, 0.5, 0.0, 0.0}; }
  static NoiseProfile outdoor() { return {0.3, 0.05, 1.0, 0.5, 1.0}; }
  static NoiseProfile for_scenario(Scenario s) { return s == Scenario::Indoor ? indoor() : outdoor(); }
};

struct GeneratorConfig {
  std::uint64_t seed = 0;
  double rate = 100.0;     // Hz
  double duration = 10.0;  // s
  double earth_field_h = 30.0;  // uT
  double earth_field_v = 40.0;  // uT
  double gravity = 9.81;        // m/s^2
  /// Upper bound on windows per simulated scene; scene sizes are drawn
  /// uniformly from [1, windows_per_group].
  int windows_per_group = 6;
  /// Noise per scenario. Defaults to the indoor/outdoor profiles.
  std::array<NoiseProfile, 2> noise = {NoiseProfile::indoor(), NoiseProfile::outdoor()};

  void validate() const;
};

/// Ranges the profile jitter draws from.
struct ProfileBounds {
  static constexpr double kSpeedMin = 0.4, kSpeedMax = 0.8;            // m/s
  static constexpr double kQuarterRateMin = 0.4, kQuarterRateMax = 0.8;  // rad/s, +-90 deg turns
  static constexpr double kHalfRateMin = 0.6, kHalfRateMax = 1.2;        // rad/s, 180 deg turns
  static constexpr double kMinLead = 1.0;  // s of straight driving before and after a turn
};

/// Straight: one segment with zero yaw. Turns: straight / turn / straight with
/// net heading +pi/2 (left), -pi/2 (right) or +-pi (around, random sign).
/// Speed, yaw-rate magnitude and turn placement are drawn from rng.
MotionProfile profile_for(TrajectoryLabel label, Rng& rng, double duration = 10.0);

/// Per-window scene parameters (shared by windows of one recording group).
struct SceneParams {
  double initial_heading = 0.0;  // rad
};

/// Unicycle kinematics sampled at cfg.rate for round(duration * rate) samples.
/// Gyro-z is the mean yaw rate over each sample period (an integrating rate
/// sensor); accel = (speed * yaw_rate, 0, g); mag = (H cos th, -H sin th, V).
/// Noise draws always happen so the rng advances the same way regardless of
/// the sigmas.
TrajectoryWindow simulate(const MotionProfile& profile, const NoiseProfile& noise,
                          const GeneratorConfig& cfg, Rng& rng, const SceneParams& scene = {});

/// Requested window count per (label, scenario).
struct DatasetCounts {
  std::array<std::array<int, kNumLabels>, 2> per{};  // [scenario][label]

  static DatasetCounts uniform(int per_class, bool indoor = true, bool outdoor = true);
  int total() const;
};

struct Dataset {
  std::vector<TrajectoryWindow> windows;
  nlohmann::json manifest() const;

  GeneratorConfig config;
  DatasetCounts counts;
};

inline constexpr int kGeneratorVersion = 1;

/// Simulates every requested window. Window i draws from Rng::derive(seed, i)
/// so the result does not depend on evaluation order. Windows are grouped
/// into scenes of random size per scenario; each scene shares an initial
/// heading. Sample values are rounded to CSV precision so files reload
/// bit-exactly.
Dataset generate_dataset(const GeneratorConfig& cfg, const DatasetCounts& counts);

nlohmann::json to_json(const NoiseProfile& noise);
nlohmann::json to_json(const GeneratorConfig& cfg);
GeneratorConfig generator_config_from_json(const nlohmann::json& j, GeneratorConfig base = {});

}  // namespace imutrace::synth
