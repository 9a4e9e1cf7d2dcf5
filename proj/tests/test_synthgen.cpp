#include <doctest.h>

#include <numbers>

#include "imutrace/error.hpp"
#include "imutrace/synthgen.hpp"
#include "support.hpp"

using namespace imutrace;
using namespace imutrace::testing;

TEST_SUITE("synthgen") {

TEST_CASE("StraightZeroNoiseIsFlat") {
  const auto w = zero_noise_window(TrajectoryLabel::Straight, 4);
  REQUIRE(w.samples.size() == 1000);
  for (const auto& s : w.samples) {
    CHECK(s.gyro.z() == 0.0);
    CHECK(s.accel.z() == 9.81);
    CHECK(s.mag == w.samples.front().mag);
  }
}

TEST_CASE("ZeroNoiseGyroIntegratesToHeadingChange") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (const auto label : kAllLabels) {
      Rng rng(seed);
      const auto cfg = zero_noise_config(seed);
      const auto profile = synth::profile_for(label, rng, cfg.duration);
      const auto w = synth::simulate(profile, synth::NoiseProfile::none(), cfg, rng);
      const double integral = trapezoid_oracle(gyro_z(w), 1.0 / w.rate);
      CHECK(std::abs(integral - profile.net_heading_change()) < 1e-3);
    }
  }
}

TEST_CASE("TurnLeftIntegratesToHalfPi") {
  const auto w = zero_noise_window(TrajectoryLabel::TurnLeft, 9);
  CHECK(std::abs(trapezoid_oracle(gyro_z(w), 0.01) - std::numbers::pi / 2) < 1e-3);
  const auto r = zero_noise_window(TrajectoryLabel::TurnRight, 9);
  CHECK(std::abs(trapezoid_oracle(gyro_z(r), 0.01) + std::numbers::pi / 2) < 1e-3);
}

TEST_CASE("ZeroNoiseMagnetometerNormIsConstant") {
  const double expected = std::hypot(30.0, 40.0);
  for (const auto label : kAllLabels) {
    for (const auto& s : zero_noise_window(label, 21).samples) CHECK(std::abs(s.mag.norm() - expected) < 1e-9);
  }
}

TEST_CASE("MagnetometerFollowsHeading") {
  const auto w = zero_noise_window(TrajectoryLabel::TurnAround, 2);
  const auto& a = w.samples.front().mag;
  const auto& b = w.samples.back().mag;
  // Half a revolution flips the horizontal field.
  CHECK(std::abs(a.x() + b.x()) < 0.05);
  CHECK(std::abs(a.y() + b.y()) < 0.05);
}

TEST_CASE("ProfileShapes") {
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const auto around = synth::profile_for(TrajectoryLabel::TurnAround, rng);
    CHECK(std::abs(std::abs(around.net_heading_change()) - std::numbers::pi) < 1e-12);
    CHECK(around.total_duration() == doctest::Approx(10.0));
    const auto straight = synth::profile_for(TrajectoryLabel::Straight, rng);
    CHECK(straight.net_heading_change() == 0.0);
  }
}

TEST_CASE("DurationMismatchIsRejected") {
  Rng rng(1);
  const auto profile = synth::profile_for(TrajectoryLabel::Straight, rng, 5.0);
  CHECK_THROWS_AS(synth::simulate(profile, synth::NoiseProfile::none(), synth::GeneratorConfig{}, rng), Error);
}

TEST_CASE("DatasetCountsAndHistogram") {
  synth::GeneratorConfig cfg;
  cfg.seed = 7;
  const auto ds = synth::generate_dataset(cfg, synth::DatasetCounts::uniform(10));
  CHECK(ds.windows.size() == 80);
  std::map<std::pair<int, int>, int> hist;
  for (const auto& w : ds.windows) ++hist[{static_cast<int>(w.scenario), label_index(*w.label)}];
  for (const auto s : kAllScenarios) {
    for (const auto l : kAllLabels) CHECK(hist[{static_cast<int>(s), label_index(l)}] == 10);
  }
  const auto manifest = ds.manifest();
  CHECK(manifest.at("config").at("seed") == 7);
}

TEST_CASE("DatasetIsByteDeterministic") {
  synth::GeneratorConfig cfg;
  cfg.seed = 3;
  const auto counts = synth::DatasetCounts::uniform(4);
  CHECK(serialize_csv(synth::generate_dataset(cfg, counts).windows) ==
        serialize_csv(synth::generate_dataset(cfg, counts).windows));
  cfg.seed = 4;
  CHECK(serialize_csv(synth::generate_dataset(cfg, counts).windows) !=
        serialize_csv(synth::generate_dataset(synth::GeneratorConfig{}, counts).windows));
}

TEST_CASE("GroupsStayInsideOneScenario") {
  const auto ds = synth::generate_dataset(synth::GeneratorConfig{}, synth::DatasetCounts::uniform(10));
  std::map<std::string, Scenario> seen;
  for (const auto& w : ds.windows) {
    const auto [it, inserted] = seen.emplace(w.recording_group, w.scenario);
    CHECK(it->second == w.scenario);
  }
  CHECK(seen.size() >= 4);
}

TEST_CASE("OutdoorAccelerationIsNoisierThanIndoor") {
  synth::GeneratorConfig cfg;
  cfg.seed = 99;
  synth::DatasetCounts counts;
  for (auto& row : counts.per) row = {25, 25, 25, 25};
  const auto ds = synth::generate_dataset(cfg, counts);
  std::array<double, 2> sum{};
  std::array<long, 2> n{};
  const Eigen::Vector3d gravity(0.0, 0.0, cfg.gravity);
  for (const auto& w : ds.windows) {
    for (const auto& s : w.samples) {
      sum[static_cast<int>(w.scenario)] += (s.accel - gravity).norm();
      ++n[static_cast<int>(w.scenario)];
    }
  }
  const double indoor = sum[0] / n[0];
  const double outdoor = sum[1] / n[1];
  MESSAGE("mean |a - g|: indoor " << indoor << ", outdoor " << outdoor);
  CHECK(outdoor > indoor);
}

TEST_CASE("GeneratorConfigJsonRoundTrip") {
  synth::GeneratorConfig cfg;
  cfg.seed = 12;
  cfg.noise[1].bump_rate = 0.25;
  const auto back = synth::generator_config_from_json(synth::to_json(cfg));
  CHECK(back.seed == 12);
  CHECK(back.noise[1].bump_rate == 0.25);
  CHECK(synth::to_json(back) == synth::to_json(cfg));
}

}
