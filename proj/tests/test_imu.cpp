#include <doctest.h>

#include <numeric>
#include <sstream>

#include "imutrace/error.hpp"
#include "imutrace/imu.hpp"
#include "support.hpp"

using namespace imutrace;
using imutrace::testing::grouped_windows;
using imutrace::testing::split_violation;
using imutrace::testing::holdout_realizable;
using imutrace::testing::random_grouping;

namespace {

TrajectoryWindow ramp_window(std::size_t n, double rate) {
  TrajectoryWindow w;
  w.id = "ramp";
  w.recording_group = "ramp";
  w.rate = rate;
  for (std::size_t i = 0; i < n; ++i) {
    ImuSample s;
    s.t = static_cast<double>(i) / rate;
    s.accel.x() = static_cast<double>(i);
    s.gyro.z() = std::sin(0.01 * static_cast<double>(i));
    s.mag.y() = 5.0;
    w.samples.push_back(s);
  }
  return w;
}

}  // namespace

TEST_SUITE("imu_core") {

TEST_CASE("CsvRoundTripKeepsValuesWithin1e9") {
  const auto ds = synth::generate_dataset(synth::GeneratorConfig{}, synth::DatasetCounts::uniform(2));
  std::stringstream buf(serialize_csv(ds.windows));
  const auto back = ingest_csv(buf);
  REQUIRE(back.size() == ds.windows.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    const auto& a = ds.windows[i];
    const auto& b = back[i];
    CHECK(a.id == b.id);
    CHECK(a.scenario == b.scenario);
    CHECK(a.label == b.label);
    CHECK(a.recording_group == b.recording_group);
    CHECK(b.rate == doctest::Approx(a.rate));
    REQUIRE(a.samples.size() == b.samples.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < a.samples.size(); ++k) {
      worst = std::max(worst, std::abs(a.samples[k].t - b.samples[k].t));
      for (int c = 0; c < kNumChannels; ++c) {
        worst = std::max(worst, std::abs(a.samples[k].channel(c) - b.samples[k].channel(c)));
      }
    }
    CHECK(worst <= 1e-9);
  }
  // Generated values are already at CSV precision, so a second pass is exact.
  CHECK(serialize_csv(back) == serialize_csv(ds.windows));
}

TEST_CASE("CsvHeaderOnlyIsEmpty") {
  std::stringstream in(std::string(kCsvHeader) + "\n");
  CHECK(ingest_csv(in).empty());
}

TEST_CASE("CsvRepeatedTimestampIsRejected") {
  std::stringstream in(std::string(kCsvHeader) +
                       "\nr1,indoor,straight,0,0,0,9.81,0,0,0,30,0,40"
                       "\nr1,indoor,straight,0,0,0,9.81,0,0,0,30,0,40\n");
  CHECK_THROWS_AS(ingest_csv(in), DataError);
}

TEST_CASE("CsvRejectsBadHeaderAndNonNumbers") {
  std::stringstream bad_header("id,scenario\n");
  CHECK_THROWS_AS(ingest_csv(bad_header), DataError);
  std::stringstream bad_value(std::string(kCsvHeader) + "\nr1,indoor,,0,x,0,9.81,0,0,0,30,0,40\n");
  CHECK_THROWS_AS(ingest_csv(bad_value), DataError);
}

TEST_CASE("CsvGroupsComeFromIdPrefix") {
  CHECK(recording_group_of("lab/run3/w1") == "lab/run3");
  CHECK(recording_group_of("solo") == "solo");
}

TEST_CASE("DownsampleTenSecondsTo30Samples") {
  const auto out = downsample(ramp_window(1000, 100.0), 3.0);
  CHECK(out.samples.size() == 30);
  CHECK(out.rate == 3.0);
  CHECK(out.samples[1].t == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("DownsampleConstantStaysConstant") {
  auto w = ramp_window(1000, 100.0);
  for (auto& s : w.samples) s.accel.x() = 5.0;
  for (const auto& s : downsample(w, 3.0).samples) CHECK(s.accel.x() == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("DownsampleMatchesBucketMeans") {
  const auto w = ramp_window(1000, 100.0);
  const auto out = downsample(w, 3.0);
  const std::size_t bucket = 33;
  for (std::size_t k = 0; k < out.samples.size(); ++k) {
    double ax = 0.0, gz = 0.0;
    for (std::size_t j = 0; j < bucket; ++j) {
      ax += static_cast<double>(k * bucket + j);
      gz += std::sin(0.01 * static_cast<double>(k * bucket + j));
    }
    CHECK(out.samples[k].accel.x() == doctest::Approx(ax / bucket).epsilon(1e-12));
    CHECK(out.samples[k].gyro.z() == doctest::Approx(gz / bucket).epsilon(1e-12));
  }
  CHECK(out.samples[0].accel.x() == doctest::Approx(16.0));
}

TEST_CASE("DownsampleKeepsSignalMeanForWholeBuckets") {
  const auto w = ramp_window(990, 100.0);  // 30 buckets of 33
  const auto out = downsample(w, 3.0);
  double before = 0.0, after = 0.0;
  for (const auto& s : w.samples) before += s.gyro.z();
  for (const auto& s : out.samples) after += s.gyro.z();
  CHECK(std::abs(before / 990.0 - after / 30.0) < 1e-9);
}

TEST_CASE("DownsampleRejectsBadRates") {
  const auto w = ramp_window(100, 100.0);
  CHECK_THROWS_AS(downsample(w, 0.0), DataError);
  CHECK_THROWS_AS(downsample(w, 200.0), DataError);
}

TEST_CASE("SliceWindowsCounts") {
  const auto rec = ramp_window(3000, 100.0);
  CHECK(slice_windows(rec, 10.0, 10.0).size() == 3);
  const auto overlapping = slice_windows(rec, 10.0, 5.0);
  CHECK(overlapping.size() == 5);
  CHECK(slice_windows(ramp_window(900, 100.0), 10.0, 10.0).empty());
  for (const auto& w : overlapping) {
    CHECK(w.samples.size() == 1000);
    CHECK_NOTHROW(validate(w));
  }
  CHECK(overlapping[1].samples[0].accel.x() == 500.0);
  CHECK(overlapping[1].id == "ramp#1");
}

TEST_CASE("ValidateCatchesNonFiniteValues") {
  auto w = ramp_window(10, 100.0);
  w.samples[3].gyro.x() = std::nan("");
  CHECK_THROWS_AS(validate(w), DataError);
}

TEST_CASE("SplitSixtyWindowsSixGroups") {
  std::vector<std::pair<Scenario, int>> groups;
  for (int g = 0; g < 6; ++g) groups.emplace_back(g < 3 ? Scenario::Indoor : Scenario::Outdoor, 10);
  const auto windows = grouped_windows(groups);
  const auto split = split_dataset(windows, 3);
  CHECK(split.count(SplitPart::Train) == 30);
  CHECK(split.count(SplitPart::Validation) == 10);
  CHECK(split.count(SplitPart::SeenTest) == 10);
  CHECK(split.count(SplitPart::UnseenTest) == 10);
  CHECK(split_violation(windows, split).empty());
}

TEST_CASE("SplitIsDeterministic") {
  const auto ds = synth::generate_dataset(synth::GeneratorConfig{}, synth::DatasetCounts::uniform(5));
  CHECK(split_dataset(ds.windows, 11) == split_dataset(ds.windows, 11));
  CHECK_FALSE(split_dataset(ds.windows, 11) == split_dataset(ds.windows, 12));
}

TEST_CASE("SplitInvariantsHoldOnGeneratedData") {
  const auto ds = synth::generate_dataset(synth::GeneratorConfig{}, synth::DatasetCounts::uniform(10));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto split = split_dataset(ds.windows, seed);
    CHECK_MESSAGE(split_violation(ds.windows, split).empty(), split_violation(ds.windows, split));
  }
}

TEST_CASE("SplitNeedsTwoGroupsPerScenario") {
  const auto one_group = grouped_windows({{Scenario::Indoor, 12}});
  CHECK_THROWS_AS(split_dataset(one_group, 0), DataError);
  const auto too_few = grouped_windows({{Scenario::Indoor, 2}, {Scenario::Indoor, 2}});
  CHECK_THROWS_AS(split_dataset(too_few, 0), DataError);
}

TEST_CASE("SplitRefusesUnrealizableGroupSizes") {
  // 11 windows: unseen share 11/6, so 1..2 windows, but no group is that small.
  const auto windows = grouped_windows({{Scenario::Indoor, 5}, {Scenario::Indoor, 6}});
  CHECK_FALSE(holdout_realizable(windows));
  CHECK_THROWS_AS(split_dataset(windows, 0), DataError);
}

TEST_CASE("SplitInvariantsOnRandomGroupings") {
  Rng rng(3);
  int runs = 0;
  while (runs < 100) {
    const auto windows = random_grouping(rng);
    if (!holdout_realizable(windows)) continue;
    const auto split = split_dataset(windows, rng.next_u64());
    CHECK_MESSAGE(split_violation(windows, split).empty(), split_violation(windows, split));
    ++runs;
  }
}

TEST_CASE("LabelAndScenarioStrings") {
  for (const auto l : kAllLabels) CHECK(parse_trajectory_label(to_string(l)) == l);
  CHECK(parse_trajectory_label("  Turn Left ") == TrajectoryLabel::TurnLeft);
  CHECK_THROWS_AS(parse_trajectory_label("sideways"), DataError);
  CHECK(parse_scenario("outdoor") == Scenario::Outdoor);
  for (const auto p : kAllSplitParts) CHECK(parse_split_part(to_string(p)) == p);
}

}
