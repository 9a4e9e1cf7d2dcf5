#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace imutrace {

/// The four trajectory classes. The enumerator order is the fixed label order
/// used for tie-breaking and for confusion-matrix rows/columns.
enum class TrajectoryLabel : int { Straight = 0, TurnRight = 1, TurnLeft = 2, TurnAround = 3 };

inline constexpr int kNumLabels = 4;
inline constexpr std::array<TrajectoryLabel, kNumLabels> kAllLabels = {
    TrajectoryLabel::Straight, TrajectoryLabel::TurnRight, TrajectoryLabel::TurnLeft,
    TrajectoryLabel::TurnAround};

constexpr int label_index(TrajectoryLabel label) { return static_cast<int>(label); }
TrajectoryLabel label_from_index(int index);

/// Canonical lowercase rendering: "straight", "turn right", "turn left", "turn around".
std::string_view to_string(TrajectoryLabel label);

/// Exact canonical parse (case-insensitive, surrounding whitespace ignored).
/// Anything else throws DataError. Free-form model text goes through
/// parse_label in llm_client instead.
TrajectoryLabel parse_trajectory_label(std::string_view text);

enum class Scenario : int { Indoor = 0, Outdoor = 1 };
inline constexpr std::array<Scenario, 2> kAllScenarios = {Scenario::Indoor, Scenario::Outdoor};

std::string_view to_string(Scenario scenario);
Scenario parse_scenario(std::string_view text);

/// One 9-axis reading. t is seconds since window start, accel in m/s^2, gyro
/// in rad/s, mag in microtesla.
struct ImuSample {
  double t = 0.0;
  Eigen::Vector3d accel = Eigen::Vector3d::Zero();
  Eigen::Vector3d gyro = Eigen::Vector3d::Zero();
  Eigen::Vector3d mag = Eigen::Vector3d::Zero();

  /// Channel by position in the fixed order ax, ay, az, gx, gy, gz, mx, my, mz.
  double channel(int index) const;
  double& channel(int index);
};

inline constexpr int kNumChannels = 9;
inline constexpr std::array<std::string_view, kNumChannels> kChannelNames = {
    "ax", "ay", "az", "gx", "gy", "gz", "mx", "my", "mz"};

struct TrajectoryWindow {
  std::string id;
  Scenario scenario = Scenario::Indoor;
  std::string recording_group;
  double rate = 0.0;  // Hz
  std::vector<ImuSample> samples;
  std::optional<TrajectoryLabel> label;

  /// Number of samples divided by rate.
  double duration() const { return rate > 0.0 ? static_cast<double>(samples.size()) / rate : 0.0; }

  /// 9 x N matrix, one column per sample, rows in channel order.
  Eigen::MatrixXd channels() const;
};

/// Throws DataError naming the window when an invariant fails: finite values,
/// t >= 0, strictly increasing timestamps spaced 1/rate apart within 1e-6 s,
/// and at least two samples.
void validate(const TrajectoryWindow& window);

/// Recording group implied by a CSV recording id: the prefix before the last
/// '/', or the whole id when it has none.
std::string recording_group_of(std::string_view recording_id);

// ---------------------------------------------------------------------------
// CSV ingestion and serialization.
//
// Header: recording_id,scenario,label,t,ax,ay,az,gx,gy,gz,mx,my,mz
// Floats use up to 9 significant digits; label may be empty.
// ---------------------------------------------------------------------------

inline constexpr std::string_view kCsvHeader =
    "recording_id,scenario,label,t,ax,ay,az,gx,gy,gz,mx,my,mz";

std::vector<TrajectoryWindow> ingest_csv(std::istream& in);
void serialize_csv(std::ostream& out, std::span<const TrajectoryWindow> windows);
std::string serialize_csv(std::span<const TrajectoryWindow> windows);

/// Rounds to the value a 9-significant-digit CSV field reparses to.
double quantize_csv(double value);

// ---------------------------------------------------------------------------
// Windowing
// ---------------------------------------------------------------------------

/// Mean-pooling decimation over buckets of round(rate / target_rate) samples.
/// The output has floor(n / bucket) samples spaced 1 / target_rate apart.
TrajectoryWindow downsample(const TrajectoryWindow& window, double target_rate);

/// Cuts a long recording into windows of floor(duration * rate) samples, one
/// starting every round(stride * rate) samples. The trailing remainder is
/// dropped; a recording shorter than one window yields nothing. Output ids are
/// "<recording id>#<k>" and timestamps restart at zero.
std::vector<TrajectoryWindow> slice_windows(const TrajectoryWindow& recording, double duration,
                                            double stride);

// ---------------------------------------------------------------------------
// Dataset splitting
// ---------------------------------------------------------------------------

enum class SplitPart : int { Train = 0, Validation = 1, SeenTest = 2, UnseenTest = 3 };
inline constexpr std::array<SplitPart, 4> kAllSplitParts = {
    SplitPart::Train, SplitPart::Validation, SplitPart::SeenTest, SplitPart::UnseenTest};

std::string_view to_string(SplitPart part);
SplitPart parse_split_part(std::string_view text);

struct SplitAssignment {
  std::map<std::string, SplitPart> parts;

  std::size_t count(SplitPart part) const;
  std::vector<std::string> ids(SplitPart part) const;
  bool operator==(const SplitAssignment&) const = default;
};

/// Exact 3:1:1:1 share of n for the given part.
double exact_share(std::size_t n, SplitPart part);

/// Holds out whole recording groups as UnseenTest (size within +-1 of n/6,
/// spread across scenarios when possible), then shuffles the remaining
/// windows and deals them 3:1:1 into Train/Validation/SeenTest so that every
/// part is within +-1 of its exact share of n. Deterministic in seed.
SplitAssignment split_dataset(std::span<const TrajectoryWindow> windows, std::uint64_t seed);

}  // namespace imutrace
