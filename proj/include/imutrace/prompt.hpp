#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "imutrace/imu.hpp"

namespace imutrace::prompt {

enum class PromptMode : int { DirectOutput = 0, ChainOfThought = 1 };
inline constexpr std::array<PromptMode, 2> kAllModes = {PromptMode::DirectOutput,
                                                        PromptMode::ChainOfThought};

/// "do" / "cot".
std::string_view to_string(PromptMode mode);
/// Accepts "do", "cot" (any case).
PromptMode parse_mode(std::string_view text);
/// "DO" / "CoT", as used in model ids.
std::string_view display_name(PromptMode mode);

/// Closing request every chain-of-thought prompt ends with.
inline constexpr std::string_view kStepByStepRequest =
    "I would appreciate a step-by-step analysis of your reasoning process.";

struct SerializationOptions {
  int decimals = 2;
  /// Channel indices (see kChannelNames) in output order.
  std::array<int, kNumChannels> axis_order = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  std::string sample_delimiter = "\n";
  bool channel_labels = true;

  void validate() const;
};

/// Plain-text templates with {{placeholders}}. The question template
/// receives scenario, source_rate, target_rate, sample_count, duration,
/// channels, data, labels and closer.
struct PromptTemplates {
  std::string instruction;
  std::string question;
  std::string closer_cot;
  std::string closer_do;

  static const PromptTemplates& defaults();
  /// Reads instruction.txt, question.txt, closer_cot.txt and closer_do.txt
  /// from dir. Missing files fall back to the defaults.
  static PromptTemplates load(const std::filesystem::path& dir);
  /// SHA-256 over all four templates; cited in run manifests.
  std::string hash() const;
};

struct PromptSettings {
  SerializationOptions serialization;
  PromptTemplates templates = PromptTemplates::defaults();
  double source_rate = 100.0;  // Hz, rate before downsampling
  std::size_t max_chars = 4000;
};

struct PromptBundle {
  std::string instruction;
  std::string question;
  PromptMode mode = PromptMode::ChainOfThought;
  std::string window_id;

  std::string text() const { return instruction + "\n\n" + question; }
  std::string hash() const;
};

/// One line per sample (joined by sample_delimiter), nine fixed-point values
/// separated by ", ", optionally preceded by a channel-name header.
std::string serialize_window(const TrajectoryWindow& window, const SerializationOptions& opts);

/// Replaces every {{name}} with vars[name]. Unknown placeholders throw
/// ConfigError.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

/// Counts case-insensitive, word-bounded occurrences of needle in text.
std::size_t count_phrase(std::string_view text, std::string_view needle);

/// Renders the instruction and question for one window. Throws DataError for
/// an empty window and ConfigError when the rendered bundle breaks a bundle
/// invariant (mode closer, one mention per label, character budget).
PromptBundle build_prompt(const TrajectoryWindow& window, PromptMode mode,
                          const PromptSettings& settings = {});

}  // namespace imutrace::prompt
