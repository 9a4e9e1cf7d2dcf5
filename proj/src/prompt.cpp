#include "imutrace/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "imutrace/error.hpp"
#include "imutrace/hash.hpp"
#include "imutrace/resources.hpp"

namespace imutrace::prompt {

namespace {

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string out(buf);
  // "-0.00" carries no information and breaks byte-level comparisons.
  if (out.front() == '-' && out.find_first_not_of("-0.") == std::string::npos) out.erase(0, 1);
  return out;
}

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", value);
  return buf;
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string read_file_or(const std::filesystem::path& path, const std::string& fallback) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return fallback;
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return text;
}

}  // namespace

std::string_view to_string(PromptMode mode) {
  return mode == PromptMode::DirectOutput ? "do" : "cot";
}

std::string_view display_name(PromptMode mode) {
  return mode == PromptMode::DirectOutput ? "DO" : "CoT";
}

PromptMode parse_mode(std::string_view text) {
  const std::string key = lowercase(text);
  if (key == "do") return PromptMode::DirectOutput;
  if (key == "cot") return PromptMode::ChainOfThought;
  throw ConfigError("prompt", "unknown prompt mode '" + std::string(text) + "' (expected do or cot)");
}

void SerializationOptions::validate() const {
  if (decimals < 0 || decimals > 9) throw ConfigError("prompt", "decimals must be in [0, 9]");
  std::array<int, kNumChannels> sorted = axis_order;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < kNumChannels; ++i) {
    if (sorted[i] != i) throw ConfigError("prompt", "axis_order must be a permutation of the 9 channels");
  }
  if (sample_delimiter.empty()) throw ConfigError("prompt", "sample_delimiter must not be empty");
}

const PromptTemplates& PromptTemplates::defaults() {
  static const PromptTemplates kDefaults{
      std::string(resources::kInstructionTemplate), std::string(resources::kQuestionTemplate),
      std::string(resources::kCloserCotTemplate), std::string(resources::kCloserDoTemplate)};
  return kDefaults;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("prompt", "template directory '" + dir.string() + "' does not exist");
  }
  const PromptTemplates& d = defaults();
  return {read_file_or(dir / "instruction.txt", d.instruction),
          read_file_or(dir / "question.txt", d.question),
          read_file_or(dir / "closer_cot.txt", d.closer_cot),
          read_file_or(dir / "closer_do.txt", d.closer_do)};
}

std::string PromptTemplates::hash() const {
  std::string all;
  for (const std::string* part : {&instruction, &question, &closer_cot, &closer_do}) {
    all += std::to_string(part->size());
    all += ':';
    all += *part;
  }
  return sha256_hex(all);
}

std::string PromptBundle::hash() const {
  return sha256_hex(std::string(to_string(mode)) + "\n" + text());
}

std::string serialize_window(const TrajectoryWindow& window, const SerializationOptions& opts) {
  opts.validate();
  std::string out;
  const auto append_row = [&](auto&& value_of) {
    for (int k = 0; k < kNumChannels; ++k) {
      if (k > 0) out += ", ";
      out += value_of(opts.axis_order[k]);
    }
  };
  if (opts.channel_labels) {
    append_row([](int c) { return std::string(kChannelNames[c]); });
    if (!window.samples.empty()) out += opts.sample_delimiter;
  }
  for (std::size_t i = 0; i < window.samples.size(); ++i) {
    if (i > 0) out += opts.sample_delimiter;
    const ImuSample& s = window.samples[i];
    append_row([&](int c) { return format_fixed(s.channel(c), opts.decimals); });
  }
  return out;
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      return out;
    }
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) {
      throw ConfigError("prompt", "unterminated placeholder in template");
    }
    out.append(tmpl.substr(pos, open - pos));
    const std::string name(tmpl.substr(open + 2, close - open - 2));
    const auto it = vars.find(name);
    if (it == vars.end()) throw ConfigError("prompt", "unknown template placeholder {{" + name + "}}");
    out += it->second;
    pos = close + 2;
  }
}

std::size_t count_phrase(std::string_view text, std::string_view needle) {
  const std::string hay = lowercase(text);
  const std::string pat = lowercase(needle);
  std::size_t count = 0;
  for (auto pos = hay.find(pat); pos != std::string::npos; pos = hay.find(pat, pos + 1)) {
    const bool left_ok = pos == 0 || !is_word_char(hay[pos - 1]);
    const std::size_t end = pos + pat.size();
    const bool right_ok = end == hay.size() || !is_word_char(hay[end]);
    if (left_ok && right_ok) ++count;
  }
  return count;
}

PromptBundle build_prompt(const TrajectoryWindow& window, PromptMode mode,
                          const PromptSettings& settings) {
  if (window.samples.empty()) {
    throw DataError("prompt", "window '" + window.id + "' has no samples");
  }
  const SerializationOptions& opts = settings.serialization;

  std::string channels;
  for (int k = 0; k < kNumChannels; ++k) {
    if (k > 0) channels += ", ";
    channels += kChannelNames[opts.axis_order[k]];
  }
  std::string labels;
  for (const TrajectoryLabel label : kAllLabels) {
    if (!labels.empty()) labels += ", ";
    labels += "'" + std::string(to_string(label)) + "'";
  }
  const PromptTemplates& t = settings.templates;
  const std::map<std::string, std::string> vars = {
      {"scenario", std::string(to_string(window.scenario))},
      {"source_rate", format_number(settings.source_rate)},
      {"target_rate", format_number(window.rate)},
      {"sample_count", std::to_string(window.samples.size())},
      {"duration", format_number(window.duration())},
      {"channels", channels},
      {"data", serialize_window(window, opts)},
      {"labels", labels},
      {"closer", mode == PromptMode::ChainOfThought ? t.closer_cot : t.closer_do},
  };

  PromptBundle bundle;
  bundle.instruction = render_template(t.instruction, vars);
  bundle.question = render_template(t.question, vars);
  bundle.mode = mode;
  bundle.window_id = window.id;

  const std::string text = bundle.text();
  const bool has_request = text.find(kStepByStepRequest) != std::string::npos;
  if (mode == PromptMode::ChainOfThought && !bundle.question.ends_with(kStepByStepRequest)) {
    throw ConfigError("prompt", "chain-of-thought prompt must end with the step-by-step request");
  }
  if (mode == PromptMode::DirectOutput && has_request) {
    throw ConfigError("prompt", "direct-output prompt must not contain the step-by-step request");
  }
  for (const TrajectoryLabel label : kAllLabels) {
    const std::size_t n = count_phrase(text, to_string(label));
    if (n != 1) {
      throw ConfigError("prompt", "label '" + std::string(to_string(label)) + "' appears " +
                                      std::to_string(n) + " times in the prompt (expected 1)");
    }
  }
  if (text.size() > settings.max_chars) {
    throw ConfigError("prompt", "prompt for window '" + window.id + "' is " +
                                    std::to_string(text.size()) + " characters, over the budget of " +
                                    std::to_string(settings.max_chars));
  }
  return bundle;
}

}  // namespace imutrace::prompt
