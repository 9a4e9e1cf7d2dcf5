#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "imutrace/imu.hpp"
#include "imutrace/prompt.hpp"

namespace imutrace::llm {

using prompt::PromptBundle;
using prompt::PromptMode;

// ---------------------------------------------------------------------------
// Label lexicon and parser
// ---------------------------------------------------------------------------

/// Phrases that map free-form text onto labels, plus hedge phrases that mark
/// an undecided answer. Loaded from a versioned JSON file.
struct Lexicon {
  int version = 0;
  std::vector<std::pair<std::string, TrajectoryLabel>> phrases;  // lowercase
  std::vector<std::string> hedges;                                // lowercase

  static const Lexicon& defaults();
  static Lexicon from_json(const nlohmann::json& j);
  static Lexicon load(const std::filesystem::path& path);
  std::string hash() const;
};

/// Case-insensitive, word-bounded lexicon search. The hit that ends last wins
/// (conclusions come last); among hits ending at the same place the longest
/// wins. Throws UnparseableLabelError when nothing matches and
/// AmbiguousLabelError when the winning position is a hedge or is shared by
/// equally long phrases of different labels.
TrajectoryLabel parse_label(std::string_view text, PromptMode mode,
                            const Lexicon& lexicon = Lexicon::defaults());

// ---------------------------------------------------------------------------
// Providers
// ---------------------------------------------------------------------------

struct ProviderConfig {
  std::string id = "openai";
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4";
  std::string token_env = "OPENAI_API_KEY";
  double temperature = 0.0;
  int max_tokens = 1024;
  double timeout_s = 60.0;
  int max_retries = 3;
  double backoff_base_s = 1.0;
  int max_concurrency = 4;

  void validate() const;
  nlohmann::json to_json() const;
  static ProviderConfig from_json(const nlohmann::json& j, ProviderConfig base);
  static ProviderConfig from_json(const nlohmann::json& j) { return from_json(j, ProviderConfig{}); }
};

struct CompletionResult {
  std::string text;
  std::string provider_id;
  double latency_s = 0.0;
  int attempts = 1;
  std::optional<int> prompt_tokens;
  std::optional<int> completion_tokens;
};

/// Chat-completion request body for one bundle: system = instruction,
/// user = question.
nlohmann::json build_request_body(const ProviderConfig& cfg, const PromptBundle& bundle);

/// Reads choices[0].message.content (and usage counts when present). Throws
/// ProviderError for non-JSON bodies, a missing path or empty text.
CompletionResult parse_response_body(std::string_view body);

/// POSTs the bundle to cfg.endpoint with bearer auth from the environment
/// variable cfg.token_env. Timeouts, 429 and 5xx are retried up to
/// cfg.max_retries times, sleeping backoff_base_s * 2^attempt in between.
/// Throws ConfigError when the token is missing, TransportError when retries
/// run out or the server rejects the request, ProviderError for unusable
/// bodies.
CompletionResult complete(const ProviderConfig& cfg, const PromptBundle& bundle);

/// Offline provider that reasons over the embedded data the way the prompt
/// asks: integrate gyro-z, compare the heading change against pi/4 and 3pi/4,
/// and answer with four reasoning phases (CoT) or the bare label (DO).
/// Throws ProviderError when the bundle holds no parseable samples.
CompletionResult mock_complete(const PromptBundle& bundle);

class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string id() const = 0;
  virtual CompletionResult complete(const PromptBundle& bundle) = 0;
  virtual int max_concurrency() const { return 1; }
  /// Configuration recorded in run manifests (never includes secrets).
  virtual nlohmann::json describe() const = 0;
};

class HttpProvider final : public Provider {
 public:
  /// Checks the config and that the token variable is set.
  explicit HttpProvider(ProviderConfig cfg);

  std::string id() const override { return cfg_.id; }
  CompletionResult complete(const PromptBundle& bundle) override;
  int max_concurrency() const override { return cfg_.max_concurrency; }
  nlohmann::json describe() const override;

 private:
  ProviderConfig cfg_;
};

class MockProvider final : public Provider {
 public:
  explicit MockProvider(std::string id = "mock") : id_(std::move(id)) {}

  std::string id() const override { return id_; }
  CompletionResult complete(const PromptBundle& bundle) override { return mock_complete(bundle); }
  int max_concurrency() const override { return 4; }
  nlohmann::json describe() const override;

 private:
  std::string id_;
};

// ---------------------------------------------------------------------------
// Batch classification
// ---------------------------------------------------------------------------

enum class PredictionStatus : int { Ok = 0, Unparsed = 1, Failed = 2 };
std::string_view to_string(PredictionStatus status);

struct Prediction {
  std::string window_id;
  std::optional<TrajectoryLabel> label;  // empty unless status == Ok
  std::string raw_text;
  PromptMode mode = PromptMode::ChainOfThought;
  std::string provider_id;
  PredictionStatus status = PredictionStatus::Ok;
  std::string detail;  // parse or transport error message
};

/// Appends one JSON object per completion (window_id, bundle hash, text,
/// latency). Safe to call from several threads.
class TranscriptLog {
 public:
  explicit TranscriptLog(const std::filesystem::path& path);
  void record(const PromptBundle& bundle, const std::string& provider_id, const std::string& text,
              double latency_s, std::string_view status);

 private:
  std::mutex mutex_;
  std::ofstream out_;
};

/// Sends every bundle through the provider with at most
/// provider.max_concurrency() requests in flight and parses each answer.
/// Errors become Failed/Unparsed predictions rather than exceptions. The
/// result is sorted by window_id whatever the completion order.
std::vector<Prediction> classify_batch(Provider& provider, std::span<const PromptBundle> bundles,
                                       const Lexicon& lexicon = Lexicon::defaults(),
                                       TranscriptLog* transcript = nullptr);

}  // namespace imutrace::llm
