#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "imutrace/error.hpp"
#include "imutrace/llm_client.hpp"

// After Eigen: httplib pulls in system headers whose macros clash with it.
#include <httplib.h>

namespace imutrace::llm {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("llm_client", "endpoint '" + url + "' must start with http:// or https://");
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ConfigError("llm_client", "unsupported endpoint scheme '" + scheme + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string read_token(const ProviderConfig& cfg) {
  const char* value = std::getenv(cfg.token_env.c_str());
  if (value == nullptr || *value == '\0') {
    throw ConfigError("llm_client", "provider '" + cfg.id + "' needs an API token in environment variable " +
                                        cfg.token_env);
  }
  return value;
}

bool is_retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

void ProviderConfig::validate() const {
  if (id.empty()) throw ConfigError("llm_client", "provider id must not be empty");
  if (max_retries < 0) throw ConfigError("llm_client", "max_retries must be >= 0");
  if (max_concurrency < 1) throw ConfigError("llm_client", "max_concurrency must be >= 1");
  if (temperature < 0.0) throw ConfigError("llm_client", "temperature must be >= 0");
  if (max_tokens < 1) throw ConfigError("llm_client", "max_tokens must be >= 1");
  if (!(timeout_s > 0.0)) throw ConfigError("llm_client", "timeout must be > 0");
  if (backoff_base_s < 0.0) throw ConfigError("llm_client", "backoff base must be >= 0");
  split_endpoint(endpoint);
}

nlohmann::json ProviderConfig::to_json() const {
  return {{"id", id},
          {"endpoint", endpoint},
          {"model", model},
          {"token_env", token_env},
          {"temperature", temperature},
          {"max_tokens", max_tokens},
          {"timeout_s", timeout_s},
          {"max_retries", max_retries},
          {"backoff_base_s", backoff_base_s},
          {"max_concurrency", max_concurrency}};
}

ProviderConfig ProviderConfig::from_json(const nlohmann::json& j, ProviderConfig base) {
  try {
    base.id = j.value("id", base.id);
    base.endpoint = j.value("endpoint", base.endpoint);
    base.model = j.value("model", base.model);
    base.token_env = j.value("token_env", base.token_env);
    base.temperature = j.value("temperature", base.temperature);
    base.max_tokens = j.value("max_tokens", base.max_tokens);
    base.timeout_s = j.value("timeout_s", base.timeout_s);
    base.max_retries = j.value("max_retries", base.max_retries);
    base.backoff_base_s = j.value("backoff_base_s", base.backoff_base_s);
    base.max_concurrency = j.value("max_concurrency", base.max_concurrency);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("llm_client", std::string("bad provider config: ") + e.what());
  }
  return base;
}

nlohmann::json build_request_body(const ProviderConfig& cfg, const PromptBundle& bundle) {
  return {{"model", cfg.model},
          {"temperature", cfg.temperature},
          {"max_tokens", cfg.max_tokens},
          {"messages",
           {{{"role", "system"}, {"content", bundle.instruction}},
            {{"role", "user"}, {"content", bundle.question}}}}};
}

CompletionResult parse_response_body(std::string_view body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    throw ProviderError("llm_client", "response is not JSON");
  }
  CompletionResult result;
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw ProviderError("llm_client", "message content is not a string");
    result.text = content.get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw ProviderError("llm_client", "response lacks choices[0].message.content");
  }
  if (result.text.empty()) throw ProviderError("llm_client", "response text is empty");
  if (j.contains("usage") && j["usage"].is_object()) {
    const auto& usage = j["usage"];
    if (usage.contains("prompt_tokens") && usage["prompt_tokens"].is_number_integer()) {
      result.prompt_tokens = usage["prompt_tokens"].get<int>();
    }
    if (usage.contains("completion_tokens") && usage["completion_tokens"].is_number_integer()) {
      result.completion_tokens = usage["completion_tokens"].get<int>();
    }
  }
  return result;
}

CompletionResult complete(const ProviderConfig& cfg, const PromptBundle& bundle) {
  cfg.validate();
  const std::string token = read_token(cfg);
  const Endpoint endpoint = split_endpoint(cfg.endpoint);
  const std::string body = build_request_body(cfg, bundle).dump();

  httplib::Client client(endpoint.origin);
  const auto secs = static_cast<time_t>(cfg.timeout_s);
  const auto usecs = static_cast<time_t>((cfg.timeout_s - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  client.set_bearer_token_auth(token);

  const auto start = std::chrono::steady_clock::now();
  int last_status = 0;
  std::string last_reason;
  const int max_attempts = cfg.max_retries + 1;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    if (attempt > 0) {
      const double wait = cfg.backoff_base_s * std::pow(2.0, attempt - 1);
      std::this_thread::sleep_for(std::chrono::duration<double>(wait));
    }
    auto res = client.Post(endpoint.path, body, "application/json");
    if (!res) {
      last_status = 0;
      last_reason = httplib::to_string(res.error());
      continue;
    }
    last_status = res->status;
    if (res->status == 200) {
      CompletionResult result = parse_response_body(res->body);
      result.provider_id = cfg.id;
      result.attempts = attempt + 1;
      result.latency_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return result;
    }
    last_reason = "HTTP " + std::to_string(res->status);
    if (!is_retryable(res->status)) {
      throw TransportError("llm_client", "provider '" + cfg.id + "' rejected the request: " + last_reason,
                           last_status, attempt + 1);
    }
  }
  throw TransportError("llm_client",
                       "provider '" + cfg.id + "' failed after " + std::to_string(max_attempts) +
                           " attempts (last: " + last_reason + ")",
                       last_status, max_attempts);
}

HttpProvider::HttpProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  read_token(cfg_);
}

CompletionResult HttpProvider::complete(const PromptBundle& bundle) { return llm::complete(cfg_, bundle); }

nlohmann::json HttpProvider::describe() const {
  nlohmann::json j = cfg_.to_json();
  j["kind"] = "http";
  return j;
}

nlohmann::json MockProvider::describe() const {
  return {{"id", id_}, {"kind", "mock"}, {"version", 1}};
}

std::string_view to_string(PredictionStatus status) {
  switch (status) {
    case PredictionStatus::Ok: return "ok";
    case PredictionStatus::Unparsed: return "unparsed";
    case PredictionStatus::Failed: return "failed";
  }
  return "?";
}

TranscriptLog::TranscriptLog(const std::filesystem::path& path) : out_(path, std::ios::app) {
  if (!out_) throw ConfigError("llm_client", "cannot open transcript '" + path.string() + "'");
}

void TranscriptLog::record(const PromptBundle& bundle, const std::string& provider_id,
                           const std::string& text, double latency_s, std::string_view status) {
  const nlohmann::json line = {{"window_id", bundle.window_id},
                               {"provider", provider_id},
                               {"mode", prompt::to_string(bundle.mode)},
                               {"bundle_hash", bundle.hash()},
                               {"status", status},
                               {"text", text},
                               {"latency_s", latency_s}};
  std::lock_guard lock(mutex_);
  out_ << line.dump() << '\n';
  out_.flush();
}

std::vector<Prediction> classify_batch(Provider& provider, std::span<const PromptBundle> bundles,
                                       const Lexicon& lexicon, TranscriptLog* transcript) {
  std::vector<Prediction> out(bundles.size());
  std::atomic<std::size_t> next{0};
  const std::string provider_id = provider.id();

  const auto worker = [&] {
    for (std::size_t i = next++; i < bundles.size(); i = next++) {
      const PromptBundle& bundle = bundles[i];
      Prediction& p = out[i];
      p.window_id = bundle.window_id;
      p.mode = bundle.mode;
      p.provider_id = provider_id;
      double latency = 0.0;
      try {
        CompletionResult result = provider.complete(bundle);
        latency = result.latency_s;
        p.raw_text = std::move(result.text);
      } catch (const std::exception& e) {
        p.status = PredictionStatus::Failed;
        p.detail = e.what();
      }
      if (p.status == PredictionStatus::Ok) {
        try {
          p.label = parse_label(p.raw_text, bundle.mode, lexicon);
        } catch (const Error& e) {
          p.status = PredictionStatus::Unparsed;
          p.detail = e.what();
        }
      }
      if (transcript != nullptr) {
        transcript->record(bundle, provider_id, p.status == PredictionStatus::Failed ? p.detail : p.raw_text,
                           latency, to_string(p.status));
      }
    }
  };

  const std::size_t threads =
      std::min<std::size_t>(bundles.size(), static_cast<std::size_t>(std::max(1, provider.max_concurrency())));
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();

  std::stable_sort(out.begin(), out.end(),
                   [](const Prediction& a, const Prediction& b) { return a.window_id < b.window_id; });
  return out;
}

}  // namespace imutrace::llm
