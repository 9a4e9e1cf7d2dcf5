#pragma once

#include <stdexcept>
#include <string>

namespace imutrace {

/// Process exit codes used by the command-line tool. Each error class below
/// maps onto exactly one of them.
enum class ExitCode : int {
  kSuccess = 0,
  kConfig = 2,
  kData = 3,
  kTransport = 4,
  kInternal = 5,
};

class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }
  virtual ExitCode exit_code() const noexcept { return ExitCode::kInternal; }

 private:
  std::string module_;
};

/// Invalid configuration, missing credentials, bad flags.
class ConfigError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kConfig; }
};

/// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kData; }
};

/// Network failure or retries exhausted. Carries the last HTTP status (0 when
/// no response was received at all).
class TransportError : public Error {
 public:
  TransportError(std::string module, const std::string& what, int last_status, int attempts)
      : Error(std::move(module), what), last_status_(last_status), attempts_(attempts) {}

  int last_status() const noexcept { return last_status_; }
  int attempts() const noexcept { return attempts_; }
  ExitCode exit_code() const noexcept override { return ExitCode::kTransport; }

 private:
  int last_status_;
  int attempts_;
};

/// The provider answered but the answer is unusable (non-JSON, empty text,
/// unparseable embedded data for the mock).
class ProviderError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kTransport; }
};

/// Model text contained no recognizable trajectory label.
class UnparseableLabelError : public Error {
 public:
  explicit UnparseableLabelError(const std::string& what) : Error("llm_client", what) {}
  ExitCode exit_code() const noexcept override { return ExitCode::kData; }
};

/// Model text ends on a tie between distinct labels or on a hedge phrase.
class AmbiguousLabelError : public Error {
 public:
  explicit AmbiguousLabelError(const std::string& what) : Error("llm_client", what) {}
  ExitCode exit_code() const noexcept override { return ExitCode::kData; }
};

/// Numerical failure during training (diverging loss, non-finite values).
class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what) : Error("baselines", what) {}
  ExitCode exit_code() const noexcept override { return ExitCode::kInternal; }
};

}  // namespace imutrace
