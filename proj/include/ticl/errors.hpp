// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace ticl {

/// Failure classes. The CLI maps each to a distinct exit code.
enum class ErrorKind { kInternal, kConfig, kData, kTransport, kParse };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

/// Raised when a persisted document carries a schema version this build cannot read.
class MigrationError : public DataError {
 public:
  explicit MigrationError(const std::string& what) : DataError(what) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(ErrorKind::kParse, what) {}
};

class TransportError : public Error {
 public:
  TransportError(const std::string& what, int status, bool transient)
      : Error(ErrorKind::kTransport, what), status_(status), transient_(transient) {}
  /// HTTP status of the last attempt; 0 for timeouts and connection failures.
  int status() const noexcept { return status_; }
  bool transient() const noexcept { return transient_; }

 private:
  int status_;
  bool transient_;
};

/// The scripted provider had no entry matching a prompt.
class ScriptExhaustedError : public TransportError {
 public:
  explicit ScriptExhaustedError(const std::string& what) : TransportError(what, 0, false) {}
};

/// 408, 429, 5xx and timeouts (status 0) are retried; other 4xx are permanent.
inline bool is_transient_status(int status) {
  return status == 0 || status == 408 || status == 429 || (status >= 500 && status <= 599);
}

}  // namespace ticl
