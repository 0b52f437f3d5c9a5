#pragma once

#include <stdexcept>
#include <string>

namespace artarena {

// Every failure the engine raises derives from ArenaError. The CLI maps the
// category to a process exit status.
enum class ErrorCategory {
  kConfig,
  kParse,
  kValidation,
  kBackend,
  kContract,
  kProtocol,
};

class ArenaError : public std::runtime_error {
 public:
  ArenaError(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

/// Malformed or invalid configuration (unknown key, bad value).
class ConfigError : public ArenaError {
 public:
  explicit ConfigError(const std::string& what) : ArenaError(ErrorCategory::kConfig, what) {}
};

/// A file could not be parsed under its schema.
class ParseError : public ArenaError {
 public:
  explicit ParseError(const std::string& what) : ArenaError(ErrorCategory::kParse, what) {}
};

/// Well-formed input that violates a domain invariant.
class ValidationError : public ArenaError {
 public:
  explicit ValidationError(const std::string& what)
      : ArenaError(ErrorCategory::kValidation, what) {}
};

/// Transport-level or worker-reported failure. Retryable.
class BackendError : public ArenaError {
 public:
  explicit BackendError(const std::string& what) : ArenaError(ErrorCategory::kBackend, what) {}
};

/// The backend answered, but the answer breaks its contract (NaN score,
/// out-of-range score, wrong image count). Never retried.
class ContractViolation : public ArenaError {
 public:
  explicit ContractViolation(const std::string& what)
      : ArenaError(ErrorCategory::kContract, what) {}
};

/// Wire-level framing or handshake failure.
class ProtocolError : public ArenaError {
 public:
  explicit ProtocolError(const std::string& what) : ArenaError(ErrorCategory::kProtocol, what) {}
};

}  // namespace artarena
