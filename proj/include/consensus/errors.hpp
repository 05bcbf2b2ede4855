#pragma once

#include <stdexcept>
#include <string>

namespace consensus {

// Base of every error this library raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller handed us values that violate a documented precondition.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

// A file or payload failed structural validation; message carries location
// context (path, line) where it is known.
class FormatError : public Error {
 public:
  using Error::Error;
};

// File-system level failure; message carries the artifact path.
class IoError : public Error {
 public:
  using Error::Error;
};

// The brute-force solver only handles small matrices.
class UnsupportedSizeError : public Error {
 public:
  using Error::Error;
};

// A remote capability failed after the retry budget was spent.
class ProviderError : public Error {
 public:
  ProviderError(const std::string& what, int attempts, int http_status)
      : Error(what), attempts(attempts), http_status(http_status) {}
  explicit ProviderError(const std::string& what) : Error(what) {}

  int attempts = 0;     // total attempts made, including the first
  int http_status = 0;  // last HTTP status, 0 for transport-level failures
};

// The configured provider cannot perform the requested operation at all
// (e.g. no log-probability support); retrying would not help.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// A scripted stand-in ran out of queued responses or lacks a key. This is a
// test-configuration bug, never a recoverable runtime condition.
class ScriptError : public Error {
 public:
  using Error::Error;
};

// The stance judge produced unusable output even after retries.
class JudgeError : public Error {
 public:
  JudgeError(const std::string& what, std::string raw)
      : Error(what), raw_output(std::move(raw)) {}

  std::string raw_output;  // verbatim model output, for diagnosis
};

// The best-response oracle could not produce a single usable candidate.
class OracleError : public Error {
 public:
  using Error::Error;
};

// A transcript is missing pieces a downstream consumer requires.
class TranscriptError : public Error {
 public:
  using Error::Error;
};

// The perplexity-gap baseline is numerically zero; the topic cannot be
// scored and must be excluded rather than counted.
class DegenerateBaselineError : public Error {
 public:
  using Error::Error;
};

}  // namespace consensus
