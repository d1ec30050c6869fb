#pragma once

#include <stdexcept>
#include <string>

namespace schemamatch {

// Root of every error the library throws. The CLI maps subclasses onto exit
// codes (see commands.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: files, LLM responses, artifacts.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates an invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DuplicateError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UnknownColumnError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EmptyCorpusError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DimensionMismatchError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NormalizationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class StaleArtifactError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ContextBudgetError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Anything that went wrong talking to an LLM or embedding backend.
class ProviderError : public Error {
 public:
  using Error::Error;
};

// Retryable: connection failures, 5xx, rate limiting.
class TransportError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

class TimeoutError : public TransportError {
 public:
  using TransportError::TransportError;
};

// Not retryable: the provider understood the request and declined it.
class RefusalError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

class EvaluationError : public Error {
 public:
  using Error::Error;
};

class SchemaMismatchError : public EvaluationError {
 public:
  using EvaluationError::EvaluationError;
};

class MissingGroundTruthError : public EvaluationError {
 public:
  using EvaluationError::EvaluationError;
};

}  // namespace schemamatch
