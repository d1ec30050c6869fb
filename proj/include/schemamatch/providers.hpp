#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "schemamatch/errors.hpp"

namespace schemamatch {

struct GenerationRequest {
  std::string prompt;
  double temperature = 0.0;
  int max_output_length = 1024;
};

// A dense embedding. Construction via `unit` normalizes to Euclidean norm 1.
class EmbeddingVector {
 public:
  // Takes values as-is. Throws ValidationError when empty.
  explicit EmbeddingVector(std::vector<double> values);

  // Scales to unit norm; input already within 1e-12 of unit norm is kept
  // unchanged. Throws NormalizationError for zero (or non-finite)
  // input.
  static EmbeddingVector unit(std::vector<double> values);

  std::size_t dimension() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double norm() const noexcept;
  bool is_unit(double tolerance = 1e-6) const noexcept;

  // Throws DimensionMismatchError.
  double dot(const EmbeddingVector& other) const;

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  std::vector<double> values_;
};

class GenerationProvider {
 public:
  virtual ~GenerationProvider() = default;
  // Identifies backend and model; part of every cache key.
  virtual std::string id() const = 0;
  virtual std::string generate(const GenerationRequest& request) = 0;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dimension() const = 0;
  // One unit vector per input, in input order. Input must be non-empty.
  virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) = 0;
};

// Checks count and dimensions of a provider reply and normalizes each vector.
std::vector<EmbeddingVector> finalize_embeddings(std::vector<std::vector<double>> raw,
                                                 std::size_t expected_count,
                                                 std::size_t expected_dimension);

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  double multiplier = 2.0;
};

// Runs `fn`, retrying on TransportError (including timeouts) with
// exponential backoff. Other errors propagate immediately; after the last
// attempt the final TransportError is rethrown.
template <class Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
  auto backoff = policy.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const TransportError&) {
      if (attempt >= policy.attempts) throw;
    }
    std::this_thread::sleep_for(backoff);
    backoff = std::chrono::milliseconds(
        static_cast<long long>(static_cast<double>(backoff.count()) * policy.multiplier));
  }
}

struct CacheKey {
  std::string provider_id;
  std::string content_hash;  // SHA-256 hex of the full request payload

  static CacheKey for_generation(const std::string& provider_id, const GenerationRequest& request);
  static CacheKey for_embedding(const std::string& provider_id, std::size_t dimension,
                                std::string_view text);

  friend bool operator==(const CacheKey&, const CacheKey&) = default;
};

struct CacheStats {
  std::size_t hits = 0;
  std::size_t misses = 0;
};

// Content-addressed on-disk store. Writes are atomic (temp file + rename).
// Callers that must not duplicate work for the same key hold `lock_for`.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path directory);

  const std::filesystem::path& directory() const noexcept { return directory_; }
  std::optional<std::string> get(const CacheKey& key) const;
  void put(const CacheKey& key, std::string_view value) const;
  std::mutex& lock_for(const CacheKey& key) const;

 private:
  std::filesystem::path path_for(const CacheKey& key) const;

  std::filesystem::path directory_;
  mutable std::array<std::mutex, 64> shards_;
};

class CachedGenerationProvider final : public GenerationProvider {
 public:
  CachedGenerationProvider(std::shared_ptr<GenerationProvider> inner,
                           std::shared_ptr<ResponseCache> cache);

  std::string id() const override { return inner_->id(); }
  std::string generate(const GenerationRequest& request) override;
  CacheStats stats() const noexcept { return {hits_.load(), misses_.load()}; }

 private:
  std::shared_ptr<GenerationProvider> inner_;
  std::shared_ptr<ResponseCache> cache_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

// Per-text cache; misses from one call are sent to the inner provider as a
// single batch.
class CachedEmbeddingProvider final : public EmbeddingProvider {
 public:
  CachedEmbeddingProvider(std::shared_ptr<EmbeddingProvider> inner,
                          std::shared_ptr<ResponseCache> cache);

  std::string id() const override { return inner_->id(); }
  std::size_t dimension() const override { return inner_->dimension(); }
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;
  CacheStats stats() const noexcept { return {hits_.load(), misses_.load()}; }

 private:
  std::shared_ptr<EmbeddingProvider> inner_;
  std::shared_ptr<ResponseCache> cache_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

}  // namespace schemamatch
