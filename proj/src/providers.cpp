#include "schemamatch/providers.hpp"

#include <cmath>
#include <cstring>
#include <unordered_map>

#include <json.hpp>

#include "schemamatch/hashing.hpp"
#include "schemamatch/schema.hpp"

namespace schemamatch {

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ValidationError("embedding vector must have positive dimension");
}

EmbeddingVector EmbeddingVector::unit(std::vector<double> values) {
  double sq = 0.0;
  for (double v : values) sq += v * v;
  const double n = std::sqrt(sq);
  if (!(n > 1e-12) || !std::isfinite(n)) {
    throw NormalizationError("cannot unit-normalize a zero or non-finite vector");
  }
  // Already-unit input is kept bit-for-bit so that normalization is
  // idempotent (reloaded artifacts score exactly like fresh ones).
  if (std::abs(n - 1.0) > 1e-12) {
    for (double& v : values) v /= n;
  }
  return EmbeddingVector(std::move(values));
}

double EmbeddingVector::norm() const noexcept {
  double sq = 0.0;
  for (double v : values_) sq += v * v;
  return std::sqrt(sq);
}

bool EmbeddingVector::is_unit(double tolerance) const noexcept {
  return std::abs(norm() - 1.0) <= tolerance;
}

double EmbeddingVector::dot(const EmbeddingVector& other) const {
  if (other.dimension() != dimension()) {
    throw DimensionMismatchError("dot product of vectors with dimensions " +
                                 std::to_string(dimension()) + " and " +
                                 std::to_string(other.dimension()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) s += values_[i] * other.values_[i];
  return s;
}

std::vector<EmbeddingVector> finalize_embeddings(std::vector<std::vector<double>> raw,
                                                 std::size_t expected_count,
                                                 std::size_t expected_dimension) {
  if (raw.size() != expected_count) {
    throw ProviderError("embedding provider returned " + std::to_string(raw.size()) +
                        " vectors for " + std::to_string(expected_count) + " inputs");
  }
  std::vector<EmbeddingVector> out;
  out.reserve(raw.size());
  for (auto& v : raw) {
    if (v.size() != expected_dimension) {
      throw DimensionMismatchError("embedding provider returned dimension " +
                                   std::to_string(v.size()) + ", expected " +
                                   std::to_string(expected_dimension));
    }
    out.push_back(EmbeddingVector::unit(std::move(v)));
  }
  return out;
}

CacheKey CacheKey::for_generation(const std::string& provider_id, const GenerationRequest& request) {
  const nlohmann::json payload{{"provider", provider_id},
                               {"prompt", request.prompt},
                               {"temperature", request.temperature},
                               {"max_output_length", request.max_output_length}};
  return {provider_id, sha256_hex("generate\n" + payload.dump())};
}

CacheKey CacheKey::for_embedding(const std::string& provider_id, std::size_t dimension,
                                 std::string_view text) {
  const nlohmann::json payload{{"provider", provider_id}, {"dimension", dimension}, {"text", text}};
  return {provider_id, sha256_hex("embed\n" + payload.dump())};
}

ResponseCache::ResponseCache(std::filesystem::path directory) : directory_(std::move(directory)) {
  std::filesystem::create_directories(directory_);
}

std::filesystem::path ResponseCache::path_for(const CacheKey& key) const {
  return directory_ / key.content_hash.substr(0, 2) / key.content_hash;
}

std::optional<std::string> ResponseCache::get(const CacheKey& key) const {
  const auto path = path_for(key);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  return read_file(path);
}

void ResponseCache::put(const CacheKey& key, std::string_view value) const {
  write_file_atomic(path_for(key), value);
}

std::mutex& ResponseCache::lock_for(const CacheKey& key) const {
  return shards_[fnv1a64(key.content_hash) % shards_.size()];
}

CachedGenerationProvider::CachedGenerationProvider(std::shared_ptr<GenerationProvider> inner,
                                                   std::shared_ptr<ResponseCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

std::string CachedGenerationProvider::generate(const GenerationRequest& request) {
  const auto key = CacheKey::for_generation(inner_->id(), request);
  std::lock_guard lock(cache_->lock_for(key));
  if (auto hit = cache_->get(key)) {
    ++hits_;
    return *std::move(hit);
  }
  ++misses_;
  std::string text = inner_->generate(request);
  cache_->put(key, text);
  return text;
}

namespace {

std::string encode_vector(const EmbeddingVector& v) {
  std::string out(v.dimension() * sizeof(double), '\0');
  std::memcpy(out.data(), v.values().data(), out.size());
  return out;
}

std::optional<EmbeddingVector> decode_vector(const std::string& bytes, std::size_t dimension) {
  if (bytes.size() != dimension * sizeof(double) || dimension == 0) return std::nullopt;
  std::vector<double> values(dimension);
  std::memcpy(values.data(), bytes.data(), bytes.size());
  return EmbeddingVector(std::move(values));
}

}  // namespace

CachedEmbeddingProvider::CachedEmbeddingProvider(std::shared_ptr<EmbeddingProvider> inner,
                                                 std::shared_ptr<ResponseCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

std::vector<EmbeddingVector> CachedEmbeddingProvider::embed(std::span<const std::string> texts) {
  if (texts.empty()) throw ValidationError("embed: empty input list");
  const std::size_t dim = inner_->dimension();
  std::vector<std::optional<EmbeddingVector>> out(texts.size());
  std::vector<std::string> missing;
  std::unordered_map<std::string, std::vector<std::size_t>> slots;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto key = CacheKey::for_embedding(inner_->id(), dim, texts[i]);
    std::optional<std::string> bytes;
    {
      std::lock_guard lock(cache_->lock_for(key));
      bytes = cache_->get(key);
    }
    if (bytes) {
      if (auto v = decode_vector(*bytes, dim)) {
        ++hits_;
        out[i] = std::move(v);
        continue;
      }
    }
    auto& s = slots[texts[i]];
    if (s.empty()) missing.push_back(texts[i]);
    s.push_back(i);
  }
  if (!missing.empty()) {
    misses_ += missing.size();
    auto fresh = inner_->embed(missing);
    if (fresh.size() != missing.size()) {
      throw ProviderError("embedding provider returned a short batch");
    }
    for (std::size_t m = 0; m < missing.size(); ++m) {
      const auto key = CacheKey::for_embedding(inner_->id(), dim, missing[m]);
      {
        std::lock_guard lock(cache_->lock_for(key));
        cache_->put(key, encode_vector(fresh[m]));
      }
      for (std::size_t i : slots[missing[m]]) out[i] = fresh[m];
    }
  }
  std::vector<EmbeddingVector> result;
  result.reserve(out.size());
  for (auto& v : out) result.push_back(*std::move(v));
  return result;
}

}  // namespace schemamatch
