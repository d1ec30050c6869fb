#pragma once

#include <chrono>
#include <cstddef>
#include <string>

#include "schemamatch/providers.hpp"

namespace schemamatch {

// Connection settings for an OpenAI-compatible HTTP API
// ("<endpoint>/chat/completions", "<endpoint>/embeddings").
struct HttpSettings {
  std::string endpoint;  // e.g. https://api.openai.com/v1
  std::string model;
  std::string api_key;   // sent as a bearer token when non-empty
  std::chrono::seconds timeout{60};
  RetryPolicy retry;
};

class HttpGenerationProvider final : public GenerationProvider {
 public:
  explicit HttpGenerationProvider(HttpSettings settings);

  std::string id() const override { return "http-chat/" + settings_.model; }
  std::string generate(const GenerationRequest& request) override;

 private:
  HttpSettings settings_;
};

class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(HttpSettings settings, std::size_t dimension, std::size_t batch_size = 64);

  std::string id() const override { return "http-embedding/" + settings_.model; }
  std::size_t dimension() const override { return dimension_; }
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;

 private:
  HttpSettings settings_;
  std::size_t dimension_;
  std::size_t batch_size_;
};

}  // namespace schemamatch
