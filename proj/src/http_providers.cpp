#include "schemamatch/http_providers.hpp"

#include <httplib.h>  // built with CPPHTTPLIB_OPENSSL_SUPPORT (see CMake)
#include <json.hpp>

namespace schemamatch {
namespace {

using nlohmann::json;

struct Endpoint {
  std::string origin;     // scheme://host[:port]
  std::string base_path;  // "/v1"
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint '" + url + "' has no scheme");
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = url.substr(0, path_start);
  e.base_path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!e.base_path.empty() && e.base_path.back() == '/') e.base_path.pop_back();
  return e;
}

json post_json(const HttpSettings& s, const std::string& route, const json& body) {
  const Endpoint ep = split_endpoint(s.endpoint);
  httplib::Client client(ep.origin);
  client.set_connection_timeout(s.timeout);
  client.set_read_timeout(s.timeout);
  client.set_write_timeout(s.timeout);
  httplib::Headers headers;
  if (!s.api_key.empty()) headers.emplace("Authorization", "Bearer " + s.api_key);

  auto res = client.Post(ep.base_path + route, headers, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    const std::string what = "POST " + s.endpoint + route + ": " + httplib::to_string(err);
    if (err == httplib::Error::Read || err == httplib::Error::Write) throw TimeoutError(what);
    throw TransportError(what);
  }
  const int status = res->status;
  if (status == 408 || status == 429 || status >= 500) {
    throw TransportError("POST " + s.endpoint + route + ": HTTP " + std::to_string(status));
  }
  if (status >= 400) {
    throw RefusalError("POST " + s.endpoint + route + ": HTTP " + std::to_string(status) + ": " +
                       res->body.substr(0, 500));
  }
  try {
    return json::parse(res->body);
  } catch (const json::parse_error&) {
    throw TransportError("POST " + s.endpoint + route + ": response is not JSON");
  }
}

}  // namespace

HttpGenerationProvider::HttpGenerationProvider(HttpSettings settings) : settings_(std::move(settings)) {
  split_endpoint(settings_.endpoint);
}

std::string HttpGenerationProvider::generate(const GenerationRequest& request) {
  if (request.max_output_length <= 0) throw ValidationError("max_output_length must be positive");
  const json body{{"model", settings_.model},
                  {"temperature", request.temperature},
                  {"max_tokens", request.max_output_length},
                  {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})}};
  return with_retries(settings_.retry, [&] {
    const json reply = post_json(settings_, "/chat/completions", body);
    try {
      const auto& choice = reply.at("choices").at(0);
      if (choice.value("finish_reason", "") == "content_filter") {
        throw RefusalError("generation refused by the provider's content filter");
      }
      const auto& message = choice.at("message");
      if (message.contains("refusal") && message["refusal"].is_string()) {
        throw RefusalError("generation refused: " + message["refusal"].get<std::string>());
      }
      return message.at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw ProviderError(std::string("unexpected chat completion payload: ") + e.what());
    }
  });
}

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpSettings settings, std::size_t dimension,
                                             std::size_t batch_size)
    : settings_(std::move(settings)), dimension_(dimension), batch_size_(batch_size == 0 ? 1 : batch_size) {
  split_endpoint(settings_.endpoint);
  if (dimension_ == 0) throw ConfigError("embedding dimension must be positive");
}

std::vector<EmbeddingVector> HttpEmbeddingProvider::embed(std::span<const std::string> texts) {
  if (texts.empty()) throw ValidationError("embed: empty input list");
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t start = 0; start < texts.size(); start += batch_size_) {
    const auto batch = texts.subspan(start, std::min(batch_size_, texts.size() - start));
    json body{{"model", settings_.model}, {"input", json::array()}};
    for (const auto& t : batch) body["input"].push_back(t);
    auto raw = with_retries(settings_.retry, [&] {
      const json reply = post_json(settings_, "/embeddings", body);
      std::vector<std::vector<double>> vectors(batch.size());
      try {
        for (const auto& item : reply.at("data")) {
          const auto index = item.value("index", std::size_t{0});
          if (index >= vectors.size()) throw ProviderError("embedding index out of range");
          vectors[index] = item.at("embedding").get<std::vector<double>>();
        }
      } catch (const json::exception& e) {
        throw ProviderError(std::string("unexpected embedding payload: ") + e.what());
      }
      return vectors;
    });
    auto finalized = finalize_embeddings(std::move(raw), batch.size(), dimension_);
    for (auto& v : finalized) out.push_back(std::move(v));
  }
  return out;
}

}  // namespace schemamatch
