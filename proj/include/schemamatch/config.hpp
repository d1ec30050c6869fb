#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "schemamatch/enrich.hpp"
#include "schemamatch/eval.hpp"
#include "schemamatch/pipeline.hpp"

namespace schemamatch {

struct ProviderConfig {
  bool mock = false;
  // HTTP providers
  std::string endpoint = "https://api.openai.com/v1";
  std::string generation_model = "gpt-4.1";
  std::string embedding_model = "text-embedding-3-large";
  std::size_t embedding_dimension = 3072;
  std::string credential_env = "OPENAI_API_KEY";  // name of the variable, never the key
  int timeout_seconds = 60;
  int retry_attempts = 3;
  std::size_t parallelism = 4;
  // Mock providers
  std::filesystem::path mock_lexicon;  // empty: built-in lexicon
  std::size_t mock_dimension = 384;
  std::size_t mock_attention_span = 12;
};

struct RunConfig {
  std::filesystem::path source_schema;
  std::filesystem::path target_schema;
  std::filesystem::path ground_truth;
  std::filesystem::path cache_dir;  // empty: no response cache
  std::filesystem::path artifact_dir;
  std::filesystem::path output_dir;
  ProviderConfig providers;
  EnrichmentConfig enrichment;
  RetrievalConfig retrieval;
  AblationFlags flags;
  std::vector<std::size_t> ks{1, 3, 5};
  std::size_t emit_k = 10;
  NaPolicy na_policy = NaPolicy::kExclude;
  NeedleOptions needle;

  // Throws ConfigError. Checks values and, for HTTP providers, that the
  // credential variable is set; makes no provider calls.
  void validate() const;
};

// JSON config. Relative paths resolve against the config file's directory.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir,
                           std::string_view origin = "<memory>");

std::string schema_hash(const SchemaDef& schema);

// Hash stamped on target artifacts: target schema, document-side
// enrichment, BM25 parameters and provider ids. Query-side settings do not
// invalidate an index.
std::string index_hash(const RunConfig& config, const SchemaDef& target, std::string_view generation_id,
                       std::string_view embedding_id);

// Hash of everything that determines a run's predictions.
std::string run_config_hash(const RunConfig& config, const SchemaDef& source, const SchemaDef& target,
                            std::string_view generation_id, std::string_view embedding_id, bool baseline);

}  // namespace schemamatch
