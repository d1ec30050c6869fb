#include "schemamatch/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <optional>

#include <json.hpp>

#include "schemamatch/errors.hpp"
#include "schemamatch/hashing.hpp"
#include "schemamatch/json_util.hpp"

namespace schemamatch {

using nlohmann::ordered_json;

void RunConfig::validate() const {
  if (source_schema.empty()) throw ConfigError("config: source_schema is required");
  if (target_schema.empty()) throw ConfigError("config: target_schema is required");
  if (artifact_dir.empty()) throw ConfigError("config: artifact_dir is required");
  enrichment.validate();
  retrieval.validate();
  effective_retrieval(retrieval, flags).validate();
  if (ks.empty()) throw ConfigError("config: ks must not be empty");
  for (auto k : ks) {
    if (k == 0) throw ConfigError("config: every K must be at least 1");
    if (k > emit_k) throw ConfigError("config: K=" + std::to_string(k) + " exceeds emit_k");
  }
  if (emit_k == 0) throw ConfigError("config: emit_k must be positive");
  if (needle.top_k == 0) throw ConfigError("config: needle.top_k must be positive");
  if (providers.parallelism == 0) throw ConfigError("config: providers.parallelism must be positive");
  if (providers.mock) {
    if (providers.mock_dimension == 0) throw ConfigError("config: providers.mock_dimension must be positive");
    if (providers.mock_attention_span == 0) {
      throw ConfigError("config: providers.mock_attention_span must be positive");
    }
    return;
  }
  if (providers.endpoint.empty()) throw ConfigError("config: providers.endpoint is required");
  if (providers.generation_model.empty() || providers.embedding_model.empty()) {
    throw ConfigError("config: providers.generation_model and providers.embedding_model are required");
  }
  if (providers.embedding_dimension == 0) throw ConfigError("config: providers.embedding_dimension must be positive");
  if (providers.timeout_seconds <= 0) throw ConfigError("config: providers.timeout_seconds must be positive");
  if (providers.retry_attempts <= 0) throw ConfigError("config: providers.retry_attempts must be positive");
  if (!providers.credential_env.empty()) {
    const char* value = std::getenv(providers.credential_env.c_str());
    if (value == nullptr || *value == '\0') {
      throw ConfigError("config: credential variable " + providers.credential_env + " is not set");
    }
  }
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::optional<std::string>& value) {
  if (!value || value->empty()) return {};
  std::filesystem::path p(*value);
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

std::size_t positive_size(const JsonReader& r, std::string_view field, std::size_t fallback) {
  const auto v = r.integer_or(field, static_cast<long long>(fallback));
  if (v <= 0) throw ConfigError(r.where(field) + ": must be a positive integer");
  return static_cast<std::size_t>(v);
}

}  // namespace

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir, std::string_view origin) {
  const auto doc = parse_json_document(text, origin);
  JsonReader root(doc, std::string(origin));
  if (!doc.is_object()) throw ConfigError(std::string(origin) + ": expected an object");
  static const std::vector<std::string> known = {"source_schema", "target_schema", "ground_truth", "cache_dir",
                                                 "artifact_dir",  "output_dir",    "providers",    "enrichment",
                                                 "retrieval",     "ablation",      "ks",           "emit_k",
                                                 "na_policy",     "needle"};
  for (const auto& [key, _] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError(root.where(key) + ": unknown setting");
    }
  }
  RunConfig c;
  c.source_schema = resolve(base_dir, root.optional_string("source_schema"));
  c.target_schema = resolve(base_dir, root.optional_string("target_schema"));
  c.ground_truth = resolve(base_dir, root.optional_string("ground_truth"));
  c.cache_dir = resolve(base_dir, root.optional_string("cache_dir"));
  c.artifact_dir = resolve(base_dir, root.optional_string("artifact_dir"));
  c.output_dir = resolve(base_dir, root.optional_string("output_dir"));
  if (c.output_dir.empty()) c.output_dir = c.artifact_dir;

  if (root.has("providers")) {
    const auto p = root.object("providers");
    if (p.has("api_key")) throw ConfigError(p.where("api_key") + ": keys do not belong in config files; set credential_env");
    auto& pc = c.providers;
    pc.mock = p.bool_or("mock", pc.mock);
    pc.endpoint = p.optional_string("endpoint").value_or(pc.endpoint);
    pc.generation_model = p.optional_string("generation_model").value_or(pc.generation_model);
    pc.embedding_model = p.optional_string("embedding_model").value_or(pc.embedding_model);
    pc.embedding_dimension = positive_size(p, "embedding_dimension", pc.embedding_dimension);
    pc.credential_env = p.optional_string("credential_env").value_or(pc.credential_env);
    pc.timeout_seconds = static_cast<int>(positive_size(p, "timeout_seconds", pc.timeout_seconds));
    pc.retry_attempts = static_cast<int>(positive_size(p, "retry_attempts", pc.retry_attempts));
    pc.parallelism = positive_size(p, "parallelism", pc.parallelism);
    pc.mock_lexicon = resolve(base_dir, p.optional_string("mock_lexicon"));
    pc.mock_dimension = positive_size(p, "mock_dimension", pc.mock_dimension);
    pc.mock_attention_span = positive_size(p, "mock_attention_span", pc.mock_attention_span);
  }
  if (root.has("enrichment")) {
    const auto e = root.object("enrichment");
    c.enrichment.num_names = static_cast<int>(e.integer_or("num_names", c.enrichment.num_names));
    c.enrichment.generate_count = static_cast<int>(e.integer_or("generate_count", c.enrichment.generate_count));
    c.enrichment.use_expansion_prompt = e.bool_or("expansion_prompt", c.enrichment.use_expansion_prompt);
    c.enrichment.use_cross_terminology_prompt =
        e.bool_or("cross_terminology_prompt", c.enrichment.use_cross_terminology_prompt);
    c.enrichment.max_output_length =
        static_cast<int>(e.integer_or("max_output_length", c.enrichment.max_output_length));
  }
  if (root.has("retrieval")) {
    const auto r = root.object("retrieval");
    c.retrieval.top_k = positive_size(r, "top_k", c.retrieval.top_k);
    c.retrieval.cosine_threshold = r.number_or("cosine_threshold", c.retrieval.cosine_threshold);
    c.retrieval.bm25_threshold = r.number_or("bm25_threshold", c.retrieval.bm25_threshold);
    c.retrieval.bm25.k1 = r.number_or("bm25_k1", c.retrieval.bm25.k1);
    c.retrieval.bm25.b = r.number_or("bm25_b", c.retrieval.bm25.b);
  }
  if (root.has("ablation")) {
    const auto a = root.object("ablation");
    for (const auto& [key, _] : a.node().items()) c.flags.flag(key) = a.bool_or(key, true);
  }
  if (root.has("ks")) {
    const auto& ks = doc.at("ks");
    if (!ks.is_array()) throw ConfigError(root.where("ks") + ": expected an array of integers");
    c.ks.clear();
    for (const auto& k : ks) {
      if (!k.is_number_integer() || k.get<long long>() <= 0) {
        throw ConfigError(root.where("ks") + ": expected positive integers");
      }
      c.ks.push_back(k.get<std::size_t>());
    }
  }
  c.emit_k = positive_size(root, "emit_k", c.emit_k);
  const auto na = root.optional_string("na_policy").value_or("exclude");
  if (na == "exclude") {
    c.na_policy = NaPolicy::kExclude;
  } else if (na == "score") {
    c.na_policy = NaPolicy::kScore;
  } else {
    throw ConfigError(root.where("na_policy") + ": expected \"exclude\" or \"score\"");
  }
  if (root.has("needle")) {
    const auto n = root.object("needle");
    c.needle.top_k = positive_size(n, "top_k", c.needle.top_k);
    c.needle.context_budget_tokens = positive_size(n, "context_budget_tokens", c.needle.context_budget_tokens);
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  try {
    return parse_run_config(read_file(path), path.parent_path(), path.string());
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
}

std::string schema_hash(const SchemaDef& schema) { return sha256_hex(serialize_schema(schema)); }

namespace {

ordered_json enrichment_json(const SideEnrichment& side) {
  return ordered_json{{"enabled", side.enabled},
                      {"num_names", side.config.num_names},
                      {"generate_count", side.config.generate_count},
                      {"expansion_prompt", side.config.use_expansion_prompt},
                      {"cross_terminology_prompt", side.config.use_cross_terminology_prompt},
                      {"max_output_length", side.config.max_output_length}};
}

}  // namespace

std::string index_hash(const RunConfig& config, const SchemaDef& target, std::string_view generation_id,
                       std::string_view embedding_id) {
  const ordered_json doc{{"target_schema", schema_hash(target)},
                         {"document_enrichment", enrichment_json(document_side(config.enrichment, config.flags))},
                         {"bm25", {{"k1", config.retrieval.bm25.k1}, {"b", config.retrieval.bm25.b}}},
                         {"generation", generation_id},
                         {"embedding", embedding_id}};
  return sha256_hex(doc.dump());
}

std::string run_config_hash(const RunConfig& config, const SchemaDef& source, const SchemaDef& target,
                            std::string_view generation_id, std::string_view embedding_id, bool baseline) {
  ordered_json flags;
  for (auto name : AblationFlags::kNames) flags[std::string(name)] = config.flags.flag(name);
  ordered_json doc{{"mode", baseline ? "needle" : "pipeline"},
                   {"source_schema", schema_hash(source)},
                   {"target_schema", schema_hash(target)},
                   {"generation", generation_id}};
  if (baseline) {
    doc["needle"] = {{"top_k", config.needle.top_k}, {"context_budget_tokens", config.needle.context_budget_tokens}};
  } else {
    const auto r = effective_retrieval(config.retrieval, config.flags);
    doc["embedding"] = embedding_id;
    doc["index"] = index_hash(config, target, generation_id, embedding_id);
    doc["query_enrichment"] = enrichment_json(query_side(config.enrichment, config.flags));
    doc["retrieval"] = {{"top_k", r.top_k},
                        {"cosine_threshold", r.cosine_threshold},
                        {"bm25_threshold", r.bm25_threshold},
                        {"use_vector", r.use_vector},
                        {"use_lexical", r.use_lexical}};
    doc["flags"] = std::move(flags);
    doc["emit_k"] = config.emit_k;
  }
  return sha256_hex(doc.dump());
}

}  // namespace schemamatch
