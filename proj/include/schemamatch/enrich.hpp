#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "schemamatch/normalize.hpp"
#include "schemamatch/providers.hpp"
#include "schemamatch/schema.hpp"

namespace schemamatch {

enum class NameOrigin { kExpansion, kCrossTerminology, kOriginal };

std::string_view to_string(NameOrigin origin) noexcept;
NameOrigin parse_name_origin(std::string_view text);

struct EnrichedName {
  std::string text;
  TokenizedName tokens;  // normalize_name(text)
  NameOrigin origin;
  int position;          // 1-based position in the generated list

  friend bool operator==(const EnrichedName&, const EnrichedName&) = default;
};

struct EnrichedColumn {
  ColumnMeta meta;
  std::string table_description;
  // Generated names (expansion first, then cross-terminology) followed by
  // exactly one origin=original entry.
  std::vector<EnrichedName> names;

  const EnrichedName& original() const { return names.back(); }

  friend bool operator==(const EnrichedColumn&, const EnrichedColumn&) = default;
};

struct EnrichmentConfig {
  int num_names = 3;       // names kept per prompt
  int generate_count = 3;  // names requested per prompt
  bool use_expansion_prompt = true;
  bool use_cross_terminology_prompt = true;
  int max_output_length = 1024;

  // Throws ConfigError.
  void validate() const;
};

std::string build_expansion_prompt(const ColumnMeta& column, const TableMeta& table, int count);
std::string build_cross_terminology_prompt(const ColumnMeta& column, const TableMeta& table, int count);

// Tokens of the table name and column name; cross-terminology names must
// avoid all of them.
std::vector<std::string> forbidden_tokens(const ColumnMeta& column, const TableMeta& table);

// Sends `prompt` and parses the numbered <tag> block. On a parse failure the
// prompt is re-sent once with a format-correction instruction; a second
// failure throws ParseError. Provider errors propagate.
std::vector<std::string> generate_list(GenerationProvider& llm, const std::string& prompt,
                                       std::string_view tag, int max_output_length = 1024);

// Runs the enabled prompts, normalizes the replies, drops cross-terminology
// names that reuse a table or column word, drops names whose tokens repeat
// an earlier name (or the original), keeps the first `num_names` of each
// prompt, and appends the normalized original name.
EnrichedColumn enrich_column(const ColumnMeta& column, const TableMeta& table,
                             const EnrichmentConfig& config, GenerationProvider& llm);

// Only the original name; what a side with enrichment disabled indexes or
// queries with.
EnrichedColumn original_only(const ColumnMeta& column, const TableMeta& table);

struct EnrichmentArtifact {
  std::string schema_name;
  std::string config_hash;
  std::vector<EnrichedColumn> columns;  // schema declaration order

  const EnrichedColumn* find(const ColumnRef& ref) const;
  std::size_t name_count() const noexcept;
};

// Enriches every column, up to `parallelism` at a time. With `enabled`
// false, records original names only and makes no provider calls.
EnrichmentArtifact enrich_schema(const SchemaDef& schema, const EnrichmentConfig& config,
                                 GenerationProvider& llm, std::size_t parallelism, bool enabled,
                                 std::string config_hash);

std::string serialize_enrichment(const EnrichmentArtifact& artifact);
EnrichmentArtifact parse_enrichment(std::string_view text, const SchemaDef& schema,
                                    std::string_view origin = "<memory>");

}  // namespace schemamatch
