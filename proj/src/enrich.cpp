#include "schemamatch/enrich.hpp"

#include <algorithm>
#include <optional>
#include <set>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "schemamatch/errors.hpp"
#include "schemamatch/json_util.hpp"
#include "schemamatch/parallel.hpp"
#include "schemamatch/prompts.hpp"

namespace schemamatch {

using nlohmann::json;

std::string_view to_string(NameOrigin origin) noexcept {
  switch (origin) {
    case NameOrigin::kExpansion: return "expansion";
    case NameOrigin::kCrossTerminology: return "cross_terminology";
    case NameOrigin::kOriginal: return "original";
  }
  return "original";
}

NameOrigin parse_name_origin(std::string_view text) {
  if (text == "expansion") return NameOrigin::kExpansion;
  if (text == "cross_terminology") return NameOrigin::kCrossTerminology;
  if (text == "original") return NameOrigin::kOriginal;
  throw ParseError("unknown name origin '" + std::string(text) + "'");
}

void EnrichmentConfig::validate() const {
  if (num_names < 1) throw ConfigError("enrichment.num_names must be at least 1");
  if (generate_count < 1) throw ConfigError("enrichment.generate_count must be at least 1");
  if (num_names > generate_count) {
    throw ConfigError("enrichment.num_names (" + std::to_string(num_names) +
                      ") exceeds generate_count (" + std::to_string(generate_count) + ")");
  }
  if (max_output_length < 1) throw ConfigError("enrichment.max_output_length must be positive");
}

namespace {

std::string name_word(int count) { return count == 1 ? "name" : "names"; }

void require_count(int count) {
  if (count < 1) throw ValidationError("requested name count must be at least 1");
}

}  // namespace

std::string build_expansion_prompt(const ColumnMeta& column, const TableMeta& table, int count) {
  require_count(count);
  return render_template(
      prompt_template(PromptTemplate::kNameExpansion),
      {{"count", std::to_string(count)},
       {"name_word", name_word(count)},
       {"example", std::string(trim(prompt_template(PromptTemplate::kExpansionExample)))},
       {"table_name", table.name},
       {"table_description", or_placeholder(table.description)},
       {"column_name", column.ref.column_name()},
       {"column_description", or_placeholder(column.description)}});
}

std::vector<std::string> forbidden_tokens(const ColumnMeta& column, const TableMeta& table) {
  std::vector<std::string> out;
  for (const auto* source : {&table.name, &column.ref.column_name()}) {
    for (auto& t : normalize_name(*source).tokens) {
      if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(std::move(t));
    }
  }
  return out;
}

std::string build_cross_terminology_prompt(const ColumnMeta& column, const TableMeta& table, int count) {
  require_count(count);
  std::string forbidden;
  for (const auto& t : forbidden_tokens(column, table)) {
    if (!forbidden.empty()) forbidden += ", ";
    forbidden += t;
  }
  return render_template(
      prompt_template(PromptTemplate::kCrossTerminology),
      {{"count", std::to_string(count)},
       {"name_word", name_word(count)},
       {"forbidden_words", forbidden},
       {"example", std::string(trim(prompt_template(PromptTemplate::kCrossTerminologyExample)))},
       {"table_name", table.name},
       {"column_name", column.ref.column_name()}});
}

std::vector<std::string> generate_list(GenerationProvider& llm, const std::string& prompt,
                                       std::string_view tag, int max_output_length) {
  GenerationRequest request{prompt, 0.0, max_output_length};
  try {
    return parse_numbered_block(llm.generate(request), tag);
  } catch (const ParseError& first) {
    request.prompt = with_repair_instruction(prompt, tag, first.what());
    try {
      return parse_numbered_block(llm.generate(request), tag);
    } catch (const ParseError& second) {
      throw ParseError(std::string("LLM reply unusable after one repair attempt: ") + second.what());
    }
  }
}

EnrichedColumn original_only(const ColumnMeta& column, const TableMeta& table) {
  EnrichedColumn out{column, table.description, {}};
  out.names.push_back(EnrichedName{column.ref.column_name(), normalize_name(column.ref.column_name()),
                                   NameOrigin::kOriginal, 1});
  return out;
}

EnrichedColumn enrich_column(const ColumnMeta& column, const TableMeta& table,
                             const EnrichmentConfig& config, GenerationProvider& llm) {
  config.validate();
  EnrichedColumn out = original_only(column, table);
  const EnrichedName original = out.names.back();
  out.names.clear();

  std::set<std::vector<std::string>> seen{original.tokens.tokens};
  const auto forbidden = forbidden_tokens(column, table);

  auto run = [&](NameOrigin origin, const std::string& prompt) {
    auto items = generate_list(llm, prompt, "names", config.max_output_length);
    if (items.size() > static_cast<std::size_t>(config.generate_count)) {
      items.resize(static_cast<std::size_t>(config.generate_count));
    }
    int kept = 0;
    for (std::size_t i = 0; i < items.size() && kept < config.num_names; ++i) {
      TokenizedName tokens = normalize_name(items[i]);
      if (tokens.tokens.empty()) continue;
      if (origin == NameOrigin::kCrossTerminology) {
        const bool reuses = std::any_of(tokens.tokens.begin(), tokens.tokens.end(), [&](const std::string& t) {
          return std::find(forbidden.begin(), forbidden.end(), t) != forbidden.end();
        });
        if (reuses) {
          spdlog::debug("dropping cross-terminology name '{}' for {}: reuses a table or column word",
                        items[i], column.ref.display());
          continue;
        }
      }
      if (!seen.insert(tokens.tokens).second) continue;
      out.names.push_back(EnrichedName{items[i], std::move(tokens), origin, static_cast<int>(i + 1)});
      ++kept;
    }
  };

  if (config.use_expansion_prompt) {
    run(NameOrigin::kExpansion, build_expansion_prompt(column, table, config.generate_count));
  }
  if (config.use_cross_terminology_prompt) {
    run(NameOrigin::kCrossTerminology, build_cross_terminology_prompt(column, table, config.generate_count));
  }
  out.names.push_back(original);
  return out;
}

const EnrichedColumn* EnrichmentArtifact::find(const ColumnRef& ref) const {
  for (const auto& c : columns) {
    if (c.meta.ref == ref) return &c;
  }
  return nullptr;
}

std::size_t EnrichmentArtifact::name_count() const noexcept {
  std::size_t n = 0;
  for (const auto& c : columns) n += c.names.size();
  return n;
}

EnrichmentArtifact enrich_schema(const SchemaDef& schema, const EnrichmentConfig& config,
                                 GenerationProvider& llm, std::size_t parallelism, bool enabled,
                                 std::string config_hash) {
  config.validate();
  struct Job {
    const ColumnMeta* column;
    const TableMeta* table;
  };
  std::vector<Job> jobs;
  for (const auto& t : schema.tables()) {
    for (const auto& c : t.columns) jobs.push_back({&c, &t});
  }
  std::vector<std::optional<EnrichedColumn>> results(jobs.size());
  parallel_for(jobs.size(), enabled ? parallelism : 1, [&](std::size_t i) {
    results[i] = enabled ? enrich_column(*jobs[i].column, *jobs[i].table, config, llm)
                         : original_only(*jobs[i].column, *jobs[i].table);
  });
  EnrichmentArtifact artifact{schema.name(), std::move(config_hash), {}};
  artifact.columns.reserve(results.size());
  for (auto& r : results) artifact.columns.push_back(*std::move(r));
  return artifact;
}

std::string serialize_enrichment(const EnrichmentArtifact& artifact) {
  json doc{{"format", "schemamatch.enrichment"},
           {"version", 1},
           {"schema", artifact.schema_name},
           {"config_hash", artifact.config_hash},
           {"columns", json::array()}};
  for (const auto& c : artifact.columns) {
    json names = json::array();
    for (const auto& n : c.names) {
      names.push_back({{"text", n.text},
                       {"origin", to_string(n.origin)},
                       {"position", n.position},
                       {"tokens", n.tokens.tokens}});
    }
    doc["columns"].push_back(
        {{"table", c.meta.ref.table_name()}, {"column", c.meta.ref.column_name()}, {"names", std::move(names)}});
  }
  return doc.dump(2) + "\n";
}

EnrichmentArtifact parse_enrichment(std::string_view text, const SchemaDef& schema, std::string_view origin) {
  const json doc = parse_json_document(text, origin);
  JsonReader root(doc, std::string(origin));
  if (root.required_string("format") != "schemamatch.enrichment" || root.integer_or("version", 0) != 1) {
    throw ParseError(std::string(origin) + ": not a version 1 enrichment artifact");
  }
  EnrichmentArtifact artifact{root.required_string("schema"), root.required_string("config_hash"), {}};
  if (fold_case(artifact.schema_name) != fold_case(schema.name())) {
    throw StaleArtifactError(std::string(origin) + ": enrichment was built for schema '" +
                             artifact.schema_name + "', not '" + schema.name() + "'");
  }
  root.for_each("columns", [&](const JsonReader& c) {
    const ColumnRef ref(c.required_string("table"), c.required_string("column"));
    const ColumnMeta* meta = schema.find_column(ref);
    if (!meta) throw UnknownColumnError(c.where("column") + ": '" + ref.display() + "' is not in the schema");
    EnrichedColumn column{*meta, schema.find_table(ref.table_name())->description, {}};
    c.for_each("names", [&](const JsonReader& n) {
      const std::string name_text = n.required_string("text");
      column.names.push_back(EnrichedName{name_text, normalize_name(name_text),
                                          parse_name_origin(n.required_string("origin")),
                                          static_cast<int>(n.integer_or("position", 1))});
    });
    if (column.names.empty() || column.names.back().origin != NameOrigin::kOriginal) {
      throw ParseError(c.where("names") + ": last entry must be the original name");
    }
    artifact.columns.push_back(std::move(column));
  });
  if (artifact.columns.size() != schema.column_count()) {
    throw StaleArtifactError(std::string(origin) + ": enrichment covers " +
                             std::to_string(artifact.columns.size()) + " columns, schema has " +
                             std::to_string(schema.column_count()));
  }
  return artifact;
}

}  // namespace schemamatch
