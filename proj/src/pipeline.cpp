#include "schemamatch/pipeline.hpp"

#include <algorithm>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "schemamatch/errors.hpp"
#include "schemamatch/hashing.hpp"
#include "schemamatch/parallel.hpp"
#include "schemamatch/prompts.hpp"

namespace schemamatch {

void RetrievalConfig::validate() const {
  bm25.validate();
  if (top_k == 0) throw ConfigError("retrieval top_k must be positive");
  if (!(cosine_threshold >= -1.0 && cosine_threshold <= 1.0)) {
    throw ConfigError("cosine threshold must lie in [-1, 1]");
  }
  if (!(bm25_threshold >= 0.0)) throw ConfigError("BM25 threshold must be non-negative");
  if (!use_vector && !use_lexical) {
    throw ConfigError("at least one of embedding_search and fulltext_search must stay enabled");
  }
}

bool& AblationFlags::flag(std::string_view name) {
  if (name == "query_enrichment") return query_enrichment;
  if (name == "document_enrichment") return document_enrichment;
  if (name == "name_expansion_prompt") return name_expansion_prompt;
  if (name == "embedding_search") return embedding_search;
  if (name == "fulltext_search") return fulltext_search;
  if (name == "table_selection") return table_selection;
  throw ConfigError("unknown ablation flag '" + std::string(name) + "'");
}

bool AblationFlags::flag(std::string_view name) const {
  return const_cast<AblationFlags*>(this)->flag(name);
}

SideEnrichment document_side(const EnrichmentConfig& config, const AblationFlags& flags) {
  SideEnrichment side{config, flags.document_enrichment};
  side.config.use_expansion_prompt = config.use_expansion_prompt && flags.name_expansion_prompt;
  side.enabled = side.enabled && (side.config.use_expansion_prompt || side.config.use_cross_terminology_prompt);
  return side;
}

SideEnrichment query_side(const EnrichmentConfig& config, const AblationFlags& flags) {
  SideEnrichment side{config, flags.query_enrichment};
  side.config.use_expansion_prompt = config.use_expansion_prompt && flags.name_expansion_prompt;
  side.enabled = side.enabled && (side.config.use_expansion_prompt || side.config.use_cross_terminology_prompt);
  return side;
}

RetrievalConfig effective_retrieval(RetrievalConfig retrieval, const AblationFlags& flags) {
  retrieval.use_vector = retrieval.use_vector && flags.embedding_search;
  retrieval.use_lexical = retrieval.use_lexical && flags.fulltext_search;
  return retrieval;
}

void sort_by_retrieval_score(std::vector<ScoredCandidate>& candidates) {
  double max_lex = 0.0;
  double max_vec = 0.0;
  for (const auto& c : candidates) {
    if (c.best_lexical_score) max_lex = std::max(max_lex, *c.best_lexical_score);
    if (c.best_vector_similarity) max_vec = std::max(max_vec, *c.best_vector_similarity);
  }
  auto fused = [&](const ScoredCandidate& c) {
    double s = 0.0;
    if (c.best_lexical_score && max_lex > 0.0) s = std::max(s, *c.best_lexical_score / max_lex);
    if (c.best_vector_similarity && max_vec > 0.0) s = std::max(s, *c.best_vector_similarity / max_vec);
    return s;
  };
  std::vector<std::pair<double, std::size_t>> keys;
  keys.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) keys.emplace_back(fused(candidates[i]), i);
  std::sort(keys.begin(), keys.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return candidates[a.second].target < candidates[b.second].target;
  });
  std::vector<ScoredCandidate> sorted;
  sorted.reserve(candidates.size());
  for (const auto& k : keys) sorted.push_back(std::move(candidates[k.second]));
  candidates = std::move(sorted);
}

std::vector<ColumnRef> RankedPrediction::top(std::size_t k) const {
  const auto n = std::min(k, ranked_targets.size());
  return {ranked_targets.begin(), ranked_targets.begin() + static_cast<std::ptrdiff_t>(n)};
}

std::string embedding_text(const EnrichedName& name) {
  return name.tokens.tokens.empty() ? name.text : name.tokens.joined();
}

TargetIndex build_target_index(SchemaDef schema, EnrichmentArtifact enrichment, const Bm25Params& bm25,
                               EmbeddingProvider& embedder) {
  std::vector<LexicalDoc> lexical_docs;
  std::vector<std::string> texts;
  for (const auto& column : enrichment.columns) {
    for (const auto& name : column.names) {
      lexical_docs.push_back({lexical_docs.size(), column.meta.ref, name});
      texts.push_back(embedding_text(name));
    }
  }
  if (lexical_docs.empty()) throw EmptyCorpusError("target schema has no names to index");
  auto vectors = embedder.embed(texts);
  if (vectors.size() != texts.size()) {
    throw ProviderError("embedding provider returned " + std::to_string(vectors.size()) + " vectors for " +
                        std::to_string(texts.size()) + " texts");
  }
  std::vector<VectorDoc> vector_docs;
  vector_docs.reserve(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    vector_docs.push_back({i, lexical_docs[i].target, lexical_docs[i].name, std::move(vectors[i])});
  }
  auto lexical = LexicalIndex::build(std::move(lexical_docs), bm25);
  auto vector = VectorIndex::build(std::move(vector_docs));
  return TargetIndex{std::move(schema), std::move(enrichment), std::move(lexical), std::move(vector)};
}

namespace {

struct CandidateSet {
  std::vector<ScoredCandidate> items;
  std::unordered_map<ColumnRef, std::size_t, ColumnRefHash> at;

  ScoredCandidate& get(const ColumnRef& ref) {
    auto [it, inserted] = at.emplace(ref, items.size());
    if (inserted) items.push_back(ScoredCandidate{ref, std::nullopt, std::nullopt, {}});
    return items[it->second];
  }
};

void add_match(ScoredCandidate& c, const EnrichedName& source, const EnrichedName& target) {
  NameMatch m{source, target};
  if (std::find(c.matched_names.begin(), c.matched_names.end(), m) == c.matched_names.end()) {
    c.matched_names.push_back(std::move(m));
  }
}

std::string table_line(const TableMeta& t) { return "- " + t.name + ": " + or_placeholder(t.description); }

}  // namespace

std::vector<ScoredCandidate> retrieve_candidates(const EnrichedColumn& source, const TargetIndex& target,
                                                 const RetrievalConfig& config, EmbeddingProvider& embedder) {
  config.validate();
  CandidateSet set;
  if (config.use_lexical) {
    for (const auto& name : source.names) {
      for (const auto& hit : target.lexical.search(name.tokens.tokens, config.top_k, config.bm25_threshold)) {
        auto& c = set.get(hit.target);
        c.best_lexical_score = std::max(c.best_lexical_score.value_or(hit.score), hit.score);
        add_match(c, name, target.lexical.docs()[hit.matched_doc].name);
      }
    }
  }
  if (config.use_vector) {
    std::vector<std::string> texts;
    for (const auto& name : source.names) texts.push_back(embedding_text(name));
    const auto vectors = embedder.embed(texts);
    if (vectors.size() != texts.size()) throw ProviderError("embedding provider returned a short batch");
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      for (const auto& hit : target.vector.search(vectors[i], config.top_k, config.cosine_threshold)) {
        auto& c = set.get(hit.target);
        c.best_vector_similarity = std::max(c.best_vector_similarity.value_or(hit.similarity), hit.similarity);
        add_match(c, source.names[i], target.vector.entries()[hit.matched_doc].name);
      }
    }
  }
  sort_by_retrieval_score(set.items);
  return std::move(set.items);
}

std::string build_table_selection_prompt(const TableMeta& source_table, const ColumnMeta& source_column,
                                         const std::vector<ScoredCandidate>& candidates,
                                         const SchemaDef& target_schema) {
  std::string tables;
  std::vector<std::string> seen;
  for (const auto& c : candidates) {
    if (std::find(seen.begin(), seen.end(), c.target.table_key()) != seen.end()) continue;
    seen.push_back(c.target.table_key());
    const auto* t = target_schema.find_table(c.target.table_name());
    if (!t) throw UnknownColumnError("candidate table '" + c.target.table_name() + "' is not in the target schema");
    tables += table_line(*t) + "\n";
  }
  if (!tables.empty()) tables.pop_back();
  return render_template(prompt_template(PromptTemplate::kTableSelection),
                         {{"source_table", source_table.name},
                          {"source_table_description", or_placeholder(source_table.description)},
                          {"source_column", source_column.ref.column_name()},
                          {"source_column_description", or_placeholder(source_column.description)},
                          {"tables", tables}});
}

std::vector<ScoredCandidate> select_tables(const TableMeta& source_table, const ColumnMeta& source_column,
                                           std::vector<ScoredCandidate> candidates,
                                           const SchemaDef& target_schema, GenerationProvider& llm) {
  if (candidates.empty()) return candidates;
  const auto prompt = build_table_selection_prompt(source_table, source_column, candidates, target_schema);
  std::vector<std::string> chosen;
  try {
    chosen = generate_list(llm, prompt, "tables");
  } catch (const ParseError& e) {
    spdlog::warn("table selection for {}: {}; keeping all candidates", source_column.ref.display(), e.what());
    return candidates;
  }
  std::unordered_set<std::string> keys;
  for (const auto& name : chosen) keys.insert(fold_case(trim(name)));
  std::vector<ScoredCandidate> kept;
  for (auto& c : candidates) {
    if (keys.count(c.target.table_key())) kept.push_back(std::move(c));
  }
  if (kept.empty()) {
    // Nothing usable was selected; removing every candidate would only
    // guarantee a miss.
    return candidates;
  }
  return kept;
}

std::vector<const ScoredCandidate*> presentation_order(const ColumnRef& source,
                                                       const std::vector<ScoredCandidate>& candidates) {
  std::vector<const ScoredCandidate*> order;
  for (const auto& c : candidates) order.push_back(&c);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->target < b->target; });
  // Fisher-Yates written out so the order does not depend on the standard
  // library's shuffle.
  std::mt19937_64 rng(fnv1a64(source.canonical()));
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

namespace {

std::string join_names(const std::vector<EnrichedName>& names) {
  std::string out;
  for (const auto& n : names) {
    if (!out.empty()) out += "; ";
    out += n.text;
  }
  return out;
}

// Maps "TABLE.column" (possibly followed by " | ...") back to a ref.
std::optional<ColumnRef> parse_ref(std::string_view item) {
  item = trim(item.substr(0, item.find(" |")));
  const auto dot = item.find('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == item.size()) return std::nullopt;
  try {
    return ColumnRef(item.substr(0, dot), item.substr(dot + 1));
  } catch (const ValidationError&) {
    return std::nullopt;
  }
}

std::vector<ColumnRef> refs_in_order(const std::vector<std::string>& items,
                                     const std::unordered_set<ColumnRef, ColumnRefHash>& allowed) {
  std::vector<ColumnRef> out;
  std::unordered_set<ColumnRef, ColumnRefHash> seen;
  for (const auto& item : items) {
    auto ref = parse_ref(item);
    if (!ref || !allowed.count(*ref) || !seen.insert(*ref).second) continue;
    out.push_back(std::move(*ref));
  }
  return out;
}

}  // namespace

std::string build_ranking_prompt(const EnrichedColumn& source, const std::vector<ScoredCandidate>& candidates,
                                 const EnrichmentArtifact& target_enrichment) {
  std::string lines;
  for (const auto* c : presentation_order(source.meta.ref, candidates)) {
    const auto* col = target_enrichment.find(c->target);
    if (!col) throw UnknownColumnError("candidate '" + c->target.display() + "' has no enrichment record");
    lines += "- " + col->meta.ref.display() + " | names: " + join_names(col->names) +
             " | table: " + col->meta.ref.table_name() + "\n";
  }
  if (!lines.empty()) lines.pop_back();
  return render_template(prompt_template(PromptTemplate::kRanking),
                         {{"source_table", source.meta.ref.table_name()},
                          {"source_table_description", or_placeholder(source.table_description)},
                          {"source_column", source.meta.ref.column_name()},
                          {"source_column_description", or_placeholder(source.meta.description)},
                          {"source_names", join_names(source.names)},
                          {"candidates", lines}});
}

RankedPrediction rank_candidates(const EnrichedColumn& source, std::vector<ScoredCandidate> candidates,
                                 const EnrichmentArtifact& target_enrichment, GenerationProvider& llm) {
  sort_by_retrieval_score(candidates);
  RankedPrediction out{source.meta.ref, {}};
  if (candidates.size() > 1) {
    const auto prompt = build_ranking_prompt(source, candidates, target_enrichment);
    std::unordered_set<ColumnRef, ColumnRefHash> allowed;
    for (const auto& c : candidates) allowed.insert(c.target);
    try {
      out.ranked_targets = refs_in_order(generate_list(llm, prompt, "ranking"), allowed);
    } catch (const ParseError& e) {
      spdlog::warn("ranking for {}: {}; using retrieval order", source.meta.ref.display(), e.what());
    }
  }
  std::unordered_set<ColumnRef, ColumnRefHash> placed(out.ranked_targets.begin(), out.ranked_targets.end());
  for (const auto& c : candidates) {
    if (!placed.count(c.target)) out.ranked_targets.push_back(c.target);
  }
  return out;
}

std::string build_needle_prompt(const ColumnMeta& source, const TableMeta& source_table,
                                const SchemaDef& target_schema, std::size_t top_k) {
  std::string lines;
  for (const auto& t : target_schema.tables()) {
    for (const auto& c : t.columns) {
      lines += "- " + c.ref.display() + " | table: " + t.name + " | table description: " +
               or_placeholder(t.description) + " | description: " + or_placeholder(c.description) + "\n";
    }
  }
  if (!lines.empty()) lines.pop_back();
  return render_template(prompt_template(PromptTemplate::kNeedle),
                         {{"top_k", std::to_string(top_k)},
                          {"source_table", source_table.name},
                          {"source_table_description", or_placeholder(source_table.description)},
                          {"source_column", source.ref.column_name()},
                          {"source_column_description", or_placeholder(source.description)},
                          {"source_names", source.ref.column_name()},
                          {"candidates", lines}});
}

RankedPrediction needle_in_the_stack(const ColumnMeta& source, const TableMeta& source_table,
                                     const SchemaDef& target_schema, GenerationProvider& llm,
                                     const NeedleOptions& options) {
  if (options.top_k == 0) throw ConfigError("needle top_k must be positive");
  const auto prompt = build_needle_prompt(source, source_table, target_schema, options.top_k);
  const auto estimate = (prompt.size() + 3) / 4;
  if (estimate > options.context_budget_tokens) {
    throw ContextBudgetError("needle prompt for " + source.ref.display() + " needs about " +
                             std::to_string(estimate) + " tokens; budget is " +
                             std::to_string(options.context_budget_tokens));
  }
  std::unordered_set<ColumnRef, ColumnRefHash> allowed;
  for (const auto* c : target_schema.columns()) allowed.insert(c->ref);
  RankedPrediction out{source.ref, {}};
  try {
    out.ranked_targets = refs_in_order(generate_list(llm, prompt, "ranking"), allowed);
  } catch (const ParseError& e) {
    spdlog::warn("needle ranking for {}: {}; empty prediction", source.ref.display(), e.what());
  }
  if (out.ranked_targets.size() > options.top_k) out.ranked_targets.erase(out.ranked_targets.begin() + static_cast<std::ptrdiff_t>(options.top_k), out.ranked_targets.end());
  return out;
}

namespace {

struct SourceItem {
  const TableMeta* table;
  const ColumnMeta* column;
};

std::vector<SourceItem> source_items(const SchemaDef& source) {
  std::vector<SourceItem> items;
  for (const auto& t : source.tables()) {
    for (const auto& c : t.columns) items.push_back({&t, &c});
  }
  return items;
}

template <class Fn>
MatchRun run_per_column(const SchemaDef& source, std::size_t parallelism, Fn&& fn) {
  const auto items = source_items(source);
  std::vector<RankedPrediction> predictions(items.size(), RankedPrediction{items.front().column->ref, {}});
  std::vector<std::optional<std::string>> errors(items.size());
  parallel_for(items.size(), parallelism, [&](std::size_t i) {
    try {
      predictions[i] = fn(*items[i].table, *items[i].column);
    } catch (const ContextBudgetError&) {
      throw;
    } catch (const Error& e) {
      predictions[i] = RankedPrediction{items[i].column->ref, {}};
      errors[i] = e.what();
    }
  });
  MatchRun run;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (errors[i]) {
      spdlog::warn("{}: {}", items[i].column->ref.display(), *errors[i]);
      run.failures.push_back({items[i].column->ref, *errors[i]});
    }
    run.predictions.push_back(std::move(predictions[i]));
  }
  return run;
}

}  // namespace

MatchRun match_schema(const SchemaDef& source, const TargetIndex& target, const MatchSettings& settings,
                      GenerationProvider& llm, EmbeddingProvider& embedder) {
  settings.enrichment.validate();
  const auto retrieval = effective_retrieval(settings.retrieval, settings.flags);
  retrieval.validate();
  if (settings.emit_k == 0) throw ConfigError("emit_k must be positive");
  const auto side = query_side(settings.enrichment, settings.flags);
  return run_per_column(source, settings.parallelism, [&](const TableMeta& table, const ColumnMeta& column) {
    const auto query = side.enabled ? enrich_column(column, table, side.config, llm) : original_only(column, table);
    auto candidates = retrieve_candidates(query, target, retrieval, embedder);
    if (settings.flags.table_selection) {
      candidates = select_tables(table, column, std::move(candidates), target.schema, llm);
    }
    auto ranked = rank_candidates(query, std::move(candidates), target.enrichment, llm);
    if (ranked.ranked_targets.size() > settings.emit_k) ranked.ranked_targets.erase(ranked.ranked_targets.begin() + static_cast<std::ptrdiff_t>(settings.emit_k), ranked.ranked_targets.end());
    return ranked;
  });
}

MatchRun run_needle_baseline(const SchemaDef& source, const SchemaDef& target, GenerationProvider& llm,
                             const NeedleOptions& options, std::size_t parallelism) {
  return run_per_column(source, parallelism, [&](const TableMeta& table, const ColumnMeta& column) {
    return needle_in_the_stack(column, table, target, llm, options);
  });
}

}  // namespace schemamatch
