#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "schemamatch/enrich.hpp"
#include "schemamatch/lexical_index.hpp"
#include "schemamatch/providers.hpp"
#include "schemamatch/schema.hpp"
#include "schemamatch/vector_index.hpp"

namespace schemamatch {

struct RetrievalConfig {
  std::size_t top_k = 50;
  double cosine_threshold = 0.5;
  double bm25_threshold = 1.0;
  bool use_vector = true;
  bool use_lexical = true;
  Bm25Params bm25;

  // Throws ConfigError; at least one channel must be enabled.
  void validate() const;
};

// Each flag is true when the component runs; removing a component for an
// ablation sets its flag to false.
struct AblationFlags {
  bool query_enrichment = true;
  bool document_enrichment = true;
  bool name_expansion_prompt = true;
  bool embedding_search = true;
  bool fulltext_search = true;
  bool table_selection = true;

  static constexpr std::array<std::string_view, 6> kNames = {
      "query_enrichment", "document_enrichment", "name_expansion_prompt",
      "embedding_search", "fulltext_search",     "table_selection"};

  // Throws ConfigError for an unknown name.
  bool& flag(std::string_view name);
  bool flag(std::string_view name) const;

  friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

// Enrichment settings for one side after the ablation flags are applied.
struct SideEnrichment {
  EnrichmentConfig config;
  bool enabled;
};
SideEnrichment document_side(const EnrichmentConfig& config, const AblationFlags& flags);
SideEnrichment query_side(const EnrichmentConfig& config, const AblationFlags& flags);
RetrievalConfig effective_retrieval(RetrievalConfig retrieval, const AblationFlags& flags);

struct NameMatch {
  EnrichedName source;
  EnrichedName target;

  friend bool operator==(const NameMatch&, const NameMatch&) = default;
};

struct ScoredCandidate {
  ColumnRef target;
  std::optional<double> best_lexical_score;
  std::optional<double> best_vector_similarity;
  std::vector<NameMatch> matched_names;
};

// Sorts by the better of the two channel scores, each divided by the best
// score of its channel in `candidates`; ties by ColumnRef. This is the
// order used whenever the LLM gives no ranking.
void sort_by_retrieval_score(std::vector<ScoredCandidate>& candidates);

struct RankedPrediction {
  ColumnRef source;
  std::vector<ColumnRef> ranked_targets;  // no duplicates

  // f_K: the first k targets.
  std::vector<ColumnRef> top(std::size_t k) const;
};

// Target-side artifacts: enrichment plus the two indexes sharing one doc
// table (doc i is name i in enrichment order).
struct TargetIndex {
  SchemaDef schema;
  EnrichmentArtifact enrichment;
  LexicalIndex lexical;
  VectorIndex vector;
};

TargetIndex build_target_index(SchemaDef schema, EnrichmentArtifact enrichment, const Bm25Params& bm25,
                               EmbeddingProvider& embedder);

// Text embedded for a name: its normalized tokens joined by spaces, or the
// raw text when normalization leaves nothing.
std::string embedding_text(const EnrichedName& name);

// Runs lexical search on each source name's tokens and vector search on its
// embedding (per enabled channel) and merges hits per target column,
// keeping the best score per channel. Sorted by sort_by_retrieval_score.
std::vector<ScoredCandidate> retrieve_candidates(const EnrichedColumn& source, const TargetIndex& target,
                                                 const RetrievalConfig& config, EmbeddingProvider& embedder);

std::string build_table_selection_prompt(const TableMeta& source_table, const ColumnMeta& source_column,
                                         const std::vector<ScoredCandidate>& candidates,
                                         const SchemaDef& target_schema);

// Keeps candidates whose table the LLM selects. Never adds candidates.
// An empty or unusable selection leaves the list unchanged.
std::vector<ScoredCandidate> select_tables(const TableMeta& source_table, const ColumnMeta& source_column,
                                           std::vector<ScoredCandidate> candidates,
                                           const SchemaDef& target_schema, GenerationProvider& llm);

// Candidates in the order shown to the ranking LLM: sorted by ColumnRef,
// then shuffled with a seed derived from the source column.
std::vector<const ScoredCandidate*> presentation_order(const ColumnRef& source,
                                                       const std::vector<ScoredCandidate>& candidates);

std::string build_ranking_prompt(const EnrichedColumn& source, const std::vector<ScoredCandidate>& candidates,
                                 const EnrichmentArtifact& target_enrichment);

// Total order over the candidates: entries the LLM ranked (matched back by
// table and column), then the rest by retrieval score. An unusable reply
// falls back to retrieval-score order.
RankedPrediction rank_candidates(const EnrichedColumn& source, std::vector<ScoredCandidate> candidates,
                                 const EnrichmentArtifact& target_enrichment, GenerationProvider& llm);

struct NeedleOptions {
  std::size_t top_k = 10;
  std::size_t context_budget_tokens = 100000;  // estimated as characters / 4
};

std::string build_needle_prompt(const ColumnMeta& source, const TableMeta& source_table,
                                const SchemaDef& target_schema, std::size_t top_k);

// Retrieval-free baseline: the whole target schema in one ranking prompt.
// Throws ContextBudgetError; an unusable reply yields an empty prediction.
RankedPrediction needle_in_the_stack(const ColumnMeta& source, const TableMeta& source_table,
                                     const SchemaDef& target_schema, GenerationProvider& llm,
                                     const NeedleOptions& options = {});

struct ColumnFailure {
  ColumnRef source;
  std::string error;
};

struct MatchRun {
  std::vector<RankedPrediction> predictions;  // source schema order
  std::vector<ColumnFailure> failures;
};

struct MatchSettings {
  EnrichmentConfig enrichment;
  RetrievalConfig retrieval;
  AblationFlags flags;
  std::size_t emit_k = 10;
  std::size_t parallelism = 4;
};

// Enrich, retrieve, select tables, rank, for every source column. A failing
// column is reported in `failures` with an empty prediction.
MatchRun match_schema(const SchemaDef& source, const TargetIndex& target, const MatchSettings& settings,
                      GenerationProvider& llm, EmbeddingProvider& embedder);

MatchRun run_needle_baseline(const SchemaDef& source, const SchemaDef& target, GenerationProvider& llm,
                             const NeedleOptions& options, std::size_t parallelism);

}  // namespace schemamatch
