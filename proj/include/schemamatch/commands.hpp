#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "schemamatch/config.hpp"
#include "schemamatch/manifest.hpp"
#include "schemamatch/mock_providers.hpp"
#include "schemamatch/pipeline.hpp"

namespace schemamatch {

inline constexpr const char* kEnrichmentArtifact = "target.enrichment.json";
inline constexpr const char* kLexicalArtifact = "target.lexical.json";
inline constexpr const char* kVectorArtifact = "target.vectors.bin";

struct Providers {
  std::shared_ptr<const MockLexicon> lexicon;  // mock only
  std::shared_ptr<GenerationProvider> llm;
  std::shared_ptr<EmbeddingProvider> embedder;
};

// Mock or HTTP providers per config, wrapped in the response cache when
// cache_dir is set.
Providers make_providers(const RunConfig& config);

struct IndexResult {
  std::string index_hash;
  bool rebuilt;  // false when matching artifacts were already present
  std::size_t document_count;
};

// Enriches and indexes the target schema in memory.
TargetIndex index_target_schema(const RunConfig& config, const SchemaDef& target, Providers& providers);

// Writes the three target artifacts, stamped with the index hash. Artifacts
// already carrying the current hash are left alone unless `rebuild`.
IndexResult cmd_index(const RunConfig& config, Providers& providers, bool rebuild = false);

// Reads the artifacts back. Throws StaleArtifactError when they are missing
// or carry a different index hash.
TargetIndex load_target_index(const RunConfig& config, const SchemaDef& target, Providers& providers);

struct MatchOptions {
  bool rebuild = false;
  bool needle = false;
  std::string label;  // manifest file name suffix; empty for the default
};

std::filesystem::path manifest_path(const RunConfig& config, const MatchOptions& options);

// Runs matching and writes the manifest; returns it.
RunManifest cmd_match(const RunConfig& config, Providers& providers, const MatchOptions& options);

struct EvaluateOptions {
  bool force = false;  // report hit rate even for m:n ground truth
};

struct EvaluateResult {
  MetricsReport report;
  ReportOptions rendering;
  std::string table;
  std::filesystem::path report_path;
};

// Evaluates a manifest against the configured ground truth and writes
// <manifest>.report.json, .report.txt and .per_query.tsv beside it.
// Throws SchemaMismatchError when the manifest was produced from other
// schemas than the configured ones.
EvaluateResult cmd_evaluate(const RunConfig& config, const std::filesystem::path& manifest_file,
                            const EvaluateOptions& options);

// Full pipeline plus each single-component removal; writes a manifest and
// report per run and a comparison table (ablation.txt / ablation.json).
std::string cmd_ablate(const RunConfig& config, Providers& providers, const EvaluateOptions& options);

// Parses the command line, runs the subcommand and maps errors onto exit
// codes: 0 success, 1 validation, 2 provider, 3 evaluation mismatch.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace schemamatch
