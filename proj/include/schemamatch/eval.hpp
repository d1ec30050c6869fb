#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "schemamatch/manifest.hpp"
#include "schemamatch/pipeline.hpp"
#include "schemamatch/schema.hpp"

namespace schemamatch {

// How source columns labeled NA (empty ground-truth set) count.
enum class NaPolicy {
  kExclude,  // left out of N
  kScore,    // counted; a hit (and recall 1) iff the prediction list is empty
};

// HitRate@K = (1/N) * sum_i 1{ f_K(s_i) ∩ GT(s_i) != ∅ }
// Throws MissingGroundTruthError for a prediction whose source has no
// ground-truth entry, ValidationError for k == 0. N == 0 gives 0.
double hit_rate_at_k(std::span<const RankedPrediction> predictions, const GroundTruth& gt, std::size_t k,
                     NaPolicy policy = NaPolicy::kExclude);

// Recall@K = (1/N) * sum_i |f_K(s_i) ∩ GT(s_i)| / |GT(s_i)|
// The sum is formed exactly over a common denominator and divided once, so
// the result does not depend on query order, and equals HitRate@K bit for
// bit when every ground-truth set is a singleton.
double recall_at_k(std::span<const RankedPrediction> predictions, const GroundTruth& gt, std::size_t k,
                   NaPolicy policy = NaPolicy::kExclude);

struct QueryResult {
  ColumnRef source;
  std::vector<ColumnRef> ground_truth;  // empty for NA
  std::vector<ColumnRef> predicted;     // first max(ks) entries
  bool counted;                         // false for NA under kExclude
  std::map<std::size_t, bool> hit;
  std::map<std::size_t, std::size_t> found;  // |f_K ∩ GT|
  std::map<std::size_t, double> recall;
};

struct MetricsReport {
  std::string dataset;
  std::size_t n_queries = 0;
  std::size_t excluded_na = 0;
  NaPolicy na_policy = NaPolicy::kExclude;
  bool multi_target = false;
  std::vector<std::size_t> ks;
  std::map<std::size_t, double> hit_rate;
  std::map<std::size_t, double> recall;
  std::vector<QueryResult> per_query;  // prediction order
};

MetricsReport evaluate_predictions(std::span<const RankedPrediction> predictions, const GroundTruth& gt,
                                   std::vector<std::size_t> ks, NaPolicy policy = NaPolicy::kExclude,
                                   std::string dataset = "");

// Throws SchemaMismatchError when the manifest and ground truth name
// different schemas.
MetricsReport evaluate_manifest(const RunManifest& manifest, const GroundTruth& gt, std::vector<std::size_t> ks,
                                NaPolicy policy = NaPolicy::kExclude);

// 0.8039 -> "80.39%"
std::string format_percent(double value);

struct ReportOptions {
  bool show_hit_rate = true;
  std::string note;  // printed under the table when non-empty
};

std::string render_report_table(const MetricsReport& report, const ReportOptions& options = {});

// JSON; `provenance` entries are copied into the document as-is.
std::string serialize_report(const MetricsReport& report, const ReportOptions& options,
                             const std::map<std::string, std::string>& provenance);

// Tab-separated, one row per query: source, ground truth, first two
// predictions, then hit and recall at each K.
std::string render_per_query_tsv(const MetricsReport& report);

// One row per labeled run, one column per K: "label  R@1 ..." used by the
// ablation sweep.
struct LabeledReport {
  std::string label;
  const MetricsReport* report;
};
std::string render_comparison_table(const std::vector<LabeledReport>& rows, bool show_hit_rate);

}  // namespace schemamatch
