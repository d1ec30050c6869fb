#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "schemamatch/enrich.hpp"
#include "schemamatch/schema.hpp"

namespace schemamatch {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  void validate() const;  // k1 >= 0, 0 <= b <= 1; throws ConfigError
};

// One document per (target column, enriched name).
struct LexicalDoc {
  std::size_t doc_id;
  ColumnRef target;
  EnrichedName name;
};

struct LexicalHit {
  ColumnRef target;
  double score;
  std::size_t matched_doc;
};

// Immutable BM25 index over tokenized names. Scoring:
//
//   idf(t)      = ln(1 + (N - df(t) + 0.5) / (df(t) + 0.5))
//   score(q, d) = sum over query tokens t (repeats counted) of
//                 idf(t) * tf(t,d) * (k1 + 1) / (tf(t,d) + k1 * (1 - b + b * |d| / avgdl))
//
// idf is never negative, so neither is any score.
class LexicalIndex {
 public:
  // doc_ids must equal positions 0..n-1. Throws EmptyCorpusError.
  static LexicalIndex build(std::vector<LexicalDoc> docs, Bm25Params params = {});

  // Hits with score >= threshold, sorted by score descending then doc_id
  // ascending, at most top_k of them.
  std::vector<LexicalHit> search(std::span<const std::string> query_tokens, std::size_t top_k = 50,
                                 double threshold = 1.0) const;

  std::size_t size() const noexcept { return docs_.size(); }
  const std::vector<LexicalDoc>& docs() const noexcept { return docs_; }
  const Bm25Params& params() const noexcept { return params_; }
  double average_length() const noexcept { return avgdl_; }
  std::size_t document_frequency(std::string_view term) const;
  std::size_t document_length(std::size_t doc_id) const { return docs_.at(doc_id).name.tokens.tokens.size(); }
  double idf(std::string_view term) const;
  std::size_t vocabulary_size() const noexcept { return postings_.size(); }

 private:
  struct Posting {
    std::uint32_t doc;
    std::uint32_t tf;
  };
  struct Term {
    double idf;
    std::vector<Posting> postings;
  };

  std::vector<LexicalDoc> docs_;
  Bm25Params params_;
  double avgdl_ = 0.0;
  std::vector<double> length_norm_;  // k1 * (1 - b + b * |d| / avgdl)
  std::unordered_map<std::string, Term> postings_;
};

inline std::vector<LexicalHit> lexical_search(const LexicalIndex& index, const TokenizedName& query,
                                              std::size_t top_k = 50, double threshold = 1.0) {
  return index.search(query.tokens, top_k, threshold);
}

struct LexicalIndexArtifact {
  LexicalIndex index;
  std::string config_hash;
};

// Structured-text (JSON) artifact: params, vocabulary statistics, doc table.
std::string serialize_lexical_index(const LexicalIndex& index, std::string_view config_hash);
// Rebuilds the index from the doc table and checks it against the stored
// statistics. Throws ParseError on any disagreement.
LexicalIndexArtifact parse_lexical_index(std::string_view text, std::string_view origin = "<memory>");

}  // namespace schemamatch
