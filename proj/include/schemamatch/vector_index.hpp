#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "schemamatch/enrich.hpp"
#include "schemamatch/providers.hpp"
#include "schemamatch/schema.hpp"

namespace schemamatch {

struct VectorDoc {
  std::size_t doc_id;
  ColumnRef target;
  EnrichedName name;
  EmbeddingVector vector;
};

struct VectorHit {
  ColumnRef target;
  double similarity;
  std::size_t matched_doc;
};

// Exact (flat) cosine-similarity index. Vectors are unit-normalized on the
// way in, and queries at search time, so similarity is a dot product.
class VectorIndex {
 public:
  struct Entry {
    std::size_t doc_id;
    ColumnRef target;
    EnrichedName name;
  };

  // doc_ids must equal positions 0..n-1. Throws EmptyCorpusError,
  // DimensionMismatchError, NormalizationError (zero vector).
  static VectorIndex build(std::vector<VectorDoc> docs);

  // Exhaustive scan. Hits with similarity >= threshold, sorted by similarity
  // descending then doc_id ascending, at most top_k. Throws
  // DimensionMismatchError.
  std::vector<VectorHit> search(const EmbeddingVector& query, std::size_t top_k = 50,
                                double threshold = 0.5) const;

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t dimension() const noexcept { return dimension_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::span<const double> vector(std::size_t doc_id) const;

 private:
  std::size_t dimension_ = 0;
  std::vector<Entry> entries_;
  std::vector<double> data_;  // row-major, size() x dimension()
};

inline std::vector<VectorHit> vector_search(const VectorIndex& index, const EmbeddingVector& query,
                                            std::size_t top_k = 50, double threshold = 0.5) {
  return index.search(query, top_k, threshold);
}

struct VectorIndexArtifact {
  VectorIndex index;
  std::string config_hash;
};

// Binary artifact; layout documented in docs/artifact-formats.md.
std::string serialize_vector_index(const VectorIndex& index, std::string_view config_hash);
VectorIndexArtifact parse_vector_index(std::string_view bytes, std::string_view origin = "<memory>");

}  // namespace schemamatch
