#include "schemamatch/vector_index.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>

#include <json.hpp>

#include "schemamatch/errors.hpp"
#include "schemamatch/json_util.hpp"

namespace schemamatch {

VectorIndex VectorIndex::build(std::vector<VectorDoc> docs) {
  if (docs.empty()) throw EmptyCorpusError("cannot build a vector index over zero documents");
  VectorIndex index;
  index.dimension_ = docs.front().vector.dimension();
  index.entries_.reserve(docs.size());
  index.data_.reserve(docs.size() * index.dimension_);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    auto& doc = docs[d];
    if (doc.doc_id != d) {
      throw ValidationError("vector doc ids must be dense: position " + std::to_string(d) + " has id " +
                            std::to_string(doc.doc_id));
    }
    if (doc.vector.dimension() != index.dimension_) {
      throw DimensionMismatchError("vector doc " + std::to_string(d) + " has dimension " +
                                   std::to_string(doc.vector.dimension()) + ", index has " +
                                   std::to_string(index.dimension_));
    }
    const auto values = doc.vector.values();
    const auto unit = EmbeddingVector::unit(std::vector<double>(values.begin(), values.end()));
    index.data_.insert(index.data_.end(), unit.values().begin(), unit.values().end());
    index.entries_.push_back(Entry{doc.doc_id, std::move(doc.target), std::move(doc.name)});
  }
  return index;
}

std::span<const double> VectorIndex::vector(std::size_t doc_id) const {
  if (doc_id >= entries_.size()) throw ValidationError("vector doc id out of range");
  return std::span<const double>(data_).subspan(doc_id * dimension_, dimension_);
}

std::vector<VectorHit> VectorIndex::search(const EmbeddingVector& query, std::size_t top_k,
                                           double threshold) const {
  if (query.dimension() != dimension_) {
    throw DimensionMismatchError("query has dimension " + std::to_string(query.dimension()) +
                                 ", index has " + std::to_string(dimension_));
  }
  const auto raw = query.values();
  const auto q = EmbeddingVector::unit(std::vector<double>(raw.begin(), raw.end()));
  const double* qv = q.values().data();

  std::vector<VectorHit> hits;
  for (std::size_t d = 0; d < entries_.size(); ++d) {
    const double* row = data_.data() + d * dimension_;
    double s = 0.0;
    for (std::size_t i = 0; i < dimension_; ++i) s += qv[i] * row[i];
    if (s >= threshold) hits.push_back({entries_[d].target, s, d});
  }
  auto order = [](const VectorHit& a, const VectorHit& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.matched_doc < b.matched_doc;
  };
  if (hits.size() > top_k) {
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(top_k), hits.end(), order);
    hits.erase(hits.begin() + static_cast<std::ptrdiff_t>(top_k), hits.end());
  } else {
    std::sort(hits.begin(), hits.end(), order);
  }
  return hits;
}

namespace {

constexpr char kMagic[8] = {'S', 'M', 'V', 'E', 'C', 'I', 'D', 'X'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put_le(std::string& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  Reader(std::string_view bytes, std::string_view origin) : bytes_(bytes), origin_(origin) {}

  std::string_view take(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw ParseError(std::string(origin_) + ": truncated vector index");
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  template <class T>
  T get_le() {
    const auto s = take(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }
  double get_f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::string_view origin_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_vector_index(const VectorIndex& index, std::string_view config_hash) {
  nlohmann::json table = nlohmann::json::array();
  for (const auto& e : index.entries()) {
    table.push_back({{"id", e.doc_id},
                     {"table", e.target.table_name()},
                     {"column", e.target.column_name()},
                     {"text", e.name.text},
                     {"origin", to_string(e.name.origin)},
                     {"position", e.name.position}});
  }
  const std::string meta = table.dump();

  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(index.dimension()));
  put_le<std::uint64_t>(out, index.size());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(config_hash.size()));
  out.append(config_hash);
  put_le<std::uint64_t>(out, meta.size());
  out.append(meta);
  for (std::size_t d = 0; d < index.size(); ++d) {
    for (double v : index.vector(d)) put_f64(out, v);
  }
  return out;
}

VectorIndexArtifact parse_vector_index(std::string_view bytes, std::string_view origin) {
  Reader in(bytes, origin);
  if (in.take(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic))) {
    throw ParseError(std::string(origin) + ": not a vector index artifact");
  }
  if (in.get_le<std::uint32_t>() != kVersion) {
    throw ParseError(std::string(origin) + ": unsupported vector index version");
  }
  const auto dimension = in.get_le<std::uint32_t>();
  const auto count = in.get_le<std::uint64_t>();
  const std::string config_hash(in.take(in.get_le<std::uint32_t>()));
  const auto meta = parse_json_document(in.take(in.get_le<std::uint64_t>()), origin);
  if (!meta.is_array() || meta.size() != count || dimension == 0) {
    throw ParseError(std::string(origin) + ": doc table does not match the header");
  }
  std::vector<VectorDoc> docs;
  docs.reserve(count);
  for (std::size_t d = 0; d < count; ++d) {
    JsonReader row(meta[d], std::string(origin), "docs[" + std::to_string(d) + "]");
    const std::string text = row.required_string("text");
    std::vector<double> values(dimension);
    for (auto& v : values) v = in.get_f64();
    docs.push_back(VectorDoc{static_cast<std::size_t>(row.integer_or("id", -1)),
                             ColumnRef(row.required_string("table"), row.required_string("column")),
                             EnrichedName{text, normalize_name(text), parse_name_origin(row.required_string("origin")),
                                          static_cast<int>(row.integer_or("position", 1))},
                             EmbeddingVector(std::move(values))});
  }
  if (!in.done()) throw ParseError(std::string(origin) + ": trailing bytes after the vector block");
  return {VectorIndex::build(std::move(docs)), config_hash};
}

}  // namespace schemamatch
