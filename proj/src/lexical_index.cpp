#include "schemamatch/lexical_index.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "schemamatch/errors.hpp"
#include "schemamatch/json_util.hpp"

namespace schemamatch {

using nlohmann::json;

void Bm25Params::validate() const {
  if (!(k1 >= 0.0)) throw ConfigError("bm25 k1 must be non-negative");
  if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("bm25 b must lie in [0, 1]");
}

LexicalIndex LexicalIndex::build(std::vector<LexicalDoc> docs, Bm25Params params) {
  params.validate();
  if (docs.empty()) throw EmptyCorpusError("cannot build a lexical index over zero documents");
  LexicalIndex index;
  index.params_ = params;
  index.docs_ = std::move(docs);

  const auto n = index.docs_.size();
  std::size_t total_length = 0;
  for (std::size_t d = 0; d < n; ++d) {
    const auto& doc = index.docs_[d];
    if (doc.doc_id != d) {
      throw ValidationError("lexical doc ids must be dense: position " + std::to_string(d) + " has id " +
                            std::to_string(doc.doc_id));
    }
    total_length += doc.name.tokens.tokens.size();
    std::map<std::string_view, std::uint32_t> tf;
    for (const auto& t : doc.name.tokens.tokens) ++tf[t];
    for (const auto& [term, count] : tf) {
      index.postings_[std::string(term)].postings.push_back({static_cast<std::uint32_t>(d), count});
    }
  }
  index.avgdl_ = static_cast<double>(total_length) / static_cast<double>(n);

  const double k1 = params.k1;
  const double b = params.b;
  index.length_norm_.resize(n);
  for (std::size_t d = 0; d < n; ++d) {
    const auto dl = static_cast<double>(index.docs_[d].name.tokens.tokens.size());
    // An all-empty corpus has avgdl 0; no document can match, so any finite
    // value works.
    index.length_norm_[d] = index.avgdl_ > 0.0 ? k1 * (1.0 - b + b * dl / index.avgdl_) : k1;
  }
  const auto N = static_cast<double>(n);
  for (auto& [term, entry] : index.postings_) {
    const auto df = static_cast<double>(entry.postings.size());
    entry.idf = std::log(1.0 + (N - df + 0.5) / (df + 0.5));
  }
  return index;
}

std::vector<LexicalHit> LexicalIndex::search(std::span<const std::string> query_tokens, std::size_t top_k,
                                             double threshold) const {
  std::vector<double> acc(docs_.size(), 0.0);
  std::vector<std::uint32_t> touched;
  const double k1 = params_.k1;
  for (const auto& term : query_tokens) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const double idf = it->second.idf;
    for (const auto& p : it->second.postings) {
      const auto tf = static_cast<double>(p.tf);
      if (acc[p.doc] == 0.0) touched.push_back(p.doc);
      acc[p.doc] += idf * (tf * (k1 + 1.0)) / (tf + length_norm_[p.doc]);
    }
  }
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

  std::vector<LexicalHit> hits;
  for (auto d : touched) {
    if (acc[d] >= threshold) hits.push_back({docs_[d].target, acc[d], d});
  }
  auto order = [](const LexicalHit& a, const LexicalHit& b) {
    if (a.score != b.score) return a.score > b.score;
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

std::size_t LexicalIndex::document_frequency(std::string_view term) const {
  auto it = postings_.find(std::string(term));
  return it == postings_.end() ? 0 : it->second.postings.size();
}

double LexicalIndex::idf(std::string_view term) const {
  auto it = postings_.find(std::string(term));
  if (it != postings_.end()) return it->second.idf;
  const auto N = static_cast<double>(docs_.size());
  return std::log(1.0 + (N + 0.5) / 0.5);
}

std::string serialize_lexical_index(const LexicalIndex& index, std::string_view config_hash) {
  json vocabulary = json::object();
  for (const auto& doc : index.docs()) {
    for (const auto& t : doc.name.tokens.tokens) {
      if (!vocabulary.contains(t)) vocabulary[t] = index.document_frequency(t);
    }
  }
  json docs = json::array();
  for (const auto& d : index.docs()) {
    docs.push_back({{"id", d.doc_id},
                    {"table", d.target.table_name()},
                    {"column", d.target.column_name()},
                    {"text", d.name.text},
                    {"origin", to_string(d.name.origin)},
                    {"position", d.name.position},
                    {"tokens", d.name.tokens.tokens}});
  }
  json doc{{"format", "schemamatch.lexical-index"},
           {"version", 1},
           {"config_hash", config_hash},
           {"params", {{"k1", index.params().k1}, {"b", index.params().b}}},
           {"stats", {{"documents", index.size()}, {"avgdl", index.average_length()}, {"vocabulary", vocabulary}}},
           {"docs", std::move(docs)}};
  return doc.dump(2) + "\n";
}

LexicalIndexArtifact parse_lexical_index(std::string_view text, std::string_view origin) {
  const json doc = parse_json_document(text, origin);
  JsonReader root(doc, std::string(origin));
  if (root.required_string("format") != "schemamatch.lexical-index" || root.integer_or("version", 0) != 1) {
    throw ParseError(std::string(origin) + ": not a version 1 lexical index artifact");
  }
  const JsonReader params = root.object("params");
  Bm25Params p{params.number_or("k1", 1.2), params.number_or("b", 0.75)};

  std::vector<LexicalDoc> docs;
  root.for_each("docs", [&](const JsonReader& d) {
    const std::string name_text = d.required_string("text");
    EnrichedName name{name_text, normalize_name(name_text), parse_name_origin(d.required_string("origin")),
                      static_cast<int>(d.integer_or("position", 1))};
    const auto& stored = d.node().at("tokens");
    if (stored != json(name.tokens.tokens)) {
      throw ParseError(d.where("tokens") + ": tokens disagree with the normalized text");
    }
    docs.push_back(LexicalDoc{static_cast<std::size_t>(d.integer_or("id", -1)),
                              ColumnRef(d.required_string("table"), d.required_string("column")), std::move(name)});
  });
  LexicalIndex index = LexicalIndex::build(std::move(docs), p);

  const JsonReader stats = root.object("stats");
  if (static_cast<std::size_t>(stats.integer_or("documents", -1)) != index.size() ||
      std::abs(stats.number_or("avgdl", -1.0) - index.average_length()) > 1e-12) {
    throw ParseError(std::string(origin) + ": stored statistics do not match the doc table");
  }
  const auto& vocabulary = stats.node().at("vocabulary");
  if (vocabulary.size() != index.vocabulary_size()) {
    throw ParseError(std::string(origin) + ": stored vocabulary does not match the doc table");
  }
  for (const auto& [term, df] : vocabulary.items()) {
    if (df.get<std::size_t>() != index.document_frequency(term)) {
      throw ParseError(std::string(origin) + ": document frequency of '" + term + "' does not match");
    }
  }
  return {std::move(index), root.required_string("config_hash")};
}

}  // namespace schemamatch
