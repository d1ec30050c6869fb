#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "schemamatch/providers.hpp"

namespace schemamatch {

// Vocabulary knowledge shared by the offline mock backends: synonym groups
// (tokens that denote the same concept) and abbreviation expansions.
// The mock LLM knows both; the mock embedder knows only synonym groups.
class MockLexicon {
 public:
  struct Data {
    std::vector<std::vector<std::string>> synonym_groups;
    std::map<std::string, std::vector<std::string>> abbreviations;
  };

  explicit MockLexicon(Data data);

  static const MockLexicon& builtin();
  // JSON: {"synonyms": [["ward", "location"], ...], "abbreviations": {"loc": ["location"]}}
  static MockLexicon load(const std::filesystem::path& path);

  // Expansion phrases for an abbreviation token; empty if not one.
  std::span<const std::string> expansions(std::string_view token) const;
  // Group index of a token, also trying a naive singular ("patients").
  std::optional<std::size_t> group_of(std::string_view token) const;
  // Members of a synonym group in declared order.
  std::span<const std::string> group(std::size_t index) const { return data_.synonym_groups.at(index); }
  // Concept key: "#<group>" for grouped tokens, else the (singular) token.
  std::string concept_of(std::string_view token) const;
  // Concepts of a token list after expanding abbreviations (first expansion).
  std::vector<std::string> concepts(std::span<const std::string> tokens) const;

  const Data& data() const noexcept { return data_; }
  // Short content hash; part of the mock provider ids so cached replies
  // never cross lexicons.
  const std::string& fingerprint() const noexcept { return fingerprint_; }

 private:
  Data data_;
  std::unordered_map<std::string, std::size_t> group_index_;
  std::string fingerprint_;
};

struct MockLlmOptions {
  // Ranking prompts are only read this far; later candidates keep their
  // presented order. Models degrade this way when handed very long lists.
  std::size_t attention_span = 12;
};

// Rule-based stand-in for a chat model. Recognizes the task tag on the first
// line of each pipeline prompt and answers in the requested format:
//   name-expansion    abbreviation expansion plus table/description variants
//   cross-terminology synonym substitution avoiding the forbidden words
//   table-selection   tables with the largest concept overlap
//   ranking, needle   best concept Jaccard between any pair of names
// Deterministic: the reply is a pure function of the prompt.
class MockLlm final : public GenerationProvider {
 public:
  explicit MockLlm(const MockLexicon& lexicon = MockLexicon::builtin(), MockLlmOptions options = {});

  std::string id() const override;
  std::string generate(const GenerationRequest& request) override;

 private:
  const MockLexicon& lexicon_;
  MockLlmOptions options_;
};

// Embeds a text as the renormalized mean of per-token pseudo-random unit
// vectors seeded by the token's hash. Tokens in one synonym group share a
// concept component, so synonyms land close together.
class MockEmbedder final : public EmbeddingProvider {
 public:
  explicit MockEmbedder(std::size_t dimension = 384,
                        const MockLexicon& lexicon = MockLexicon::builtin(),
                        double concept_weight = 0.8);

  std::string id() const override;
  std::size_t dimension() const override { return dimension_; }
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;

  EmbeddingVector embed_one(std::string_view text) const;

 private:
  std::vector<double> seeded_unit(std::string_view seed) const;
  std::vector<double> token_vector(const std::string& token) const;

  std::size_t dimension_;
  const MockLexicon& lexicon_;
  double concept_weight_;
};

}  // namespace schemamatch
