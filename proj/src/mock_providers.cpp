#include "schemamatch/mock_providers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "schemamatch/errors.hpp"
#include "schemamatch/hashing.hpp"
#include "schemamatch/json_util.hpp"
#include "schemamatch/normalize.hpp"
#include "schemamatch/schema.hpp"

namespace schemamatch {
namespace {

const std::set<std::string, std::less<>>& stopwords() {
  static const std::set<std::string, std::less<>> words{
      "a",    "an",   "and",  "are",   "as",    "at",  "be",    "by",   "each", "for",
      "from", "in",   "into", "is",    "it",    "its", "of",    "on",   "or",   "per",
      "that", "the",  "their", "this", "to",    "was", "which", "who",  "whom", "with",
      "where", "when", "all", "any",  "given", "has", "have",  "been", "about"};
  return words;
}

std::string singular(std::string_view token) {
  if (token.size() > 4 && token.ends_with("ies")) return std::string(token.substr(0, token.size() - 3)) + "y";
  if (token.size() > 3 && token.ends_with('s') && !token.ends_with("ss") && !token.ends_with("us")) {
    return std::string(token.substr(0, token.size() - 1));
  }
  return std::string(token);
}

MockLexicon::Data builtin_data() {
  MockLexicon::Data d;
  d.synonym_groups = {
      {"patient", "person", "subject", "individual"},
      {"admission", "visit", "encounter", "hospitalization"},
      {"ward", "location", "site", "unit", "room"},
      {"identifier", "identification", "id", "key"},
      {"caregiver", "provider", "clinician", "practitioner", "staff"},
      {"birth", "born"},
      {"date", "datetime", "day"},
      {"time", "timestamp", "hour"},
      {"start", "begin", "onset", "admit"},
      {"end", "stop", "finish", "discharge"},
      {"gender", "sex"},
      {"drug", "medication", "medicine", "pharmaceutical"},
      {"quantity", "amount", "dose", "dosage"},
      {"name", "title", "label"},
      {"concept", "code", "term"},
      {"hospital", "facility", "clinic"},
      {"diagnosis", "condition", "disease"},
      {"procedure", "operation", "intervention"},
      {"measurement", "lab", "laboratory", "test", "assay"},
      {"value", "result", "reading"},
      {"death", "mortality", "expiry"},
      {"exposure", "administration", "dispensing"},
      {"occurrence", "event", "episode"},
      {"type", "kind", "category"},
      {"race", "ethnicity"},
      {"specialty", "discipline", "expertise"},
      {"prescription", "order", "script"},
      {"customer", "client", "buyer"},
      {"address", "residence"},
      {"product", "item", "article"},
      {"price", "cost"},
  };
  d.abbreviations = {
      {"id", {"identification", "identifier"}},
      {"loc", {"location"}},
      {"hadm", {"hospital admission"}},
      {"dob", {"date of birth", "birth date"}},
      {"dod", {"date of death", "death date"}},
      {"dt", {"date", "datetime"}},
      {"subj", {"subject"}},
      {"pt", {"patient"}},
      {"adm", {"admission"}},
      {"disch", {"discharge"}},
      {"num", {"number"}},
      {"nbr", {"number"}},
      {"cust", {"customer"}},
      {"addr", {"address"}},
      {"qty", {"quantity"}},
      {"amt", {"amount"}},
      {"desc", {"description"}},
      {"cg", {"caregiver"}},
      {"cgid", {"caregiver identifier"}},
      {"rx", {"prescription"}},
      {"dx", {"diagnosis"}},
      {"proc", {"procedure"}},
      {"med", {"medication"}},
      {"icu", {"intensive care unit"}},
      {"wrd", {"ward"}},
      {"prov", {"provider"}},
      {"dept", {"department"}},
      {"org", {"organization"}},
      {"seq", {"sequence"}},
      {"tm", {"time"}},
      {"ts", {"timestamp"}},
      {"val", {"value"}},
      {"uom", {"unit of measure"}},
      {"los", {"length of stay"}},
      {"nm", {"name"}},
      {"cd", {"code"}},
      {"typ", {"type"}},
      {"cnt", {"count"}},
      {"ord", {"order"}},
      {"hdr", {"header"}},
      {"mrn", {"medical record number"}},
      {"sku", {"stock keeping unit"}},
  };
  return d;
}

// ---- prompt reading -------------------------------------------------------

struct PromptView {
  std::string task;
  std::map<std::string, std::string, std::less<>> fields;  // from "### Input"
  std::vector<std::string> list_lines;                     // "- ..." lines
};

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    out.push_back(text.substr(0, nl));
    if (nl == std::string_view::npos) break;
    text = text.substr(nl + 1);
  }
  return out;
}

PromptView read_prompt(std::string_view prompt) {
  PromptView view;
  const auto lines = lines_of(prompt);
  if (!lines.empty()) {
    const auto first = trim(lines.front());
    if (first.starts_with("[task: ") && first.ends_with("]")) {
      auto body = first.substr(7, first.size() - 8);
      view.task = std::string(body.substr(0, body.find(' ')));
    }
  }
  // Only the last "### Input" section describes the request; earlier ones
  // belong to the worked example.
  std::size_t input_at = lines.size();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]) == "### Input") input_at = i;
  }
  std::string_view section;
  for (std::size_t i = input_at; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.starts_with("### ")) {
      section = line.substr(4);
      continue;
    }
    if (section == "Input") {
      const auto colon = line.find(": ");
      if (colon != std::string_view::npos) {
        view.fields.emplace(std::string(line.substr(0, colon)), std::string(trim(line.substr(colon + 2))));
      } else if (line.ends_with(':')) {
        view.fields.emplace(std::string(line.substr(0, line.size() - 1)), std::string());
      }
    } else if ((section == "Candidates" || section == "Target tables") && line.starts_with("- ")) {
      view.list_lines.emplace_back(line.substr(2));
    }
  }
  return view;
}

std::string field(const PromptView& v, std::string_view key) {
  auto it = v.fields.find(key);
  if (it == v.fields.end() || it->second == "(no description)") return {};
  return it->second;
}

std::vector<std::string> split(std::string_view text, std::string_view sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto at = text.find(sep, start);
    auto piece = trim(text.substr(start, at == std::string_view::npos ? text.npos : at - start));
    if (!piece.empty()) out.emplace_back(piece);
    if (at == std::string_view::npos) break;
    start = at + sep.size();
  }
  return out;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (w.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

std::string numbered_block(std::string_view tag, const std::vector<std::string>& items) {
  std::ostringstream out;
  out << "<" << tag << ">\n";
  for (std::size_t i = 0; i < items.size(); ++i) out << (i + 1) << ". " << items[i] << "\n";
  out << "</" << tag << ">\n";
  return out.str();
}

using ConceptSet = std::set<std::string>;

ConceptSet concept_set(const MockLexicon& lex, std::string_view text) {
  const auto tokens = normalize_name(text).tokens;
  const auto c = lex.concepts(tokens);
  return ConceptSet(c.begin(), c.end());
}

double jaccard(const ConceptSet& a, const ConceptSet& b) {
  if (a.empty() || b.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

std::size_t requested_count(const PromptView& v, std::string_view prompt) {
  // "Finish with exactly N name(s)" / "Choose the N target columns".
  for (std::string_view marker : {"exactly ", "Choose the "}) {
    const auto at = prompt.find(marker);
    if (at == std::string_view::npos) continue;
    std::size_t n = 0;
    std::size_t i = at + marker.size();
    while (i < prompt.size() && std::isdigit(static_cast<unsigned char>(prompt[i]))) {
      n = n * 10 + static_cast<std::size_t>(prompt[i] - '0');
      ++i;
    }
    if (n > 0) return n;
  }
  (void)v;
  return 3;
}

// ---- tasks ----------------------------------------------------------------

std::vector<std::string> expand_words(const MockLexicon& lex, const std::vector<std::string>& tokens,
                                      std::size_t variant) {
  std::vector<std::string> words;
  for (const auto& t : tokens) {
    auto exp = lex.expansions(t);
    if (exp.empty()) {
      words.push_back(t);
    } else {
      words.push_back(exp[std::min(variant, exp.size() - 1)]);
    }
  }
  return words;
}

std::string answer_expansion(const MockLexicon& lex, const PromptView& v, std::size_t count) {
  const auto column = normalize_name(field(v, "Column name")).tokens;
  const auto table = normalize_name(field(v, "Table name")).tokens;
  const auto original = join(column);

  std::vector<std::string> candidates;
  candidates.push_back(join(expand_words(lex, column, 0)));
  candidates.push_back(join(expand_words(lex, column, 1)));

  auto base = expand_words(lex, column, 0);
  const auto base_tokens = normalize_name(join(base)).tokens;
  std::vector<std::string> qualified;
  for (const auto& t : table) {
    const auto s = singular(t);
    auto e = lex.expansions(s);
    const std::string word = e.empty() ? s : e.front();
    if (std::find(base_tokens.begin(), base_tokens.end(), word) == base_tokens.end()) {
      qualified.push_back(word);
    }
  }
  qualified.insert(qualified.end(), base.begin(), base.end());
  candidates.push_back(join(qualified));

  std::vector<std::string> described;
  for (const auto& t : normalize_name(field(v, "Column description")).tokens) {
    if (stopwords().count(t) == 0) described.push_back(t);
    if (described.size() == 4) break;
  }
  candidates.push_back(join(described));

  std::vector<std::string> names;
  std::set<std::string> seen{original};
  for (const auto& c : candidates) {
    const auto key = normalize_name(c).joined();
    if (key.empty() || !seen.insert(key).second) continue;
    names.push_back(c);
    if (names.size() == count) break;
  }
  return "Reasoning: expanded the abbreviations in the column name using the table context.\n" +
         numbered_block("names", names);
}

std::string answer_cross(const MockLexicon& lex, const PromptView& v, std::size_t count) {
  const auto column = normalize_name(field(v, "Column name")).tokens;
  const auto table = normalize_name(field(v, "Table name")).tokens;
  std::set<std::string> forbidden;
  for (const auto* list : {&column, &table}) {
    for (const auto& t : *list) {
      forbidden.insert(t);
      forbidden.insert(singular(t));
    }
  }
  auto allowed = [&](const std::string& w) {
    return forbidden.count(w) == 0 && forbidden.count(singular(w)) == 0;
  };

  std::vector<std::string> words;
  for (const auto& t : column) {
    auto exp = lex.expansions(t);
    if (exp.empty()) {
      words.push_back(t);
    } else {
      for (auto& w : normalize_name(exp.front()).tokens) words.push_back(w);
    }
  }

  std::vector<std::string> names;
  std::set<std::string> seen;
  for (std::size_t variant = 0; variant < count + 3 && names.size() < count; ++variant) {
    std::vector<std::string> out;
    for (const auto& w : words) {
      if (auto g = lex.group_of(w)) {
        std::vector<std::string> alts;
        for (const auto& m : lex.group(*g)) {
          if (m != w && m != singular(w) && allowed(m)) alts.push_back(m);
        }
        if (!alts.empty()) {
          out.push_back(alts[variant % alts.size()]);
          continue;
        }
      }
      if (allowed(w) && stopwords().count(w) == 0) out.push_back(w);
    }
    const auto name = join(out);
    if (!name.empty() && seen.insert(name).second) names.push_back(name);
  }
  return "Reasoning: replaced each word with terminology other schemas commonly use.\n" +
         numbered_block("names", names);
}

std::string answer_table_selection(const MockLexicon& lex, const PromptView& v) {
  auto strip = [](ConceptSet s) {
    for (auto it = s.begin(); it != s.end();) {
      it = stopwords().count(*it) ? s.erase(it) : std::next(it);
    }
    return s;
  };
  const ConceptSet source =
      strip(concept_set(lex, field(v, "Source table") + " " + field(v, "Source table description")));
  std::vector<std::pair<std::string, std::size_t>> scored;
  std::size_t best = 0;
  for (const auto& line : v.list_lines) {
    const auto colon = line.find(':');
    const std::string name(trim(std::string_view(line).substr(0, colon)));
    const std::string desc = colon == std::string::npos ? "" : line.substr(colon + 1);
    const ConceptSet target = strip(concept_set(lex, name + " " + desc));
    std::size_t overlap = 0;
    for (const auto& c : source) overlap += target.count(c);
    best = std::max(best, overlap);
    scored.emplace_back(name, overlap);
  }
  std::vector<std::string> selected;
  if (best > 0) {
    for (const auto& [name, overlap] : scored) {
      if (overlap == best) selected.push_back(name);
    }
  }
  return "Reasoning: kept the tables whose subject matches the source table.\n" +
         numbered_block("tables", selected);
}

std::string answer_ranking(const MockLexicon& lex, const MockLlmOptions& opts, const PromptView& v,
                           std::size_t limit) {
  std::vector<ConceptSet> source;
  source.push_back(concept_set(lex, field(v, "Source column")));
  for (const auto& n : split(field(v, "Source names"), ";")) source.push_back(concept_set(lex, n));

  struct Scored {
    std::string ref;
    double score;
    std::size_t position;
  };
  std::vector<Scored> considered;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < v.list_lines.size(); ++i) {
    const auto parts = split(v.list_lines[i], " | ");
    if (parts.empty()) continue;
    const std::string& ref = parts.front();
    if (i >= opts.attention_span) {
      rest.push_back(ref);
      continue;
    }
    std::vector<ConceptSet> names;
    const auto dot = ref.find('.');
    names.push_back(concept_set(lex, dot == std::string::npos ? ref : ref.substr(dot + 1)));
    for (const auto& p : parts) {
      if (p.starts_with("names:")) {
        for (const auto& n : split(std::string_view(p).substr(6), ";")) names.push_back(concept_set(lex, n));
      }
    }
    double best = 0.0;
    for (const auto& s : source) {
      for (const auto& n : names) best = std::max(best, jaccard(s, n));
    }
    considered.push_back({ref, best, i});
  }
  std::stable_sort(considered.begin(), considered.end(),
                   [](const Scored& a, const Scored& b) { return a.score > b.score; });
  std::vector<std::string> ranked;
  for (const auto& s : considered) ranked.push_back(s.ref);
  ranked.insert(ranked.end(), rest.begin(), rest.end());
  if (ranked.size() > limit) ranked.resize(limit);
  return "Reasoning: compared the meaning of the source names with each candidate.\n" +
         numbered_block("ranking", ranked);
}

}  // namespace

// ---- MockLexicon ----------------------------------------------------------

MockLexicon::MockLexicon(Data data) : data_(std::move(data)) {
  for (std::size_t g = 0; g < data_.synonym_groups.size(); ++g) {
    for (const auto& member : data_.synonym_groups[g]) {
      if (!group_index_.emplace(member, g).second) {
        throw ValidationError("mock lexicon: '" + member + "' appears in two synonym groups");
      }
    }
  }
  const nlohmann::json doc{{"synonyms", data_.synonym_groups}, {"abbreviations", data_.abbreviations}};
  fingerprint_ = sha256_hex(doc.dump()).substr(0, 12);
}

const MockLexicon& MockLexicon::builtin() {
  static const MockLexicon lexicon(builtin_data());
  return lexicon;
}

MockLexicon MockLexicon::load(const std::filesystem::path& path) {
  const auto doc = parse_json_document(read_file(path), path.string());
  Data d;
  try {
    d.synonym_groups = doc.at("synonyms").get<std::vector<std::vector<std::string>>>();
    if (doc.contains("abbreviations")) {
      d.abbreviations = doc.at("abbreviations").get<std::map<std::string, std::vector<std::string>>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return MockLexicon(std::move(d));
}

std::span<const std::string> MockLexicon::expansions(std::string_view token) const {
  auto it = data_.abbreviations.find(std::string(token));
  if (it == data_.abbreviations.end()) return {};
  return it->second;
}

std::optional<std::size_t> MockLexicon::group_of(std::string_view token) const {
  if (auto it = group_index_.find(std::string(token)); it != group_index_.end()) return it->second;
  if (auto it = group_index_.find(singular(token)); it != group_index_.end()) return it->second;
  return std::nullopt;
}

std::string MockLexicon::concept_of(std::string_view token) const {
  if (auto g = group_of(token)) return "#" + std::to_string(*g);
  return singular(token);
}

std::vector<std::string> MockLexicon::concepts(std::span<const std::string> tokens) const {
  std::vector<std::string> out;
  for (const auto& t : tokens) {
    auto exp = expansions(t);
    if (exp.empty()) {
      if (stopwords().count(t) == 0) out.push_back(concept_of(t));
      continue;
    }
    for (const auto& w : normalize_name(exp.front()).tokens) {
      if (stopwords().count(w) == 0) out.push_back(concept_of(w));
    }
  }
  return out;
}

// ---- MockLlm --------------------------------------------------------------

MockLlm::MockLlm(const MockLexicon& lexicon, MockLlmOptions options)
    : lexicon_(lexicon), options_(options) {
  if (options_.attention_span == 0) throw ValidationError("mock LLM attention span must be positive");
}

std::string MockLlm::id() const {
  return "mock-llm/v1/a" + std::to_string(options_.attention_span) + "/lex-" + lexicon_.fingerprint();
}

std::string MockLlm::generate(const GenerationRequest& request) {
  const PromptView view = read_prompt(request.prompt);
  const std::size_t count = requested_count(view, request.prompt);
  if (view.task == "name-expansion") return answer_expansion(lexicon_, view, count);
  if (view.task == "cross-terminology") return answer_cross(lexicon_, view, count);
  if (view.task == "table-selection") return answer_table_selection(lexicon_, view);
  if (view.task == "ranking") return answer_ranking(lexicon_, options_, view, view.list_lines.size());
  if (view.task == "needle-ranking") return answer_ranking(lexicon_, options_, view, count);
  return "I am not able to help with that request.";
}

// ---- MockEmbedder ---------------------------------------------------------

MockEmbedder::MockEmbedder(std::size_t dimension, const MockLexicon& lexicon, double concept_weight)
    : dimension_(dimension), lexicon_(lexicon), concept_weight_(concept_weight) {
  if (dimension_ == 0) throw ValidationError("mock embedder dimension must be positive");
  if (concept_weight_ < 0.0 || concept_weight_ > 1.0) {
    throw ValidationError("mock embedder concept weight must lie in [0, 1]");
  }
}

std::string MockEmbedder::id() const {
  std::ostringstream out;
  out << "mock-embedding/v1/d" << dimension_ << "/w" << concept_weight_ << "/lex-" << lexicon_.fingerprint();
  return out.str();
}

std::vector<double> MockEmbedder::seeded_unit(std::string_view seed) const {
  std::mt19937_64 rng(fnv1a64(seed) ^ (0x9e3779b97f4a7c15ULL * dimension_));
  std::vector<double> v(dimension_);
  double sq = 0.0;
  for (auto& x : v) {
    // 53 random mantissa bits mapped onto [-1, 1).
    x = static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0;
    sq += x * x;
  }
  const double n = std::sqrt(sq);
  for (auto& x : v) x /= n;
  return v;
}

std::vector<double> MockEmbedder::token_vector(const std::string& token) const {
  auto own = seeded_unit("token:" + token);
  if (auto g = lexicon_.group_of(token)) {
    const auto shared = seeded_unit("concept:" + std::to_string(*g));
    const double w = concept_weight_;
    const double r = std::sqrt(1.0 - w * w);
    for (std::size_t i = 0; i < own.size(); ++i) own[i] = w * shared[i] + r * own[i];
  }
  return own;
}

EmbeddingVector MockEmbedder::embed_one(std::string_view text) const {
  const auto tokens = normalize_name(text).tokens;
  if (tokens.empty()) return EmbeddingVector::unit(seeded_unit("raw:" + std::string(text)));
  std::vector<double> sum(dimension_, 0.0);
  for (const auto& t : tokens) {
    const auto tv = token_vector(t);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += tv[i];
  }
  return EmbeddingVector::unit(std::move(sum));
}

std::vector<EmbeddingVector> MockEmbedder::embed(std::span<const std::string> texts) {
  if (texts.empty()) throw ValidationError("embed: empty input list");
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

}  // namespace schemamatch
