// Acceptance checks. Prints one [PASS]/[FAIL] line per criterion and exits
// non-zero if any fails.

#include <chrono>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "generators.hpp"
#include "oracles.hpp"
#include "schemamatch/commands.hpp"
#include "schemamatch/eval.hpp"
#include "schemamatch/lexical_index.hpp"
#include "schemamatch/mock_providers.hpp"
#include "schemamatch/normalize.hpp"
#include "schemamatch/pipeline.hpp"
#include "schemamatch/vector_index.hpp"
#include "test_support.hpp"

using namespace schemamatch;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f s", s);
  return buf;
}

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// ---- offline CLI runs over the fixture ----

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "schemamatch");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string fixture_config(const testing::TempDir& dir) {
  auto cfg = nlohmann::json::parse(read_file(testing::fixture("config.json")));
  for (const char* key : {"source_schema", "target_schema", "ground_truth"}) {
    cfg[key] = testing::fixture(cfg[key].get<std::string>()).string();
  }
  cfg["cache_dir"] = (dir / "cache").string();
  cfg["artifact_dir"] = (dir / "artifacts").string();
  cfg["output_dir"] = (dir / "runs").string();
  cfg["ks"] = {1, 3, 5};
  const auto path = dir / "config.json";
  write_file_atomic(path, cfg.dump(2));
  return path.string();
}

void require_ok(const CliResult& r, const std::string& what) {
  if (r.code != 0) throw std::runtime_error(what + " exited " + std::to_string(r.code) + ": " + r.err);
}

// Hit rate per K from a written report.
std::map<std::size_t, double> hit_rates(const fs::path& report) {
  std::map<std::size_t, double> out;
  const auto doc = nlohmann::json::parse(read_file(report));
  for (const auto& row : doc.at("metrics")) {
    out[row.at("k").get<std::size_t>()] = row.at("hit_rate").get<double>();
  }
  return out;
}

// Full run: index, match (optionally ablated), evaluate.
std::map<std::size_t, double> full_run(const std::string& cfg, const std::vector<std::string>& extra,
                                       const fs::path& report) {
  auto args = std::vector<std::string>{"--config", cfg};
  args.insert(args.end(), extra.begin(), extra.end());
  auto with = [&](const std::string& sub) {
    auto a = args;
    a.push_back(sub);
    return a;
  };
  require_ok(cli(with("match")), "match");
  require_ok(cli(with("evaluate")), "evaluate");
  return hit_rates(report);
}

// ---- criteria ----

Outcome ac1_bm25() {
  Stopwatch clock;
  std::mt19937_64 rng(1001);
  double worst = 0.0;
  std::size_t compared = 0;
  for (int c = 0; c < 50; ++c) {
    auto corpus = gen::random_corpus(rng, 200, 50);
    const auto index = LexicalIndex::build(corpus.lexical);
    for (int q = 0; q < 20; ++q) {
      const auto query = gen::random_query(rng, 50);
      const double threshold = q % 2 == 0 ? 0.0 : 1.0;
      const auto got = index.search(query, 50, threshold);
      const auto want = oracle::bm25(corpus.docs, query, 1.2, 0.75, 50, threshold);
      if (got.size() != want.size()) return {false, "result sizes differ on corpus " + std::to_string(c)};
      for (std::size_t i = 0; i < got.size(); ++i) {
        if (got[i].matched_doc != want[i].doc) {
          return {false, "ranking differs on corpus " + std::to_string(c) + " at rank " + std::to_string(i)};
        }
        worst = std::max(worst, std::abs(got[i].score - want[i].score));
        ++compared;
      }
    }
  }
  const double t = clock.seconds();
  return {worst <= 1e-9 && t < 10.0, "50 corpora, " + std::to_string(compared) + " hits, max |score diff| " +
                                         fmt_g(worst) + " (<= 1e-9), " + fmt_seconds(t) + " (< 10 s)"};
}

Outcome ac2_vector() {
  Stopwatch clock;
  std::mt19937_64 rng(2002);
  std::uniform_int_distribution<std::size_t> count(1, 500);
  double worst = 0.0;
  std::size_t compared = 0;
  for (int c = 0; c < 50; ++c) {
    const std::size_t dim = c % 2 == 0 ? 16 : 384;
    const auto raw = gen::clustered_vectors(rng, count(rng), dim, c % 3 == 0 ? 3.0 : 0.7);
    const auto index = VectorIndex::build(gen::vector_docs(raw));
    const auto queries = gen::clustered_vectors(rng, 10, dim, 1.0);
    for (std::size_t q = 0; q < queries.size(); ++q) {
      const double threshold = q % 2 == 0 ? -1.0 : 0.5;
      const std::size_t k = q % 3 == 0 ? 10 : 500;
      const auto got = index.search(EmbeddingVector(queries[q]), k, threshold);
      const auto want = oracle::exhaustive_scan(raw, queries[q], k, threshold);
      if (got.size() != want.size()) return {false, "result sizes differ on index " + std::to_string(c)};
      for (std::size_t i = 0; i < got.size(); ++i) {
        worst = std::max(worst, std::abs(got[i].similarity - want[i].score));
        // A different doc at the same rank is only acceptable as a tie.
        if (got[i].matched_doc != want[i].doc &&
            std::abs(oracle::cosine(raw[got[i].matched_doc], queries[q]) - want[i].score) > 1e-12) {
          return {false, "ordering differs on index " + std::to_string(c) + " at rank " + std::to_string(i)};
        }
        ++compared;
      }
    }
  }
  const double t = clock.seconds();
  return {worst <= 1e-9 && t < 10.0, "50 indexes (dims 16/384), " + std::to_string(compared) +
                                         " hits, max |similarity diff| " + fmt_g(worst) + " (<= 1e-9), " +
                                         fmt_seconds(t) + " (< 10 s)"};
}

Outcome ac3_metrics() {
  Stopwatch clock;
  std::mt19937_64 rng(3003);
  std::size_t checks = 0;
  std::size_t one_to_one = 0;
  for (int f = 0; f < 100; ++f) {
    const bool single = f % 2 == 0;
    const auto c = gen::random_metric_case(rng, single ? 1 : 4);
    for (std::size_t k : {1, 2, 3, 5, 10}) {
      for (auto policy : {NaPolicy::kExclude, NaPolicy::kScore}) {
        const auto want = oracle::recount(c.queries, k, policy == NaPolicy::kScore);
        const double hit = hit_rate_at_k(c.predictions, c.gt, k, policy);
        const double rec = recall_at_k(c.predictions, c.gt, k, policy);
        if (hit != want.hit_rate || rec != want.recall) {
          return {false, "fixture " + std::to_string(f) + " k=" + std::to_string(k) + " disagrees with the recount"};
        }
        if (single && std::memcmp(&hit, &rec, sizeof hit) != 0) {
          return {false, "1:1 fixture " + std::to_string(f) + " has HitRate != Recall at k=" + std::to_string(k)};
        }
        ++checks;
      }
    }
    one_to_one += single;
  }
  const double t = clock.seconds();
  return {t < 5.0, "100 fixtures (" + std::to_string(one_to_one) + " 1:1, rest m:n up to 4), " +
                       std::to_string(checks) + " exact comparisons, " + fmt_seconds(t) + " (< 5 s)"};
}

std::string random_identifier(std::mt19937_64& rng) {
  static const std::vector<std::string> words{"location", "id", "patient", "visit", "start", "date", "time",
                                              "ward",     "hadm", "dose",  "amt",  "drug",  "concept", "url",
                                              "http",     "icd", "code",   "care", "site",  "specialty"};
  static const std::string noise = "0123456789_-. ()/#:,;'\"[]{}+*&%$@!?~\t";
  std::uniform_int_distribution<int> style(0, 6);
  std::uniform_int_distribution<std::size_t> n_words(1, 4);
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_noise(0, noise.size() - 1);
  std::uniform_int_distribution<int> coin(0, 3);
  const int s = style(rng);
  std::string out;
  if (s == 6) {  // character soup
    const std::string soup = "abcXYZ" + noise + "\xC3\x89\xC3\xA9";  // É é
    std::uniform_int_distribution<std::size_t> ch(0, soup.size() - 1);
    for (int i = 0; i < 16; ++i) out.push_back(soup[ch(rng)]);
    return out;
  }
  for (auto n = n_words(rng); n > 0; --n) {
    std::string w = words[pick(rng)];
    switch (s) {
      case 0:  // camelCase / PascalCase
        if (!out.empty() || coin(rng) == 0) w[0] = static_cast<char>(std::toupper(w[0]));
        break;
      case 1:  // snake_case
        if (!out.empty()) out += "_";
        break;
      case 2:  // SCREAMING_SNAKE
        for (auto& ch : w) ch = static_cast<char>(std::toupper(ch));
        if (!out.empty()) out += "_";
        break;
      case 3:  // acronym runs glued to words: HTTPServerURL
        if (w.size() <= 4 || coin(rng) == 0) {
          for (auto& ch : w) ch = static_cast<char>(std::toupper(ch));
        } else {
          w[0] = static_cast<char>(std::toupper(w[0]));
        }
        break;
      case 4:  // digits between words
        if (!out.empty()) out += std::to_string(coin(rng) * 7);
        break;
      default:  // punctuation between words
        if (!out.empty()) out.push_back(noise[pick_noise(rng)]);
        break;
    }
    out += w;
  }
  if (coin(rng) == 0) out += std::to_string(coin(rng) + 1);
  return out;
}

Outcome ac4_normalization() {
  std::mt19937_64 rng(4004);
  const auto example = normalize_name("LocationID").tokens;
  if (example != std::vector<std::string>{"location", "id"}) return {false, "LocationID did not give [location, id]"};
  for (int i = 0; i < 1000; ++i) {
    const auto raw = random_identifier(rng);
    const auto once = normalize_name(raw);
    if (normalize_name(once.joined()).tokens != once.tokens) return {false, "not idempotent on '" + raw + "'"};
    for (const auto& t : once.tokens) {
      if (t.empty()) return {false, "empty token from '" + raw + "'"};
      if (fold_case(t) != t) return {false, "upper case left in '" + t + "' from '" + raw + "'"};
      for (unsigned char ch : t) {
        if (ch < 0x80 && !(ch >= 'a' && ch <= 'z')) return {false, "non-letter in '" + t + "' from '" + raw + "'"};
      }
    }
  }
  return {true, "LocationID -> [location, id]; 1000 generated identifiers idempotent, lowercase, letters only"};
}

struct FixtureRuns {
  std::map<std::size_t, double> full;
  std::map<std::size_t, double> no_query;
  std::map<std::size_t, double> no_document;
  double full_seconds = 0.0;
};

FixtureRuns& fixture_runs() {
  static FixtureRuns runs = [] {
    testing::TempDir dir;
    const auto cfg = fixture_config(dir);
    FixtureRuns r;
    Stopwatch clock;
    require_ok(cli({"--config", cfg, "index"}), "index");
    r.full = full_run(cfg, {}, dir / "runs" / "manifest.report.json");
    r.full_seconds = clock.seconds();
    r.no_query = full_run(cfg, {"--ablate", "query_enrichment"},
                          dir / "runs" / "manifest.ablate-query_enrichment.report.json");
    r.no_document = full_run(cfg, {"--ablate", "document_enrichment", "--rebuild"},
                             dir / "runs" / "manifest.ablate-document_enrichment.report.json");
    return r;
  }();
  return runs;
}

Outcome ac5_fixture() {
  const auto& r = fixture_runs();
  const double h1 = r.full.at(1);
  return {h1 == 1.0 && r.full_seconds < 30.0, "full pipeline HitRate@1 = " + format_percent(h1) +
                                                  " (= 100%), index+match+evaluate " + fmt_seconds(r.full_seconds) +
                                                  " (< 30 s)"};
}

Outcome ac6_ablation() {
  const auto& r = fixture_runs();
  const double full = r.full.at(1);
  const double q = r.no_query.at(1);
  const double d = r.no_document.at(1);
  return {q < full && d < full, "HitRate@1 full " + format_percent(full) + ", without query_enrichment " +
                                    format_percent(q) + ", without document_enrichment " + format_percent(d)};
}

Outcome ac7_needle() {
  testing::TempDir dir;
  const auto cfg = fixture_config(dir);
  require_ok(cli({"--config", cfg, "--baseline", "needle", "match"}), "needle match");
  for (const char* name : {kEnrichmentArtifact, kLexicalArtifact, kVectorArtifact}) {
    if (fs::exists(dir / "artifacts" / name)) return {false, std::string("needle run wrote ") + name};
  }
  const auto manifest = parse_manifest(read_file(dir / "runs" / "manifest.needle.json"));
  const auto source = load_schema(testing::fixture("source_schema.json"));
  const auto target = load_schema(testing::fixture("target_schema.json"));
  if (!manifest.baseline() || manifest.predictions.size() != source.column_count()) {
    return {false, "needle manifest is not a complete baseline run"};
  }
  for (const auto& p : manifest.predictions) {
    for (const auto& t : p.ranked_targets) {
      if (!target.contains(t)) return {false, "needle predicted unknown column " + t.display()};
    }
  }
  require_ok(cli({"--config", cfg, "--baseline", "needle", "evaluate"}), "needle evaluate");
  const double needle = hit_rates(dir / "runs" / "manifest.needle.report.json").at(5);
  const double pipeline = fixture_runs().full.at(5);
  return {needle < pipeline, "no artifacts written, valid manifest; HitRate@5 needle " + format_percent(needle) +
                                 " < pipeline " + format_percent(pipeline)};
}

Outcome ac8_reproducible() {
  std::vector<std::vector<std::string>> outputs;
  const std::vector<std::string> files{"manifest.json", "manifest.report.json", "manifest.report.txt",
                                       "manifest.per_query.tsv"};
  for (int run = 0; run < 2; ++run) {
    testing::TempDir dir;
    const auto cfg = fixture_config(dir);
    require_ok(cli({"--config", cfg, "index"}), "index");
    full_run(cfg, {}, dir / "runs" / "manifest.report.json");
    std::vector<std::string> bytes;
    for (const auto& f : files) bytes.push_back(read_file(dir / "runs" / f));
    outputs.push_back(std::move(bytes));
  }
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (outputs[0][i] != outputs[1][i]) return {false, files[i] + " differs between runs"};
  }
  return {true, "two fresh index+match+evaluate runs: manifest, report (json, txt) and per-query tsv byte-identical"};
}

Outcome ac9_thresholds() {
  std::mt19937_64 rng(9009);
  std::size_t lexical_hits = 0;
  std::size_t vector_hits = 0;
  for (int c = 0; c < 100; ++c) {
    auto corpus = gen::random_corpus(rng, 150, 40);
    const auto index = LexicalIndex::build(corpus.lexical);
    for (int q = 0; q < 10; ++q) {
      const auto query = gen::random_query(rng, 40);
      const auto hits = index.search(query, 1000, 1.0);
      const auto all = oracle::bm25(corpus.docs, query, 1.2, 0.75, 1000, 1.0);
      if (hits.size() != all.size()) return {false, "lexical hits above threshold were dropped or added"};
      for (const auto& h : hits) {
        if (h.score < 1.0) return {false, "lexical hit below 1.0: " + fmt_g(h.score)};
      }
      lexical_hits += hits.size();
    }
    const std::size_t dim = c % 2 == 0 ? 16 : 64;
    const auto raw = gen::clustered_vectors(rng, 200, dim, 1.0);
    const auto vindex = VectorIndex::build(gen::vector_docs(raw));
    for (const auto& qv : gen::clustered_vectors(rng, 10, dim, 1.0)) {
      const auto hits = vindex.search(EmbeddingVector(qv), 1000, 0.5);
      for (const auto& h : hits) {
        if (h.similarity < 0.5) return {false, "vector hit below 0.5: " + fmt_g(h.similarity)};
      }
      for (std::size_t d = 0; d < raw.size(); ++d) {
        const double s = oracle::cosine(raw[d], qv);
        const bool present = std::any_of(hits.begin(), hits.end(), [&](const VectorHit& h) { return h.matched_doc == d; });
        if (s >= 0.5 + 1e-12 && !present) return {false, "vector hit above 0.5 missing"};
        if (s < 0.5 - 1e-12 && present) return {false, "vector hit below 0.5 returned"};
      }
      vector_hits += hits.size();
    }
  }

  // Candidates the full retrieval stage produces on the fixture.
  const auto source = load_schema(testing::fixture("source_schema.json"));
  const auto target = load_schema(testing::fixture("target_schema.json"));
  MockLlm llm;
  MockEmbedder embedder;
  const auto index = build_target_index(target, enrich_schema(target, {}, llm, 4, true, "acceptance"), {}, embedder);
  std::size_t candidates = 0;
  for (const auto& t : source.tables()) {
    for (const auto& col : t.columns) {
      for (const auto& c : retrieve_candidates(enrich_column(col, t, {}, llm), index, {}, embedder)) {
        if (c.best_lexical_score && *c.best_lexical_score < 1.0) return {false, "fixture lexical score below 1.0"};
        if (c.best_vector_similarity && *c.best_vector_similarity < 0.5) {
          return {false, "fixture similarity below 0.5"};
        }
        ++candidates;
      }
    }
  }
  return {true, std::to_string(lexical_hits) + " lexical hits >= 1.0, " + std::to_string(vector_hits) +
                    " vector hits >= 0.5 (complete against the oracle), " + std::to_string(candidates) +
                    " fixture candidates within thresholds"};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC1 BM25 oracle equivalence", ac1_bm25},
      {"AC2 vector search exactness", ac2_vector},
      {"AC3 metric correctness", ac3_metrics},
      {"AC4 normalization properties", ac4_normalization},
      {"AC5 end-to-end fixture recovery", ac5_fixture},
      {"AC6 ablation ordering", ac6_ablation},
      {"AC7 needle baseline", ac7_needle},
      {"AC8 reproducibility", ac8_reproducible},
      {"AC9 threshold semantics", ac9_thresholds},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << name << ": " << o.detail << std::endl;
    failures += o.pass ? 0 : 1;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
