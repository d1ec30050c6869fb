#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "schemamatch/commands.hpp"
#include "schemamatch/schema.hpp"
#include "test_support.hpp"

using namespace schemamatch;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "schemamatch");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Fixture config rewritten with absolute paths into a scratch directory.
fs::path write_config(const testing::TempDir& dir, const nlohmann::json& patch = nlohmann::json::object(),
                      const std::string& name = "config.json") {
  auto cfg = nlohmann::json::parse(read_file(testing::fixture("config.json")));
  for (const char* key : {"source_schema", "target_schema", "ground_truth"}) {
    cfg[key] = testing::fixture(cfg[key].get<std::string>()).string();
  }
  cfg["cache_dir"] = (dir / "cache").string();
  cfg["artifact_dir"] = (dir / "artifacts").string();
  cfg["output_dir"] = (dir / "runs").string();
  cfg.merge_patch(patch);
  const auto path = dir / name;
  write_file_atomic(path, cfg.dump(2));
  return path;
}

std::size_t documents(const std::string& index_output) {
  std::smatch m;
  const std::regex re(R"((\d+) documents)");
  REQUIRE(std::regex_search(index_output, m, re));
  return std::stoul(m[1]);
}

}  // namespace

TEST_CASE("index, match and evaluate end to end", "[cli]") {
  testing::TempDir dir;
  const auto cfg = write_config(dir).string();

  auto r = run({"--config", cfg, "match"});
  CHECK(r.code == 1);
  CHECK(r.err.find("\"validation\"") != std::string::npos);

  r = run({"--config", cfg, "index"});
  REQUIRE(r.code == 0);
  CHECK(r.out.starts_with("built "));
  CHECK(fs::exists(dir / "artifacts" / kEnrichmentArtifact));
  CHECK(fs::exists(dir / "artifacts" / kLexicalArtifact));
  CHECK(fs::exists(dir / "artifacts" / kVectorArtifact));
  r = run({"--config", cfg, "index"});
  CHECK(r.out.starts_with("up to date"));
  r = run({"--config", cfg, "--rebuild", "index"});
  CHECK(r.out.starts_with("built "));

  r = run({"--config", cfg, "match"});
  REQUIRE(r.code == 0);
  const auto manifest = dir / "runs" / "manifest.json";
  REQUIRE(fs::exists(manifest));
  const auto first = read_file(manifest);

  r = run({"--config", cfg, "evaluate"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("HitRate@K") != std::string::npos);
  CHECK(r.out.find("(1 NA excluded)") != std::string::npos);
  CHECK(fs::exists(dir / "runs" / "manifest.report.json"));
  CHECK(fs::exists(dir / "runs" / "manifest.report.txt"));
  CHECK(fs::exists(dir / "runs" / "manifest.per_query.tsv"));
  const auto report = read_file(dir / "runs" / "manifest.report.json");

  // Second run on warm caches and existing artifacts: same bytes.
  REQUIRE(run({"--config", cfg, "match"}).code == 0);
  CHECK(read_file(manifest) == first);
  REQUIRE(run({"--config", cfg, "evaluate", "--manifest", manifest.string()}).code == 0);
  CHECK(read_file(dir / "runs" / "manifest.report.json") == report);

  r = run({"--config", cfg, "--k", "1,2", "evaluate"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("\n   2  ") != std::string::npos);
  CHECK(run({"--config", cfg, "--k", "11", "evaluate"}).code == 1);  // beyond emit_k
}

TEST_CASE("fresh directories reproduce the same bytes", "[cli]") {
  testing::TempDir a;
  testing::TempDir b;
  std::vector<std::string> manifests;
  for (const auto* dir : {&a, &b}) {
    const auto cfg = write_config(*dir).string();
    REQUIRE(run({"--config", cfg, "index"}).code == 0);
    REQUIRE(run({"--config", cfg, "match"}).code == 0);
    REQUIRE(run({"--config", cfg, "evaluate"}).code == 0);
    manifests.push_back(read_file(*dir / "runs" / "manifest.json"));
    manifests.push_back(read_file(*dir / "runs" / "manifest.report.json"));
  }
  CHECK(manifests[0] == manifests[2]);
  CHECK(manifests[1] == manifests[3]);
}

TEST_CASE("ablation needs matching artifacts", "[cli]") {
  testing::TempDir dir;
  const auto cfg = write_config(dir).string();
  REQUIRE(run({"--config", cfg, "index"}).code == 0);
  auto r = run({"--config", cfg, "--ablate", "document_enrichment", "match"});
  CHECK(r.code == 1);
  CHECK(r.err.find("--rebuild") != std::string::npos);
  r = run({"--config", cfg, "--ablate", "document_enrichment", "--rebuild", "match"});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "runs" / "manifest.ablate-document_enrichment.json"));
  // Query-side removal reuses the target artifacts.
  REQUIRE(run({"--config", cfg, "--rebuild", "index"}).code == 0);
  CHECK(run({"--config", cfg, "--ablate", "query_enrichment", "match"}).code == 0);
  CHECK(run({"--config", cfg, "--ablate", "nonsense", "match"}).code == 1);
  CHECK(run({"--config", cfg, "--ablate", "embedding_search", "--ablate", "fulltext_search", "match"}).code == 1);
}

TEST_CASE("needle baseline runs without artifacts", "[cli]") {
  testing::TempDir dir;
  const auto cfg = write_config(dir).string();
  auto r = run({"--config", cfg, "--baseline", "needle", "match"});
  REQUIRE(r.code == 0);
  const auto manifest = dir / "runs" / "manifest.needle.json";
  REQUIRE(fs::exists(manifest));
  CHECK_FALSE(fs::exists(dir / "artifacts" / kVectorArtifact));
  CHECK(parse_manifest(read_file(manifest)).baseline());
  CHECK(run({"--config", cfg, "--baseline", "needle", "evaluate"}).code == 0);
  CHECK(run({"--config", cfg, "--baseline", "other", "match"}).code == 1);

  const auto tight = write_config(dir, {{"needle", {{"context_budget_tokens", 10}}}}, "tight.json").string();
  r = run({"--config", tight, "--baseline", "needle", "match"});
  CHECK(r.code == 1);
  CHECK(r.err.find("budget") != std::string::npos);
}

TEST_CASE("m:n ground truth hides hit rate unless forced", "[cli]") {
  testing::TempDir dir;
  const auto cfg = write_config(dir, {{"ground_truth", testing::fixture("ground_truth_mn.csv").string()}}).string();
  REQUIRE(run({"--config", cfg, "--baseline", "needle", "match"}).code == 0);
  auto r = run({"--config", cfg, "--baseline", "needle", "evaluate"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("   HitRate@K") == std::string::npos);
  CHECK(r.out.find("Recall@K") != std::string::npos);
  CHECK(r.out.find("--force") != std::string::npos);
  r = run({"--config", cfg, "--baseline", "needle", "--force", "evaluate"});
  CHECK(r.out.find("   HitRate@K") != std::string::npos);
}

TEST_CASE("evaluation refuses manifests from other schemas", "[cli]") {
  testing::TempDir dir;
  const auto cfg = write_config(dir).string();
  REQUIRE(run({"--config", cfg, "--baseline", "needle", "match"}).code == 0);
  const auto manifest = dir / "runs" / "manifest.needle.json";
  auto doc = nlohmann::ordered_json::parse(read_file(manifest));
  doc["target_schema"]["hash"] = "0000";
  write_file_atomic(manifest, doc.dump(2));
  const auto r = run({"--config", cfg, "--baseline", "needle", "evaluate"});
  CHECK(r.code == 3);
  CHECK(r.err.find("\"evaluation\"") != std::string::npos);
  CHECK(run({"--config", cfg, "evaluate", "--manifest", (dir / "missing.json").string()}).code == 1);
}

TEST_CASE("configuration errors exit with 1", "[cli]") {
  testing::TempDir dir;
  const auto no_key = write_config(dir,
                                   {{"providers", {{"mock", false}, {"credential_env", "SCHEMAMATCH_TEST_UNSET_KEY"}}}},
                                   "http.json")
                          .string();
  ::unsetenv("SCHEMAMATCH_TEST_UNSET_KEY");
  auto r = run({"--config", no_key, "index"});
  CHECK(r.code == 1);
  CHECK(r.err.find("SCHEMAMATCH_TEST_UNSET_KEY") != std::string::npos);
  // --mock-providers overrides the HTTP setting.
  CHECK(run({"--config", no_key, "--mock-providers", "--baseline", "needle", "match"}).code == 0);

  const auto secret = write_config(dir, {{"providers", {{"api_key", "sk-test"}}}}, "secret.json").string();
  CHECK(run({"--config", secret, "index"}).code == 1);
  const auto typo = write_config(dir, {{"retreival", {{"top_k", 5}}}}, "typo.json").string();
  CHECK(run({"--config", typo, "index"}).code == 1);
  CHECK(run({"--config", (dir / "absent.json").string(), "index"}).code == 1);
  CHECK(run({"index"}).code == 1);
  CHECK(run({"--config", no_key}).code == 1);
}

TEST_CASE("enrichment size changes the document count", "[cli]") {
  testing::TempDir dir;
  const auto three = write_config(dir, {{"artifact_dir", (dir / "a3").string()}}, "n3.json").string();
  const auto one = write_config(dir, {{"artifact_dir", (dir / "a1").string()}, {"enrichment", {{"num_names", 1}}}},
                                "n1.json")
                       .string();
  auto r3 = run({"--config", three, "index"});
  auto r1 = run({"--config", one, "index"});
  REQUIRE(r3.code == 0);
  REQUIRE(r1.code == 0);
  const auto target = load_schema(testing::fixture("target_schema.json"));
  CHECK(documents(r1.out) < documents(r3.out));
  CHECK(documents(r1.out) <= 3 * target.column_count());
  CHECK(documents(r3.out) <= 7 * target.column_count());
  CHECK(documents(r1.out) >= target.column_count());
}
