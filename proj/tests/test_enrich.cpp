#include <catch_amalgamated.hpp>

#include "schemamatch/enrich.hpp"
#include "schemamatch/errors.hpp"
#include "schemamatch/mock_providers.hpp"
#include "test_support.hpp"

using namespace schemamatch;

namespace {

const TableMeta kWards{"WARDS", "Physical units of the hospital", {}};
const ColumnMeta kLocId{ColumnRef("WARDS", "loc_id"), "Location of the ward", std::nullopt};
const ColumnMeta kWardId{ColumnRef("WARDS", "ward_id"), "Unique ward number", std::nullopt};

std::vector<std::string> texts(const EnrichedColumn& c, NameOrigin origin) {
  std::vector<std::string> out;
  for (const auto& n : c.names) {
    if (n.origin == origin) out.push_back(n.tokens.joined());
  }
  return out;
}

bool is_task(const GenerationRequest& r, std::string_view task) {
  return r.prompt.starts_with("[task: " + std::string(task));
}

}  // namespace

TEST_CASE("abbreviated names are expanded", "[enrich]") {
  MockLlm llm;
  const auto c = enrich_column(kLocId, kWards, {}, llm);
  const auto expansions = texts(c, NameOrigin::kExpansion);
  CHECK(std::find(expansions.begin(), expansions.end(), "location identification") != expansions.end());
  CHECK(c.original().origin == NameOrigin::kOriginal);
  CHECK(c.original().text == "loc_id");
  CHECK(c.original().tokens.joined() == "loc id");
  CHECK(std::count_if(c.names.begin(), c.names.end(), [](auto& n) { return n.origin == NameOrigin::kOriginal; }) == 1);
  CHECK(c.table_description == "Physical units of the hospital");
}

TEST_CASE("cross-terminology names avoid table and column words", "[enrich]") {
  MockLlm llm;
  const auto c = enrich_column(kWardId, kWards, {}, llm);
  const auto cross = texts(c, NameOrigin::kCrossTerminology);
  REQUIRE_FALSE(cross.empty());
  CHECK(cross.front() == "location identifier");
  for (const auto& name : cross) {
    for (const auto& t : normalize_name(name).tokens) {
      CHECK(t != "ward");
      CHECK(t != "wards");
      CHECK(t != "id");
    }
  }
}

TEST_CASE("names reusing forbidden words or repeating others are dropped", "[enrich]") {
  testing::ScriptedLlm llm([](const GenerationRequest& r) {
    if (is_task(r, "name-expansion")) return testing::numbered("names", {"Ward ID", "ward identifier", "WARD_IDENTIFIER"});
    return testing::numbered("names", {"ward number", "location key", "site key", "clinic key"});
  });
  const auto c = enrich_column(kWardId, kWards, {}, llm);
  CHECK(texts(c, NameOrigin::kExpansion) == std::vector<std::string>{"ward identifier"});
  CHECK(texts(c, NameOrigin::kCrossTerminology) == std::vector<std::string>{"location key", "site key"});
  // Positions refer to the reply list.
  CHECK(c.names[1].position == 2);
  CHECK(c.names[2].position == 3);
  CHECK(c.names.size() == 4);
}

TEST_CASE("num_names truncation keeps a prefix", "[enrich][property]") {
  MockLlm llm;
  const std::vector<ColumnMeta> columns{
      kLocId, kWardId, {ColumnRef("WARDS", "cgid"), "Caregiver", std::nullopt},
      {ColumnRef("WARDS", "admit_dt"), "When the stay began", std::nullopt}};
  for (const auto& col : columns) {
    EnrichmentConfig full;
    const auto all = enrich_column(col, kWards, full, llm);
    for (int n = 1; n <= 3; ++n) {
      EnrichmentConfig cfg;
      cfg.num_names = n;
      const auto some = enrich_column(col, kWards, cfg, llm);
      for (auto origin : {NameOrigin::kExpansion, NameOrigin::kCrossTerminology}) {
        const auto a = texts(all, origin);
        const auto s = texts(some, origin);
        INFO(col.ref.display() << " n=" << n);
        CHECK(s.size() <= static_cast<std::size_t>(n));
        REQUIRE(s.size() <= a.size());
        CHECK(std::equal(s.begin(), s.end(), a.begin()));
      }
    }
  }
}

TEST_CASE("replies longer than generate_count are cut before filtering", "[enrich]") {
  testing::ScriptedLlm llm([](const GenerationRequest& r) {
    if (is_task(r, "name-expansion")) return testing::numbered("names", {"ward id", "ward number"});
    return testing::numbered("names", {"a b", "c d", "e f", "g h", "i j"});
  });
  EnrichmentConfig cfg;
  cfg.num_names = 3;
  const auto c = enrich_column(kWardId, kWards, cfg, llm);
  CHECK(texts(c, NameOrigin::kExpansion) == std::vector<std::string>{"ward number"});
  CHECK(texts(c, NameOrigin::kCrossTerminology) == std::vector<std::string>{"a b", "c d", "e f"});
}

TEST_CASE("prompt switches", "[enrich]") {
  MockLlm llm;
  EnrichmentConfig cfg;
  cfg.use_expansion_prompt = false;
  const auto c = enrich_column(kLocId, kWards, cfg, llm);
  CHECK(texts(c, NameOrigin::kExpansion).empty());
  CHECK_FALSE(texts(c, NameOrigin::kCrossTerminology).empty());
}

TEST_CASE("an unusable reply is repaired once", "[enrich]") {
  int call = 0;
  testing::ScriptedLlm llm([&](const GenerationRequest& r) -> std::string {
    if (++call == 1) return "Sure! Here are some names: location id, site id";
    CHECK(r.prompt.find("### Format correction") != std::string::npos);
    return testing::numbered("names", {"location identification"});
  });
  const auto names = generate_list(llm, "[task: name-expansion v1]\n", "names");
  CHECK(names == std::vector<std::string>{"location identification"});
  CHECK(llm.calls == 2);

  testing::ScriptedLlm broken([](const GenerationRequest&) { return std::string("no list here"); });
  CHECK_THROWS_AS(generate_list(broken, "p", "names"), ParseError);
  CHECK(broken.calls == 2);
}

TEST_CASE("enrichment config validation", "[enrich]") {
  EnrichmentConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.num_names = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.num_names = 4;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.generate_count = 4;
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("schema enrichment is deterministic and round-trips", "[enrich][artifact]") {
  const auto schema = load_schema(testing::fixture("target_schema.json"));
  MockLlm llm;
  const auto a = enrich_schema(schema, {}, llm, 4, true, "hash-1");
  const auto b = enrich_schema(schema, {}, llm, 1, true, "hash-1");
  CHECK(serialize_enrichment(a) == serialize_enrichment(b));
  CHECK(a.columns.size() == schema.column_count());
  const auto back = parse_enrichment(serialize_enrichment(a), schema);
  CHECK(back.columns == a.columns);
  CHECK(back.config_hash == "hash-1");
  CHECK(a.find(ColumnRef("person", "PERSON_ID")) != nullptr);

  testing::ScriptedLlm never([](const GenerationRequest&) -> std::string { FAIL("provider called"); return ""; });
  const auto plain = enrich_schema(schema, {}, never, 4, false, "h");
  CHECK(plain.name_count() == schema.column_count());

  const auto other = load_schema(testing::fixture("source_schema.json"));
  CHECK_THROWS_AS(parse_enrichment(serialize_enrichment(a), other), StaleArtifactError);
}

TEST_CASE("name counts follow num_names", "[enrich][artifact]") {
  const auto schema = load_schema(testing::fixture("target_schema.json"));
  MockLlm llm;
  EnrichmentConfig one;
  one.num_names = 1;
  const auto n1 = enrich_schema(schema, one, llm, 4, true, "");
  const auto n3 = enrich_schema(schema, {}, llm, 4, true, "");
  std::size_t extra = 0;
  for (std::size_t i = 0; i < n3.columns.size(); ++i) {
    CHECK(n3.columns[i].names.size() >= n1.columns[i].names.size());
    extra += n3.columns[i].names.size() - n1.columns[i].names.size();
  }
  CHECK(n3.name_count() - n1.name_count() == extra);
  CHECK(extra > 0);
}
