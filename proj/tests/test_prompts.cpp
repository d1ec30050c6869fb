#include <catch_amalgamated.hpp>

#include "schemamatch/enrich.hpp"
#include "schemamatch/errors.hpp"
#include "schemamatch/prompts.hpp"

using namespace schemamatch;

namespace {

bool contains(std::string_view haystack, std::string_view needle) {
  return haystack.find(needle) != std::string_view::npos;
}

}  // namespace

TEST_CASE("templates are versioned and tagged", "[prompts]") {
  CHECK(prompt_template_file(PromptTemplate::kNameExpansion) == "name_expansion.v1.txt");
  CHECK(prompt_template(PromptTemplate::kNameExpansion).starts_with("[task: name-expansion v1]"));
  CHECK(prompt_template(PromptTemplate::kCrossTerminology).starts_with("[task: cross-terminology v1]"));
  CHECK(prompt_template(PromptTemplate::kTableSelection).starts_with("[task: table-selection v1]"));
  CHECK(prompt_template(PromptTemplate::kRanking).starts_with("[task: ranking v1]"));
  CHECK(prompt_template(PromptTemplate::kNeedle).starts_with("[task: needle-ranking v1]"));
}

TEST_CASE("render_template binds every placeholder exactly", "[prompts]") {
  CHECK(render_template("{{a}} and {{b}} and {{a}}", {{"a", "x"}, {"b", "y"}}) == "x and y and x");
  CHECK_THROWS_AS(render_template("{{a}} {{b}}", {{"a", "x"}}), Error);
  CHECK_THROWS_AS(render_template("{{a}}", {{"a", "x"}, {"c", "z"}}), Error);
  CHECK(render_template("no placeholders", {}) == "no placeholders");
}

TEST_CASE("blank descriptions get a placeholder", "[prompts]") {
  CHECK(or_placeholder("  ") == "(no description)");
  CHECK(or_placeholder(" Customer key ") == "Customer key");
}

TEST_CASE("numbered blocks parse from the last tagged block", "[prompts]") {
  const std::string reply =
      "Thinking about <names>\n1. draft\n</names>\nFinal:\n<names>\n1. location id\n2) \"ward number\"\n\n3. `site key`\n</names>\n";
  CHECK(parse_numbered_block(reply, "names") == std::vector<std::string>{"location id", "ward number", "site key"});
  CHECK(parse_numbered_block("<tables>\n</tables>", "tables").empty());
}

TEST_CASE("malformed blocks raise ParseError", "[prompts]") {
  CHECK_THROWS_AS(parse_numbered_block("1. a\n2. b", "names"), ParseError);
  CHECK_THROWS_AS(parse_numbered_block("<names>\n1. a\n3. b\n</names>", "names"), ParseError);
  CHECK_THROWS_AS(parse_numbered_block("<names>\n- a\n</names>", "names"), ParseError);
  CHECK_THROWS_AS(parse_numbered_block("<names>\n1. a\n", "names"), ParseError);
  CHECK_THROWS_AS(parse_numbered_block("<names>\n1. a\n</names>", "ranking"), ParseError);
}

TEST_CASE("repair instruction names the tag and the reason", "[prompts]") {
  const auto p = with_repair_instruction("PROMPT", "ranking", "no <ranking> block");
  CHECK(p.starts_with("PROMPT"));
  CHECK(contains(p, "<ranking> and </ranking>"));
  CHECK(contains(p, "no <ranking> block"));
}

TEST_CASE("expansion prompt carries the column metadata and a worked example", "[prompts][enrich]") {
  const TableMeta table{"WARDS", "Physical units of the hospital", {}};
  const ColumnMeta column{ColumnRef("WARDS", "loc_id"), "Where the ward is", std::nullopt};
  const auto p = build_expansion_prompt(column, table, 3);
  CHECK(contains(p, "Table name: WARDS"));
  CHECK(contains(p, "Table description: Physical units of the hospital"));
  CHECK(contains(p, "Column name: loc_id"));
  CHECK(contains(p, "Column description: Where the ward is"));
  CHECK(contains(p, "exactly 3 names"));
  CHECK(contains(p, "ORD_HDR"));
  CHECK(contains(p, "### Example"));
  CHECK(contains(build_expansion_prompt(column, table, 1), "exactly 1 name "));
}

TEST_CASE("cross-terminology prompt lists forbidden words and omits descriptions", "[prompts][enrich]") {
  const TableMeta table{"WARDS", "Physical units of the hospital", {}};
  const ColumnMeta column{ColumnRef("WARDS", "ward_id"), "Unique ward number", std::nullopt};
  CHECK(forbidden_tokens(column, table) == std::vector<std::string>{"wards", "ward", "id"});
  const auto p = build_cross_terminology_prompt(column, table, 2);
  CHECK(contains(p, "Forbidden words: wards, ward, id"));
  CHECK(contains(p, "Column name: ward_id"));
  CHECK_FALSE(contains(p, "Unique ward number"));
  CHECK_FALSE(contains(p, "Physical units"));
  CHECK(contains(p, "exactly 2 names"));
}
