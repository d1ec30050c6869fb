#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace schemamatch {

// Prompt templates ship as versioned files under prompts/ and are compiled
// into the library.
enum class PromptTemplate {
  kNameExpansion,
  kCrossTerminology,
  kExpansionExample,
  kCrossTerminologyExample,
  kTableSelection,
  kRanking,
  kNeedle,
  kRepair,
};

std::string_view prompt_template(PromptTemplate which);
std::string_view prompt_template_file(PromptTemplate which);

using TemplateVars = std::vector<std::pair<std::string_view, std::string>>;

// Substitutes {{key}} placeholders. Throws Error if a placeholder is left
// unbound or a variable is unused.
std::string render_template(std::string_view tmpl, const TemplateVars& vars);

// "(no description)" for blank text, else the trimmed text.
std::string or_placeholder(std::string_view text);

// Appends the format-correction instruction used for the single repair
// retry.
std::string with_repair_instruction(std::string_view prompt, std::string_view tag,
                                    std::string_view reason);

// Extracts the items of the last "<tag> ... </tag>" block in an LLM reply.
// Each non-blank line must read "<n>. item" (or "<n>) item") with n counting
// up from 1. Surrounding quotes or backticks are stripped. Throws ParseError.
std::vector<std::string> parse_numbered_block(std::string_view reply, std::string_view tag);

}  // namespace schemamatch
