#include "schemamatch/prompts.hpp"

#include <cctype>

#include "schemamatch/errors.hpp"
#include "schemamatch/normalize.hpp"

namespace schemamatch {
namespace {
#include "prompt_templates.inc"
}  // namespace

std::string_view prompt_template(PromptTemplate which) {
  switch (which) {
    case PromptTemplate::kNameExpansion: return kTemplate_name_expansion;
    case PromptTemplate::kCrossTerminology: return kTemplate_cross_terminology;
    case PromptTemplate::kExpansionExample: return kTemplate_example_ecommerce_expansion;
    case PromptTemplate::kCrossTerminologyExample: return kTemplate_example_ecommerce_cross_terminology;
    case PromptTemplate::kTableSelection: return kTemplate_table_selection;
    case PromptTemplate::kRanking: return kTemplate_ranking;
    case PromptTemplate::kNeedle: return kTemplate_needle;
    case PromptTemplate::kRepair: return kTemplate_repair;
  }
  return {};
}

std::string_view prompt_template_file(PromptTemplate which) {
  switch (which) {
    case PromptTemplate::kNameExpansion: return "name_expansion.v1.txt";
    case PromptTemplate::kCrossTerminology: return "cross_terminology.v1.txt";
    case PromptTemplate::kExpansionExample: return "example_ecommerce_expansion.v1.txt";
    case PromptTemplate::kCrossTerminologyExample: return "example_ecommerce_cross_terminology.v1.txt";
    case PromptTemplate::kTableSelection: return "table_selection.v1.txt";
    case PromptTemplate::kRanking: return "ranking.v1.txt";
    case PromptTemplate::kNeedle: return "needle.v1.txt";
    case PromptTemplate::kRepair: return "repair.v1.txt";
  }
  return {};
}

std::string render_template(std::string_view tmpl, const TemplateVars& vars) {
  std::vector<bool> used(vars.size(), false);
  std::string out;
  out.reserve(tmpl.size() * 2);
  std::size_t pos = 0;
  while (true) {
    const auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) throw Error("prompt template has an unterminated placeholder");
    out.append(tmpl.substr(pos, open - pos));
    const auto key = tmpl.substr(open + 2, close - open - 2);
    bool found = false;
    for (std::size_t i = 0; i < vars.size(); ++i) {
      if (vars[i].first == key) {
        out += vars[i].second;
        used[i] = true;
        found = true;
        break;
      }
    }
    if (!found) throw Error("prompt template placeholder '" + std::string(key) + "' is unbound");
    pos = close + 2;
  }
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (!used[i]) throw Error("prompt variable '" + std::string(vars[i].first) + "' is unused");
  }
  return out;
}

std::string or_placeholder(std::string_view text) {
  const auto t = trim(text);
  return t.empty() ? std::string("(no description)") : std::string(t);
}

std::string with_repair_instruction(std::string_view prompt, std::string_view tag,
                                    std::string_view reason) {
  std::string out(prompt);
  while (!out.empty() && (out.back() == '\n' || out.back() == ' ')) out.pop_back();
  out += render_template(prompt_template(PromptTemplate::kRepair),
                         {{"reason", std::string(reason)}, {"tag", std::string(tag)}});
  return out;
}

std::vector<std::string> parse_numbered_block(std::string_view reply, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  const auto begin = reply.rfind(open);
  if (begin == std::string_view::npos) throw ParseError("reply has no " + open + " block");
  const auto end = reply.find(close, begin);
  if (end == std::string_view::npos) throw ParseError("reply has an unterminated " + open + " block");

  std::vector<std::string> items;
  std::string_view body = reply.substr(begin + open.size(), end - begin - open.size());
  while (!body.empty()) {
    const auto nl = body.find('\n');
    std::string_view line = trim(body.substr(0, nl));
    body = nl == std::string_view::npos ? std::string_view{} : body.substr(nl + 1);
    if (line.empty()) continue;

    std::size_t digits = 0;
    while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) ++digits;
    if (digits == 0 || digits >= line.size() || (line[digits] != '.' && line[digits] != ')')) {
      throw ParseError("line '" + std::string(line) + "' is not a numbered entry");
    }
    const auto number = std::stoul(std::string(line.substr(0, digits)));
    if (number != items.size() + 1) {
      throw ParseError("entry numbered " + std::to_string(number) + " where " +
                       std::to_string(items.size() + 1) + " was expected");
    }
    std::string_view item = trim(line.substr(digits + 1));
    while (item.size() >= 2 && ((item.front() == '"' && item.back() == '"') ||
                                (item.front() == '`' && item.back() == '`') ||
                                (item.front() == '\'' && item.back() == '\''))) {
      item = trim(item.substr(1, item.size() - 2));
    }
    if (item.empty()) throw ParseError("entry " + std::to_string(number) + " is empty");
    items.emplace_back(item);
  }
  return items;
}

}  // namespace schemamatch
