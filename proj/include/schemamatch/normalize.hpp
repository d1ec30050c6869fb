#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace schemamatch {

// A raw name and the ordered lowercase alphabetic tokens derived from it.
struct TokenizedName {
  std::string raw;
  std::vector<std::string> tokens;

  // Tokens joined by a single space ("location id").
  std::string joined() const;

  friend bool operator==(const TokenizedName&, const TokenizedName&) = default;
};

// Cleans and tokenizes an identifier or generated name.
//
// Every character that is not a letter (digits, punctuation, parentheses,
// underscores, whitespace) acts as a delimiter; consecutive delimiters
// collapse. Letter runs are then split at camelCase boundaries: a
// lower-to-upper transition starts a new token, and an upper-case run
// followed by a lower-case letter gives up its last letter to the next
// token ("IDNumber" -> "id", "number"). Tokens are lowercased. Non-ASCII
// letters are kept. Total function; may return no tokens.
TokenizedName normalize_name(std::string_view raw);

// Lowercases UTF-8 text (simple per-code-point mapping). Bytes that do not
// decode are passed through unchanged.
std::string fold_case(std::string_view text);

// Trims ASCII whitespace from both ends.
std::string_view trim(std::string_view text) noexcept;

}  // namespace schemamatch
