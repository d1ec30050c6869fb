#include "schemamatch/normalize.hpp"

#include <cwctype>
#include <locale>
#include <optional>

namespace schemamatch {
namespace {

// Case mapping and letter classification for non-ASCII code points come from
// the C.UTF-8 locale when the platform provides it.
const std::ctype<wchar_t>& wide_ctype() {
  static const std::locale loc = [] {
    for (const char* name : {"C.UTF-8", "C.utf8", "en_US.UTF-8"}) {
      try {
        return std::locale(name);
      } catch (const std::runtime_error&) {
      }
    }
    return std::locale::classic();
  }();
  return std::use_facet<std::ctype<wchar_t>>(loc);
}

struct Decoded {
  char32_t cp;
  std::size_t length;
  bool valid;
};

Decoded decode_utf8(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return {b0, 1, true};
  std::size_t len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return {b0, 1, false};
  }
  if (i + len > s.size()) return {b0, 1, false};
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) return {b0, 1, false};
    cp = (cp << 6) | (b & 0x3F);
  }
  return {cp, len, true};
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

enum class Case { kNone, kLower, kUpper };

struct Letter {
  char32_t lower;
  Case letter_case;
};

// nullopt for anything that is not a letter.
std::optional<Letter> classify(char32_t cp) {
  if (cp < 0x80) {
    if (cp >= 'a' && cp <= 'z') return Letter{cp, Case::kLower};
    if (cp >= 'A' && cp <= 'Z') return Letter{cp + 32, Case::kUpper};
    return std::nullopt;
  }
  const auto& ct = wide_ctype();
  const auto wc = static_cast<wchar_t>(cp);
  if (!ct.is(std::ctype_base::alpha, wc)) return std::nullopt;
  const auto lower = static_cast<char32_t>(ct.tolower(wc));
  if (ct.is(std::ctype_base::upper, wc)) return Letter{lower, Case::kUpper};
  if (ct.is(std::ctype_base::lower, wc)) return Letter{lower, Case::kLower};
  return Letter{lower, Case::kNone};
}

}  // namespace

std::string TokenizedName::joined() const {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

std::string_view trim(std::string_view text) noexcept {
  constexpr std::string_view kSpace = " \t\r\n\f\v";
  const auto first = text.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(kSpace);
  return text.substr(first, last - first + 1);
}

std::string fold_case(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    const auto d = decode_utf8(text, i);
    if (!d.valid) {
      out.push_back(text[i]);
    } else if (auto letter = classify(d.cp)) {
      append_utf8(out, letter->lower);
    } else {
      out.append(text.substr(i, d.length));
    }
    i += d.length;
  }
  return out;
}

TokenizedName normalize_name(std::string_view raw) {
  TokenizedName result{std::string(raw), {}};

  // Collect maximal letter runs; every non-letter code point is a delimiter.
  std::vector<std::vector<Letter>> runs(1);
  for (std::size_t i = 0; i < raw.size();) {
    const auto d = decode_utf8(raw, i);
    i += d.length;
    std::optional<Letter> letter = d.valid ? classify(d.cp) : std::nullopt;
    if (letter) {
      runs.back().push_back(*letter);
    } else if (!runs.back().empty()) {
      runs.emplace_back();
    }
  }

  auto emit = [&](const std::vector<Letter>& run, std::size_t begin, std::size_t end) {
    if (begin >= end) return;
    std::string token;
    for (std::size_t k = begin; k < end; ++k) append_utf8(token, run[k].lower);
    result.tokens.push_back(std::move(token));
  };

  for (const auto& run : runs) {
    std::size_t start = 0;
    for (std::size_t k = 1; k < run.size(); ++k) {
      const Case prev = run[k - 1].letter_case;
      const Case cur = run[k].letter_case;
      const bool lower_to_upper = prev == Case::kLower && cur == Case::kUpper;
      const bool acronym_end = prev == Case::kUpper && cur == Case::kUpper && k + 1 < run.size() &&
                               run[k + 1].letter_case == Case::kLower;
      if (lower_to_upper || acronym_end) {
        emit(run, start, k);
        start = k;
      }
    }
    emit(run, start, run.size());
  }
  return result;
}

}  // namespace schemamatch
