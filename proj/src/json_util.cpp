#include "schemamatch/json_util.hpp"

#include "schemamatch/errors.hpp"

namespace schemamatch {

using nlohmann::json;

json parse_json_document(std::string_view text, std::string_view origin) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t col = 1;
    const std::size_t limit = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < limit; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(std::string(origin) + ":" + std::to_string(line) + ":" + std::to_string(col) +
                     ": invalid JSON (" + e.what() + ")");
  }
}

std::string JsonReader::where(std::string_view field) const {
  std::string p = path_;
  if (!field.empty()) {
    if (!p.empty()) p += ".";
    p += field;
  }
  return origin_ + ": " + (p.empty() ? "<root>" : p);
}

bool JsonReader::has(std::string_view field) const {
  return node_.is_object() && node_.contains(std::string(field)) && !node_.at(std::string(field)).is_null();
}

const json& JsonReader::member(std::string_view field) const {
  if (!node_.is_object()) throw ParseError(where("") + ": expected an object");
  auto it = node_.find(std::string(field));
  if (it == node_.end()) throw ParseError(where(field) + ": missing required field");
  return *it;
}

std::string JsonReader::required_string(std::string_view field) const {
  const json& v = member(field);
  if (!v.is_string()) throw ParseError(where(field) + ": expected string");
  return v.get<std::string>();
}

std::optional<std::string> JsonReader::optional_string(std::string_view field) const {
  if (!has(field)) return std::nullopt;
  const json& v = node_.at(std::string(field));
  if (!v.is_string()) throw ParseError(where(field) + ": expected string");
  return v.get<std::string>();
}

double JsonReader::number_or(std::string_view field, double fallback) const {
  if (!has(field)) return fallback;
  const json& v = node_.at(std::string(field));
  if (!v.is_number()) throw ParseError(where(field) + ": expected number");
  return v.get<double>();
}

long long JsonReader::integer_or(std::string_view field, long long fallback) const {
  if (!has(field)) return fallback;
  const json& v = node_.at(std::string(field));
  if (!v.is_number_integer()) throw ParseError(where(field) + ": expected integer");
  return v.get<long long>();
}

bool JsonReader::bool_or(std::string_view field, bool fallback) const {
  if (!has(field)) return fallback;
  const json& v = node_.at(std::string(field));
  if (!v.is_boolean()) throw ParseError(where(field) + ": expected boolean");
  return v.get<bool>();
}

JsonReader JsonReader::object(std::string_view field) const {
  const json& v = member(field);
  if (!v.is_object()) throw ParseError(where(field) + ": expected object");
  std::string p = path_.empty() ? std::string(field) : path_ + "." + std::string(field);
  return JsonReader(v, origin_, std::move(p));
}

void JsonReader::for_each(std::string_view field, const std::function<void(const JsonReader&)>& fn) const {
  const json& v = member(field);
  if (!v.is_array()) throw ParseError(where(field) + ": expected array");
  const std::string base = path_.empty() ? std::string(field) : path_ + "." + std::string(field);
  for (std::size_t i = 0; i < v.size(); ++i) {
    fn(JsonReader(v[i], origin_, base + "[" + std::to_string(i) + "]"));
  }
}

}  // namespace schemamatch
