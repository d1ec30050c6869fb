#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace schemamatch {

// Parses JSON; syntax errors become ParseError carrying line and column.
nlohmann::json parse_json_document(std::string_view text, std::string_view origin);

// Read-only cursor over a JSON object that reports failures with the full
// field path ("schema.json: tables[2].columns[0].name: expected string").
class JsonReader {
 public:
  JsonReader(const nlohmann::json& node, std::string origin, std::string path = "")
      : node_(node), origin_(std::move(origin)), path_(std::move(path)) {}

  const nlohmann::json& node() const noexcept { return node_; }
  std::string where(std::string_view field) const;

  bool has(std::string_view field) const;
  std::string required_string(std::string_view field) const;
  std::optional<std::string> optional_string(std::string_view field) const;
  double number_or(std::string_view field, double fallback) const;
  long long integer_or(std::string_view field, long long fallback) const;
  bool bool_or(std::string_view field, bool fallback) const;
  JsonReader object(std::string_view field) const;
  // Calls `fn` for each element of the array at `field` (required).
  void for_each(std::string_view field, const std::function<void(const JsonReader&)>& fn) const;

 private:
  const nlohmann::json& member(std::string_view field) const;

  const nlohmann::json& node_;
  std::string origin_;
  std::string path_;
};

}  // namespace schemamatch
