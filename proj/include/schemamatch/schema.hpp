#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace schemamatch {

// (table, column) identifier. Spelling is preserved for display; equality,
// ordering and hashing use the case-folded form.
class ColumnRef {
 public:
  // Throws ValidationError if either part is empty after trimming.
  ColumnRef(std::string_view table_name, std::string_view column_name);

  const std::string& table_name() const noexcept { return table_; }
  const std::string& column_name() const noexcept { return column_; }

  // "table.column", case-folded.
  std::string canonical() const { return table_key_ + "." + column_key_; }
  // "TABLE.column", as spelled.
  std::string display() const { return table_ + "." + column_; }

  const std::string& table_key() const noexcept { return table_key_; }
  const std::string& column_key() const noexcept { return column_key_; }

  friend bool operator==(const ColumnRef& a, const ColumnRef& b) noexcept {
    return a.table_key_ == b.table_key_ && a.column_key_ == b.column_key_;
  }
  friend std::strong_ordering operator<=>(const ColumnRef& a, const ColumnRef& b) noexcept {
    if (auto c = a.table_key_ <=> b.table_key_; c != 0) return c;
    return a.column_key_ <=> b.column_key_;
  }

 private:
  std::string table_;
  std::string column_;
  std::string table_key_;
  std::string column_key_;
};

struct ColumnRefHash {
  std::size_t operator()(const ColumnRef& ref) const noexcept;
};

struct ColumnMeta {
  ColumnRef ref;
  std::string description;
  std::optional<std::string> data_type;

  friend bool operator==(const ColumnMeta&, const ColumnMeta&) = default;
};

struct TableMeta {
  std::string name;
  std::string description;
  std::vector<ColumnMeta> columns;

  const ColumnMeta* find_column(std::string_view column_name) const;

  friend bool operator==(const TableMeta&, const TableMeta&) = default;
};

// A validated relational schema: unique table names, unique column names
// per table, at least one table, and at least one column per table.
// Immutable after construction.
class SchemaDef {
 public:
  // Throws DuplicateError / ValidationError on invariant violations.
  SchemaDef(std::string name, std::vector<TableMeta> tables);

  const std::string& name() const noexcept { return name_; }
  const std::vector<TableMeta>& tables() const noexcept { return tables_; }

  const TableMeta* find_table(std::string_view table_name) const;
  const ColumnMeta* find_column(const ColumnRef& ref) const;
  bool contains(const ColumnRef& ref) const { return find_column(ref) != nullptr; }

  std::size_t column_count() const noexcept;
  // Every column in declaration order.
  std::vector<const ColumnMeta*> columns() const;

  friend bool operator==(const SchemaDef&, const SchemaDef&) = default;

 private:
  std::string name_;
  std::vector<TableMeta> tables_;
};

SchemaDef load_schema(const std::filesystem::path& path);
SchemaDef parse_schema(std::string_view text, std::string_view origin = "<memory>");
std::string serialize_schema(const SchemaDef& schema);

// Source column -> set of target columns. An empty set marks an NA column
// (labeled as having no counterpart), which is distinct from an absent
// entry.
class GroundTruth {
 public:
  struct Entry {
    ColumnRef source;
    std::vector<ColumnRef> targets;
  };

  GroundTruth(std::string source_schema, std::string target_schema, std::vector<Entry> entries);

  const std::string& source_schema() const noexcept { return source_schema_; }
  const std::string& target_schema() const noexcept { return target_schema_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }

  // nullptr when the source column has no entry at all.
  const std::vector<ColumnRef>* find(const ColumnRef& source) const;

  // True when some source column maps to more than one target.
  bool has_multi_target_entries() const noexcept;
  std::size_t na_count() const noexcept;

 private:
  std::string source_schema_;
  std::string target_schema_;
  std::vector<Entry> entries_;
  std::unordered_map<ColumnRef, std::size_t, ColumnRefHash> index_;
};

// Rows: source_table, source_column, target_table, target_column. Blank
// lines and '#' comments are skipped, as is an optional header row. The
// literal token NA in both target fields marks an unmatchable column.
GroundTruth load_ground_truth(const std::filesystem::path& path, const SchemaDef& source,
                              const SchemaDef& target);
GroundTruth parse_ground_truth(std::string_view text, const SchemaDef& source,
                               const SchemaDef& target, std::string_view origin = "<memory>");

std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace schemamatch
