#include "schemamatch/schema.hpp"

#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <thread>
#include <algorithm>

#include <json.hpp>

#include "schemamatch/errors.hpp"
#include "schemamatch/json_util.hpp"
#include "schemamatch/normalize.hpp"

namespace schemamatch {

using nlohmann::json;

ColumnRef::ColumnRef(std::string_view table_name, std::string_view column_name)
    : table_(trim(table_name)), column_(trim(column_name)) {
  if (table_.empty() || column_.empty()) {
    throw ValidationError("column reference needs a non-empty table and column name, got '" +
                          std::string(table_name) + "." + std::string(column_name) + "'");
  }
  table_key_ = fold_case(table_);
  column_key_ = fold_case(column_);
}

std::size_t ColumnRefHash::operator()(const ColumnRef& ref) const noexcept {
  const std::size_t h = std::hash<std::string>{}(ref.table_key());
  return h ^ (std::hash<std::string>{}(ref.column_key()) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

const ColumnMeta* TableMeta::find_column(std::string_view column_name) const {
  const std::string key = fold_case(trim(column_name));
  for (const auto& c : columns) {
    if (c.ref.column_key() == key) return &c;
  }
  return nullptr;
}

SchemaDef::SchemaDef(std::string name, std::vector<TableMeta> tables)
    : name_(std::move(name)), tables_(std::move(tables)) {
  if (tables_.empty()) throw ValidationError("schema '" + name_ + "' has no tables");
  std::set<std::string> table_keys;
  for (const auto& table : tables_) {
    const std::string key = fold_case(trim(table.name));
    if (key.empty()) throw ValidationError("schema '" + name_ + "' has a table with an empty name");
    if (!table_keys.insert(key).second) {
      throw DuplicateError("schema '" + name_ + "': duplicate table '" + table.name + "'");
    }
    if (table.columns.empty()) {
      throw ValidationError("schema '" + name_ + "': table '" + table.name + "' has no columns");
    }
    std::set<std::string> column_keys;
    for (const auto& column : table.columns) {
      if (column.ref.table_key() != key) {
        throw ValidationError("column '" + column.ref.display() + "' is declared inside table '" +
                              table.name + "'");
      }
      if (!column_keys.insert(column.ref.column_key()).second) {
        throw DuplicateError("schema '" + name_ + "': duplicate column '" + column.ref.display() + "'");
      }
    }
  }
}

const TableMeta* SchemaDef::find_table(std::string_view table_name) const {
  const std::string key = fold_case(trim(table_name));
  for (const auto& t : tables_) {
    if (fold_case(trim(t.name)) == key) return &t;
  }
  return nullptr;
}

const ColumnMeta* SchemaDef::find_column(const ColumnRef& ref) const {
  const TableMeta* table = find_table(ref.table_name());
  return table ? table->find_column(ref.column_name()) : nullptr;
}

std::size_t SchemaDef::column_count() const noexcept {
  std::size_t n = 0;
  for (const auto& t : tables_) n += t.columns.size();
  return n;
}

std::vector<const ColumnMeta*> SchemaDef::columns() const {
  std::vector<const ColumnMeta*> out;
  out.reserve(column_count());
  for (const auto& t : tables_) {
    for (const auto& c : t.columns) out.push_back(&c);
  }
  return out;
}

SchemaDef parse_schema(std::string_view text, std::string_view origin) {
  const json doc = parse_json_document(text, origin);
  JsonReader root(doc, std::string(origin));
  std::string name = root.required_string("name");
  std::vector<TableMeta> tables;
  root.for_each("tables", [&](const JsonReader& t) {
    TableMeta table;
    table.name = std::string(trim(t.required_string("name")));
    table.description = t.optional_string("description").value_or("");
    t.for_each("columns", [&](const JsonReader& c) {
      const std::string column_name = c.required_string("name");
      try {
        table.columns.push_back(ColumnMeta{ColumnRef(table.name, column_name),
                                           c.optional_string("description").value_or(""),
                                           c.optional_string("data_type")});
      } catch (const ValidationError& e) {
        throw ParseError(c.where("name") + ": " + e.what());
      }
    });
    tables.push_back(std::move(table));
  });
  return SchemaDef(std::move(name), std::move(tables));
}

SchemaDef load_schema(const std::filesystem::path& path) {
  return parse_schema(read_file(path), path.string());
}

std::string serialize_schema(const SchemaDef& schema) {
  json doc;
  doc["name"] = schema.name();
  doc["tables"] = json::array();
  for (const auto& t : schema.tables()) {
    json table{{"name", t.name}, {"description", t.description}, {"columns", json::array()}};
    for (const auto& c : t.columns) {
      json column{{"name", c.ref.column_name()}, {"description", c.description}};
      if (c.data_type) column["data_type"] = *c.data_type;
      table["columns"].push_back(std::move(column));
    }
    doc["tables"].push_back(std::move(table));
  }
  return doc.dump(2) + "\n";
}

GroundTruth::GroundTruth(std::string source_schema, std::string target_schema,
                         std::vector<Entry> entries)
    : source_schema_(std::move(source_schema)),
      target_schema_(std::move(target_schema)),
      entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!index_.emplace(entries_[i].source, i).second) {
      throw DuplicateError("ground truth lists source column '" + entries_[i].source.display() +
                           "' twice");
    }
  }
}

const std::vector<ColumnRef>* GroundTruth::find(const ColumnRef& source) const {
  auto it = index_.find(source);
  return it == index_.end() ? nullptr : &entries_[it->second].targets;
}

bool GroundTruth::has_multi_target_entries() const noexcept {
  for (const auto& e : entries_) {
    if (e.targets.size() > 1) return true;
  }
  return false;
}

std::size_t GroundTruth::na_count() const noexcept {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.targets.empty() ? 1 : 0;
  return n;
}

namespace {

std::vector<std::string> split_row(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

bool is_header(const std::vector<std::string>& f) {
  return fold_case(f[0]) == "source_table" && fold_case(f[1]) == "source_column";
}

}  // namespace

GroundTruth parse_ground_truth(std::string_view text, const SchemaDef& source,
                               const SchemaDef& target, std::string_view origin) {
  struct Pending {
    ColumnRef source;
    std::vector<ColumnRef> targets;
    bool na = false;
  };
  std::vector<Pending> pending;
  std::unordered_map<ColumnRef, std::size_t, ColumnRefHash> slot;

  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto where = std::string(origin) + ":" + std::to_string(line_no);
    auto fields = split_row(body);
    if (fields.size() != 4) {
      throw ParseError(where + ": expected 4 comma-separated fields, got " + std::to_string(fields.size()));
    }
    if (is_header(fields)) continue;

    ColumnRef src = [&] {
      try {
        return ColumnRef(fields[0], fields[1]);
      } catch (const ValidationError& e) {
        throw ParseError(where + ": " + e.what());
      }
    }();
    if (!source.contains(src)) {
      throw UnknownColumnError(where + ": source column '" + src.display() +
                               "' does not exist in schema '" + source.name() + "'");
    }
    const bool na_row = fields[2] == "NA" && fields[3] == "NA";
    if (!na_row && (fields[2] == "NA" || fields[3] == "NA")) {
      throw ParseError(where + ": NA must appear in both target fields");
    }

    auto [it, inserted] = slot.emplace(src, pending.size());
    if (inserted) pending.push_back(Pending{src, {}, false});
    Pending& p = pending[it->second];

    if (na_row) {
      if (!p.targets.empty()) {
        throw ValidationError(where + ": '" + src.display() + "' is labeled NA but also has targets");
      }
      p.na = true;
      continue;
    }
    if (p.na) {
      throw ValidationError(where + ": '" + src.display() + "' is labeled NA but also has targets");
    }
    ColumnRef dst = [&] {
      try {
        return ColumnRef(fields[2], fields[3]);
      } catch (const ValidationError& e) {
        throw ParseError(where + ": " + e.what());
      }
    }();
    if (!target.contains(dst)) {
      throw UnknownColumnError(where + ": target column '" + dst.display() +
                               "' does not exist in schema '" + target.name() + "'");
    }
    if (std::find(p.targets.begin(), p.targets.end(), dst) == p.targets.end()) {
      p.targets.push_back(std::move(dst));
    }
  }

  std::vector<GroundTruth::Entry> entries;
  entries.reserve(pending.size());
  for (auto& p : pending) entries.push_back({std::move(p.source), std::move(p.targets)});
  return GroundTruth(source.name(), target.name(), std::move(entries));
}

GroundTruth load_ground_truth(const std::filesystem::path& path, const SchemaDef& source,
                              const SchemaDef& target) {
  return parse_ground_truth(read_file(path), source, target, path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("short write to '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace schemamatch
